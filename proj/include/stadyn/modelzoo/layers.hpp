#pragma once

// Differentiable building blocks over channels-last (frames, H, W, C)
// tensors. Backward functions accumulate parameter gradients (+=) and return
// input gradients.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stadyn/kernels/kernels.hpp"
#include "stadyn/numerics/tensor.hpp"

namespace stadyn::zoo {

template <typename T>
T sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

inline std::size_t positions(const Shape& s) { return s[0] * s[1] * s[2]; }

inline kernels::ConvShape conv_shape(const Shape& in, const Shape& w) {
  if (in.size() != 4 || w.size() != 5 || in[3] != w[3]) {
    throw std::invalid_argument("conv: input " + shape_to_string(in) + " incompatible with weights " +
                                shape_to_string(w));
  }
  if (w[0] % 2 == 0 || w[1] % 2 == 0 || w[2] % 2 == 0) throw std::invalid_argument("conv: even kernel extent");
  return {in[0], in[1], in[2], w[3], w[4], w[0], w[1], w[2]};
}

/// Same-padded stride-1 convolution; weights (kt, kh, kw, Cin, Cout).
template <typename T>
Tensor<T> conv(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>* bias) {
  const auto s = conv_shape(in.shape(), w.shape());
  Tensor<T> out({s.frames, s.height, s.width, s.out_channels});
  kernels::active<T>().conv_forward(s, in.raw(), w.raw(), bias ? bias->raw() : nullptr, out.raw());
  return out;
}

/// Weights flipped in space-time with in/out channels swapped, so that the
/// input gradient is a forward convolution of the output gradient.
template <typename T>
Tensor<T> transposed_kernel(const Tensor<T>& w) {
  const auto& s = w.shape();
  Tensor<T> out({s[0], s[1], s[2], s[4], s[3]});
  for (std::size_t a = 0; a < s[0]; ++a)
    for (std::size_t b = 0; b < s[1]; ++b)
      for (std::size_t c = 0; c < s[2]; ++c)
        for (std::size_t i = 0; i < s[3]; ++i)
          for (std::size_t o = 0; o < s[4]; ++o) {
            const std::size_t src = (((a * s[1] + b) * s[2] + c) * s[3] + i) * s[4] + o;
            const std::size_t dst =
                ((((s[0] - 1 - a) * s[1] + (s[1] - 1 - b)) * s[2] + (s[2] - 1 - c)) * s[4] + o) * s[3] + i;
            out[dst] = w[src];
          }
  return out;
}

template <typename T>
void conv_backward(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& dout, Tensor<T>& dw, Tensor<T>* db,
                   Tensor<T>* din) {
  const auto s = conv_shape(in.shape(), w.shape());
  const auto& k = kernels::active<T>();
  k.conv_weight_grad(s, in.raw(), dout.raw(), dw.raw());
  if (db) k.channel_sum(dout.raw(), s.frames * s.height * s.width, s.out_channels, db->raw());
  if (din) {
    const Tensor<T> wt = transposed_kernel(w);
    *din = conv(dout, wt, static_cast<const Tensor<T>*>(nullptr));
  }
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T{0} ? x[i] : T{0};
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& pre, const Tensor<T>& dout) {
  Tensor<T> out(pre.shape());
  for (std::size_t i = 0; i < pre.size(); ++i) out[i] = pre[i] > T{0} ? dout[i] : T{0};
  return out;
}

/// 2x2 spatial average pooling, stride 2.
template <typename T>
Tensor<T> avg_pool2(const Tensor<T>& x) {
  const auto F = x.extent(0), H = x.extent(1), W = x.extent(2), C = x.extent(3);
  Tensor<T> out({F, H / 2, W / 2, C});
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t y = 0; y < H / 2; ++y)
      for (std::size_t xx = 0; xx < W / 2; ++xx)
        for (std::size_t c = 0; c < C; ++c) {
          out.at(f, y, xx, c) = T(0.25) * (x.at(f, 2 * y, 2 * xx, c) + x.at(f, 2 * y, 2 * xx + 1, c) +
                                           x.at(f, 2 * y + 1, 2 * xx, c) + x.at(f, 2 * y + 1, 2 * xx + 1, c));
        }
  return out;
}

template <typename T>
Tensor<T> avg_pool2_backward(const Shape& in_shape, const Tensor<T>& dout) {
  Tensor<T> out(in_shape);
  const auto F = in_shape[0], H = in_shape[1], W = in_shape[2], C = in_shape[3];
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t y = 0; y < H / 2 * 2; ++y)
      for (std::size_t xx = 0; xx < W / 2 * 2; ++xx)
        for (std::size_t c = 0; c < C; ++c) out.at(f, y, xx, c) = T(0.25) * dout.at(f, y / 2, xx / 2, c);
  return out;
}

template <typename T>
std::vector<T> channel_mean(const Tensor<T>& x) {
  const std::size_t C = x.extent(3), P = positions(x.shape());
  std::vector<T> sums(C, T{0});
  kernels::active<T>().channel_sum(x.raw(), P, C, sums.data());
  for (auto& s : sums) s /= static_cast<T>(P);
  return sums;
}

/// Gradient of channel_mean: broadcast d/P to every position.
template <typename T>
void channel_mean_backward(std::span<const T> d, Tensor<T>& dx) {
  const std::size_t C = dx.extent(3), P = positions(dx.shape());
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t c = 0; c < C; ++c) dx[p * C + c] += d[c] / static_cast<T>(P);
}

template <typename T>
void scale_channels(Tensor<T>& x, std::span<const T> scales) {
  const std::size_t C = x.extent(3);
  if (scales.size() != C) throw std::invalid_argument("scale_channels: width mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= scales[i % C];
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (positions(a.shape()) != positions(b.shape()) || a.extent(0) != b.extent(0) || a.extent(1) != b.extent(1)) {
    throw std::invalid_argument("concat_channels: shape mismatch " + shape_to_string(a.shape()) + " vs " +
                                shape_to_string(b.shape()));
  }
  const std::size_t ca = a.extent(3), cb = b.extent(3), P = positions(a.shape());
  Tensor<T> out({a.extent(0), a.extent(1), a.extent(2), ca + cb});
  for (std::size_t p = 0; p < P; ++p) {
    std::copy_n(a.raw() + p * ca, ca, out.raw() + p * (ca + cb));
    std::copy_n(b.raw() + p * cb, cb, out.raw() + p * (ca + cb) + ca);
  }
  return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& x, std::size_t first) {
  const std::size_t C = x.extent(3), P = positions(x.shape());
  Tensor<T> a({x.extent(0), x.extent(1), x.extent(2), first});
  Tensor<T> b({x.extent(0), x.extent(1), x.extent(2), C - first});
  for (std::size_t p = 0; p < P; ++p) {
    std::copy_n(x.raw() + p * C, first, a.raw() + p * first);
    std::copy_n(x.raw() + p * C + first, C - first, b.raw() + p * (C - first));
  }
  return {std::move(a), std::move(b)};
}

/// y = x W + b with W (in, out).
template <typename T>
std::vector<T> linear(std::span<const T> x, const Tensor<T>& w, const Tensor<T>& b) {
  const std::size_t in = w.extent(0), out_n = w.extent(1);
  if (x.size() != in) throw std::invalid_argument("linear: input width mismatch");
  std::vector<T> y(b.data().begin(), b.data().end());
  const auto& k = kernels::active<T>();
  for (std::size_t i = 0; i < in; ++i) k.axpy(out_n, x[i], w.raw() + i * out_n, y.data());
  return y;
}

/// Accumulates dW, db and returns dx.
template <typename T>
std::vector<T> linear_backward(std::span<const T> x, const Tensor<T>& w, std::span<const T> dy, Tensor<T>& dw,
                               Tensor<T>& db) {
  const std::size_t in = w.extent(0), out_n = w.extent(1);
  const auto& k = kernels::active<T>();
  std::vector<T> dx(in);
  for (std::size_t i = 0; i < in; ++i) {
    k.axpy(out_n, x[i], dy.data(), dw.raw() + i * out_n);
    dx[i] = k.dot(out_n, w.raw() + i * out_n, dy.data());
  }
  for (std::size_t o = 0; o < out_n; ++o) db[o] += dy[o];
  return dx;
}

}  // namespace stadyn::zoo
