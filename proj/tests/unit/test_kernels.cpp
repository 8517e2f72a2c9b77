#include <doctest.h>

#include <cmath>
#include <vector>

#include "stadyn/kernels/kernels.hpp"
#include "stadyn/numerics/rng.hpp"

using namespace stadyn;
using kernels::ConvShape;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

std::vector<float> to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }

std::size_t in_size(const ConvShape& s) { return s.frames * s.height * s.width * s.in_channels; }
std::size_t out_size(const ConvShape& s) { return s.frames * s.height * s.width * s.out_channels; }
std::size_t w_size(const ConvShape& s) { return s.kt * s.kh * s.kw * s.in_channels * s.out_channels; }

/// Direct 7-loop same-padded convolution.
std::vector<double> naive_conv(const ConvShape& s, const std::vector<double>& in, const std::vector<double>& w,
                               const std::vector<double>& bias) {
  std::vector<double> out(out_size(s));
  const long pt = static_cast<long>(s.kt / 2), ph = static_cast<long>(s.kh / 2), pw = static_cast<long>(s.kw / 2);
  for (long t = 0; t < static_cast<long>(s.frames); ++t)
    for (long y = 0; y < static_cast<long>(s.height); ++y)
      for (long x = 0; x < static_cast<long>(s.width); ++x)
        for (std::size_t o = 0; o < s.out_channels; ++o) {
          double acc = bias[o];
          for (long a = 0; a < static_cast<long>(s.kt); ++a)
            for (long b = 0; b < static_cast<long>(s.kh); ++b)
              for (long c = 0; c < static_cast<long>(s.kw); ++c) {
                const long tt = t + a - pt, yy = y + b - ph, xx = x + c - pw;
                if (tt < 0 || yy < 0 || xx < 0 || tt >= static_cast<long>(s.frames) ||
                    yy >= static_cast<long>(s.height) || xx >= static_cast<long>(s.width))
                  continue;
                for (std::size_t i = 0; i < s.in_channels; ++i) {
                  const std::size_t ii = ((tt * s.height + yy) * s.width + xx) * s.in_channels + i;
                  const std::size_t wi = (((a * s.kh + b) * s.kw + c) * s.in_channels + i) * s.out_channels + o;
                  acc += in[ii] * w[wi];
                }
              }
          out[((t * s.height + y) * s.width + x) * s.out_channels + o] = acc;
        }
  return out;
}

const ConvShape kShapes[] = {
    {3, 5, 4, 3, 8, 3, 3, 3},  {1, 6, 6, 2, 5, 1, 3, 3},  {2, 4, 4, 16, 16, 1, 1, 1},
    {4, 3, 7, 5, 33, 3, 3, 3}, {1, 1, 1, 3, 1, 3, 3, 3},  {2, 8, 8, 8, 16, 3, 3, 3},
};

template <typename T>
void check_against_naive(const kernels::KernelTable<T>& k, double tol) {
  Rng rng(17);
  for (const auto& s : kShapes) {
    const auto in = random_vec(in_size(s), rng), w = random_vec(w_size(s), rng), b = random_vec(s.out_channels, rng);
    const auto want = naive_conv(s, in, w, b);
    std::vector<T> tin(in.begin(), in.end()), tw(w.begin(), w.end()), tb(b.begin(), b.end()), out(out_size(s));
    k.conv_forward(s, tin.data(), tw.data(), tb.data(), out.data());
    for (std::size_t i = 0; i < out.size(); ++i) REQUIRE(std::abs(out[i] - want[i]) < tol);
  }
}

}  // namespace

TEST_CASE("scalar convolution matches direct loops") {
  check_against_naive(kernels::scalar_double_kernels(), 1e-12);
  check_against_naive(kernels::scalar_float_kernels(), 1e-4);
}

TEST_CASE("avx2 kernels agree with scalar reference") {
  const auto* avx = kernels::avx2_float_kernels();
  if (!avx || !kernels::cpu_supports_avx2()) {
    MESSAGE("AVX2 variant unavailable on this machine; equivalence not exercised");
    return;
  }
  const auto& ref = kernels::scalar_float_kernels();
  Rng rng(23);
  for (const auto& s : kShapes) {
    const auto in = to_float(random_vec(in_size(s), rng));
    const auto w = to_float(random_vec(w_size(s), rng));
    const auto b = to_float(random_vec(s.out_channels, rng));
    const auto dout = to_float(random_vec(out_size(s), rng));
    std::vector<float> o1(out_size(s)), o2(out_size(s));
    ref.conv_forward(s, in.data(), w.data(), b.data(), o1.data());
    avx->conv_forward(s, in.data(), w.data(), b.data(), o2.data());
    for (std::size_t i = 0; i < o1.size(); ++i) REQUIRE(std::abs(o1[i] - o2[i]) <= 1e-5f * (1 + std::abs(o1[i])));
    std::vector<float> o3(out_size(s));
    avx->conv_forward(s, in.data(), w.data(), nullptr, o3.data());
    ref.conv_forward(s, in.data(), w.data(), nullptr, o1.data());
    for (std::size_t i = 0; i < o1.size(); ++i) REQUIRE(std::abs(o1[i] - o3[i]) <= 1e-5f * (1 + std::abs(o1[i])));

    std::vector<float> g1(w_size(s), 0.5f), g2(w_size(s), 0.5f);
    ref.conv_weight_grad(s, in.data(), dout.data(), g1.data());
    avx->conv_weight_grad(s, in.data(), dout.data(), g2.data());
    for (std::size_t i = 0; i < g1.size(); ++i) REQUIRE(std::abs(g1[i] - g2[i]) <= 1e-4f * (1 + std::abs(g1[i])));

    const std::size_t rows = s.frames * s.height * s.width;
    std::vector<float> c1(s.out_channels, 1.f), c2(s.out_channels, 1.f);
    ref.channel_sum(dout.data(), rows, s.out_channels, c1.data());
    avx->channel_sum(dout.data(), rows, s.out_channels, c2.data());
    for (std::size_t i = 0; i < c1.size(); ++i) REQUIRE(std::abs(c1[i] - c2[i]) <= 1e-4f * (1 + std::abs(c1[i])));
  }
  for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 31u, 64u, 100u}) {
    const auto x = to_float(random_vec(n, rng));
    auto y1 = to_float(random_vec(n, rng));
    auto y2 = y1;
    ref.axpy(n, 0.75f, x.data(), y1.data());
    avx->axpy(n, 0.75f, x.data(), y2.data());
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-6f);
    CHECK(std::abs(ref.dot(n, x.data(), y1.data()) - avx->dot(n, x.data(), y1.data())) <= 1e-4f);
  }
}

TEST_CASE("weight gradient is the adjoint of the forward convolution") {
  // <conv(in, w), dout> is linear in w, so dw must equal its gradient:
  // sum_j dw_j * dir_j == <conv(in, dir), dout>
  const auto& k = kernels::scalar_double_kernels();
  Rng rng(4);
  for (const auto& s : kShapes) {
    const auto in = random_vec(in_size(s), rng), dout = random_vec(out_size(s), rng);
    const auto dir = random_vec(w_size(s), rng);
    std::vector<double> dw(w_size(s), 0.0), out(out_size(s));
    k.conv_weight_grad(s, in.data(), dout.data(), dw.data());
    k.conv_forward(s, in.data(), dir.data(), nullptr, out.data());
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < dw.size(); ++i) lhs += dw[i] * dir[i];
    for (std::size_t i = 0; i < out.size(); ++i) rhs += out[i] * dout[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("kernel selection") {
  const auto before = kernels::active_isa();
  kernels::force_isa(kernels::Isa::Scalar);
  CHECK(kernels::active<float>().name == kernels::scalar_float_kernels().name);
  kernels::force_isa(before);
  CHECK(kernels::active<double>().name == kernels::scalar_double_kernels().name);
}
