#pragma once

// Inner-loop kernels for the model zoo. Every kernel has a portable scalar
// reference; an AVX2+FMA float variant is selected at runtime when the CPU
// supports it. Double precision (verification mode) always runs scalar.
//
// Layouts are channels-last: activations (frames, height, width, channels),
// weights (kt, kh, kw, in_channels, out_channels). Convolutions are stride 1
// with "same" zero padding, so every kernel extent must be odd.

#include <cstddef>
#include <string_view>

namespace stadyn::kernels {

struct ConvShape {
  std::size_t frames = 1, height = 1, width = 1;
  std::size_t in_channels = 1, out_channels = 1;
  std::size_t kt = 1, kh = 1, kw = 1;
};

template <typename T>
struct KernelTable {
  /// out = conv(in, w) + bias. `bias` may be null.
  void (*conv_forward)(const ConvShape&, const T* in, const T* w, const T* bias, T* out);
  /// dw += correlation of `in` with `dout` (accumulates).
  void (*conv_weight_grad)(const ConvShape&, const T* in, const T* dout, T* dw);
  /// out[c] += sum over rows of data[row][c].
  void (*channel_sum)(const T* data, std::size_t rows, std::size_t channels, T* out);
  /// y += a * x
  void (*axpy)(std::size_t n, T a, const T* x, T* y);
  T (*dot)(std::size_t n, const T* x, const T* y);
  std::string_view name;
};

enum class Isa { Scalar, Avx2 };

const KernelTable<float>& scalar_float_kernels();
const KernelTable<double>& scalar_double_kernels();
/// Null when the build has no AVX2 translation unit.
const KernelTable<float>* avx2_float_kernels();

bool cpu_supports_avx2();

/// Kernels used by the model zoo. Float picks AVX2 when available unless the
/// environment variable STADYN_KERNELS=scalar is set or force_isa() was used.
template <typename T>
const KernelTable<T>& active();

template <>
const KernelTable<float>& active<float>();
template <>
const KernelTable<double>& active<double>();

void force_isa(Isa isa);
Isa active_isa();

}  // namespace stadyn::kernels
