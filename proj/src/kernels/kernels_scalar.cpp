#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include "stadyn/kernels/kernels.hpp"

namespace stadyn::kernels {

namespace {

template <typename T>
void conv_forward(const ConvShape& s, const T* in, const T* w, const T* bias, T* out) {
  const std::size_t pt = s.kt / 2, ph = s.kh / 2, pw = s.kw / 2;
  const std::size_t ci_n = s.in_channels, co_n = s.out_channels;
  for (std::size_t t = 0; t < s.frames; ++t) {
    for (std::size_t y = 0; y < s.height; ++y) {
      for (std::size_t x = 0; x < s.width; ++x) {
        T* o = out + ((t * s.height + y) * s.width + x) * co_n;
        for (std::size_t co = 0; co < co_n; ++co) o[co] = bias ? bias[co] : T{0};
        for (std::size_t dt = 0; dt < s.kt; ++dt) {
          const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t + dt) - static_cast<std::ptrdiff_t>(pt);
          if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(s.frames)) continue;
          for (std::size_t dy = 0; dy < s.kh; ++dy) {
            const std::ptrdiff_t yi = static_cast<std::ptrdiff_t>(y + dy) - static_cast<std::ptrdiff_t>(ph);
            if (yi < 0 || yi >= static_cast<std::ptrdiff_t>(s.height)) continue;
            for (std::size_t dx = 0; dx < s.kw; ++dx) {
              const std::ptrdiff_t xi = static_cast<std::ptrdiff_t>(x + dx) - static_cast<std::ptrdiff_t>(pw);
              if (xi < 0 || xi >= static_cast<std::ptrdiff_t>(s.width)) continue;
              const T* ip = in + ((static_cast<std::size_t>(ti) * s.height + static_cast<std::size_t>(yi)) * s.width +
                                  static_cast<std::size_t>(xi)) * ci_n;
              const T* wp = w + ((dt * s.kh + dy) * s.kw + dx) * ci_n * co_n;
              for (std::size_t ci = 0; ci < ci_n; ++ci) {
                const T v = ip[ci];
                const T* row = wp + ci * co_n;
                for (std::size_t co = 0; co < co_n; ++co) o[co] += v * row[co];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv_weight_grad(const ConvShape& s, const T* in, const T* dout, T* dw) {
  const std::size_t pt = s.kt / 2, ph = s.kh / 2, pw = s.kw / 2;
  const std::size_t ci_n = s.in_channels, co_n = s.out_channels;
  for (std::size_t t = 0; t < s.frames; ++t) {
    for (std::size_t y = 0; y < s.height; ++y) {
      for (std::size_t x = 0; x < s.width; ++x) {
        const T* g = dout + ((t * s.height + y) * s.width + x) * co_n;
        for (std::size_t dt = 0; dt < s.kt; ++dt) {
          const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t + dt) - static_cast<std::ptrdiff_t>(pt);
          if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(s.frames)) continue;
          for (std::size_t dy = 0; dy < s.kh; ++dy) {
            const std::ptrdiff_t yi = static_cast<std::ptrdiff_t>(y + dy) - static_cast<std::ptrdiff_t>(ph);
            if (yi < 0 || yi >= static_cast<std::ptrdiff_t>(s.height)) continue;
            for (std::size_t dx = 0; dx < s.kw; ++dx) {
              const std::ptrdiff_t xi = static_cast<std::ptrdiff_t>(x + dx) - static_cast<std::ptrdiff_t>(pw);
              if (xi < 0 || xi >= static_cast<std::ptrdiff_t>(s.width)) continue;
              const T* ip = in + ((static_cast<std::size_t>(ti) * s.height + static_cast<std::size_t>(yi)) * s.width +
                                  static_cast<std::size_t>(xi)) * ci_n;
              T* wp = dw + ((dt * s.kh + dy) * s.kw + dx) * ci_n * co_n;
              for (std::size_t ci = 0; ci < ci_n; ++ci) {
                const T v = ip[ci];
                T* row = wp + ci * co_n;
                for (std::size_t co = 0; co < co_n; ++co) row[co] += v * g[co];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void channel_sum(const T* data, std::size_t rows, std::size_t channels, T* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = data + r * channels;
    for (std::size_t c = 0; c < channels; ++c) out[c] += row[c];
  }
}

template <typename T>
void axpy(std::size_t n, T a, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
T dot(std::size_t n, const T* x, const T* y) {
  T s{0};
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

const KernelTable<float> kScalarFloat{&conv_forward<float>, &conv_weight_grad<float>,
                                      &channel_sum<float>,  &axpy<float>,
                                      &dot<float>,          "scalar"};
const KernelTable<double> kScalarDouble{&conv_forward<double>, &conv_weight_grad<double>,
                                        &channel_sum<double>,  &axpy<double>,
                                        &dot<double>,          "scalar"};

Isa initial_isa() {
  const char* env = std::getenv("STADYN_KERNELS");
  if (env && std::string(env) == "scalar") return Isa::Scalar;
  return (avx2_float_kernels() && cpu_supports_avx2()) ? Isa::Avx2 : Isa::Scalar;
}

Isa& current_isa() {
  static Isa isa = initial_isa();
  return isa;
}

}  // namespace

const KernelTable<float>& scalar_float_kernels() { return kScalarFloat; }
const KernelTable<double>& scalar_double_kernels() { return kScalarDouble; }

bool cpu_supports_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

template <>
const KernelTable<float>& active<float>() {
  if (current_isa() == Isa::Avx2) return *avx2_float_kernels();
  return kScalarFloat;
}

template <>
const KernelTable<double>& active<double>() {
  return kScalarDouble;
}

void force_isa(Isa isa) {
  if (isa == Isa::Avx2 && !(avx2_float_kernels() && cpu_supports_avx2())) {
    throw std::runtime_error("AVX2 kernels unavailable on this build or CPU");
  }
  current_isa() = isa;
}

Isa active_isa() { return current_isa(); }

}  // namespace stadyn::kernels
