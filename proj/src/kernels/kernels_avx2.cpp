// AVX2+FMA float kernels. This translation unit is compiled with -mavx2 -mfma
// on x86 and is only entered after cpu_supports_avx2() succeeds.

#include "stadyn/kernels/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <algorithm>
#include <cstdint>

namespace stadyn::kernels {

namespace {

constexpr std::size_t kLanes = 8;
constexpr std::size_t kMaxRegs = 4;  // output channels per register block: 32

inline __m256i tail_mask(std::size_t n) {
  alignas(32) static const std::int32_t table[16] = {-1, -1, -1, -1, -1, -1, -1, -1,
                                                     0,  0,  0,  0,  0,  0,  0,  0};
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(table + 8 - n));
}

// Lanes [0, n) of a block of `Regs` registers; the last register is masked.
template <int Regs>
struct Block {
  __m256 acc[Regs];
  __m256i last_mask;

  explicit Block(std::size_t n) {
    const std::size_t rem = n - (Regs - 1) * kLanes;
    last_mask = tail_mask(rem);
  }
  void zero() {
    for (int r = 0; r < Regs; ++r) acc[r] = _mm256_setzero_ps();
  }
  void load(const float* p) {
    for (int r = 0; r < Regs - 1; ++r) acc[r] = _mm256_loadu_ps(p + r * kLanes);
    acc[Regs - 1] = _mm256_maskload_ps(p + (Regs - 1) * kLanes, last_mask);
  }
  void store(float* p) const {
    for (int r = 0; r < Regs - 1; ++r) _mm256_storeu_ps(p + r * kLanes, acc[r]);
    _mm256_maskstore_ps(p + (Regs - 1) * kLanes, last_mask, acc[Regs - 1]);
  }
  void add_to(float* p) const {
    for (int r = 0; r < Regs - 1; ++r) {
      _mm256_storeu_ps(p + r * kLanes, _mm256_add_ps(_mm256_loadu_ps(p + r * kLanes), acc[r]));
    }
    const __m256 cur = _mm256_maskload_ps(p + (Regs - 1) * kLanes, last_mask);
    _mm256_maskstore_ps(p + (Regs - 1) * kLanes, last_mask, _mm256_add_ps(cur, acc[Regs - 1]));
  }
  void fma(__m256 v, const float* row) {
    for (int r = 0; r < Regs - 1; ++r) {
      acc[r] = _mm256_fmadd_ps(v, _mm256_loadu_ps(row + r * kLanes), acc[r]);
    }
    acc[Regs - 1] = _mm256_fmadd_ps(v, _mm256_maskload_ps(row + (Regs - 1) * kLanes, last_mask),
                                    acc[Regs - 1]);
  }
};

struct Range {
  std::size_t lo, hi;  // output coordinates whose input tap lies in bounds
};

inline Range valid_range(std::size_t extent, std::size_t tap, std::size_t pad) {
  // input = out + tap - pad must lie in [0, extent)
  const std::size_t lo = tap < pad ? pad - tap : 0;
  const std::size_t hi_raw = extent + pad - tap;  // exclusive
  return {lo, std::min(extent, hi_raw)};
}

template <int Regs>
void conv_forward_block(const ConvShape& s, const float* in, const float* w, const float* bias,
                        float* out, std::size_t co0, std::size_t n) {
  const std::size_t pt = s.kt / 2, ph = s.kh / 2, pw = s.kw / 2;
  const std::size_t ci_n = s.in_channels, co_n = s.out_channels;
  Block<Regs> b(n);
  for (std::size_t t = 0; t < s.frames; ++t) {
    for (std::size_t y = 0; y < s.height; ++y) {
      for (std::size_t x = 0; x < s.width; ++x) {
        if (bias) {
          b.load(bias + co0);
        } else {
          b.zero();
        }
        for (std::size_t dt = 0; dt < s.kt; ++dt) {
          if (t + dt < pt || t + dt - pt >= s.frames) continue;
          const std::size_t ti = t + dt - pt;
          for (std::size_t dy = 0; dy < s.kh; ++dy) {
            if (y + dy < ph || y + dy - ph >= s.height) continue;
            const std::size_t yi = y + dy - ph;
            for (std::size_t dx = 0; dx < s.kw; ++dx) {
              if (x + dx < pw || x + dx - pw >= s.width) continue;
              const std::size_t xi = x + dx - pw;
              const float* ip = in + ((ti * s.height + yi) * s.width + xi) * ci_n;
              const float* wp = w + ((dt * s.kh + dy) * s.kw + dx) * ci_n * co_n + co0;
              for (std::size_t ci = 0; ci < ci_n; ++ci) {
                b.fma(_mm256_set1_ps(ip[ci]), wp + ci * co_n);
              }
            }
          }
        }
        b.store(out + ((t * s.height + y) * s.width + x) * co_n + co0);
      }
    }
  }
}

void conv_forward(const ConvShape& s, const float* in, const float* w, const float* bias,
                  float* out) {
  for (std::size_t co0 = 0; co0 < s.out_channels; co0 += kMaxRegs * kLanes) {
    const std::size_t n = std::min(kMaxRegs * kLanes, s.out_channels - co0);
    switch ((n + kLanes - 1) / kLanes) {
      case 1: conv_forward_block<1>(s, in, w, bias, out, co0, n); break;
      case 2: conv_forward_block<2>(s, in, w, bias, out, co0, n); break;
      case 3: conv_forward_block<3>(s, in, w, bias, out, co0, n); break;
      default: conv_forward_block<4>(s, in, w, bias, out, co0, n); break;
    }
  }
}

template <int Regs>
void conv_weight_grad_block(const ConvShape& s, const float* in, const float* dout, float* dw,
                            std::size_t co0, std::size_t n) {
  const std::size_t pt = s.kt / 2, ph = s.kh / 2, pw = s.kw / 2;
  const std::size_t ci_n = s.in_channels, co_n = s.out_channels;
  Block<Regs> b(n);
  for (std::size_t dt = 0; dt < s.kt; ++dt) {
    const Range rt = valid_range(s.frames, dt, pt);
    for (std::size_t dy = 0; dy < s.kh; ++dy) {
      const Range ry = valid_range(s.height, dy, ph);
      for (std::size_t dx = 0; dx < s.kw; ++dx) {
        const Range rx = valid_range(s.width, dx, pw);
        float* wp = dw + ((dt * s.kh + dy) * s.kw + dx) * ci_n * co_n + co0;
        for (std::size_t ci = 0; ci < ci_n; ++ci) {
          b.zero();
          for (std::size_t t = rt.lo; t < rt.hi; ++t) {
            const std::size_t ti = t + dt - pt;
            for (std::size_t y = ry.lo; y < ry.hi; ++y) {
              const std::size_t yi = y + dy - ph;
              const float* ip = in + ((ti * s.height + yi) * s.width + (rx.lo + dx - pw)) * ci_n + ci;
              const float* gp = dout + ((t * s.height + y) * s.width + rx.lo) * co_n + co0;
              for (std::size_t x = rx.lo; x < rx.hi; ++x) {
                b.fma(_mm256_set1_ps(*ip), gp);
                ip += ci_n;
                gp += co_n;
              }
            }
          }
          b.add_to(wp + ci * co_n);
        }
      }
    }
  }
}

void conv_weight_grad(const ConvShape& s, const float* in, const float* dout, float* dw) {
  for (std::size_t co0 = 0; co0 < s.out_channels; co0 += kMaxRegs * kLanes) {
    const std::size_t n = std::min(kMaxRegs * kLanes, s.out_channels - co0);
    switch ((n + kLanes - 1) / kLanes) {
      case 1: conv_weight_grad_block<1>(s, in, dout, dw, co0, n); break;
      case 2: conv_weight_grad_block<2>(s, in, dout, dw, co0, n); break;
      case 3: conv_weight_grad_block<3>(s, in, dout, dw, co0, n); break;
      default: conv_weight_grad_block<4>(s, in, dout, dw, co0, n); break;
    }
  }
}

void channel_sum(const float* data, std::size_t rows, std::size_t channels, float* out) {
  std::size_t c0 = 0;
  for (; c0 + kLanes <= channels; c0 += kLanes) {
    __m256 acc = _mm256_setzero_ps();
    for (std::size_t r = 0; r < rows; ++r) {
      acc = _mm256_add_ps(acc, _mm256_loadu_ps(data + r * channels + c0));
    }
    _mm256_storeu_ps(out + c0, _mm256_add_ps(_mm256_loadu_ps(out + c0), acc));
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = c0; c < channels; ++c) out[c] += data[r * channels + c];
  }
}

void axpy(std::size_t n, float a, const float* x, float* y) {
  const __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

float dot(std::size_t n, const float* x, const float* y) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc);
  }
  const __m128 lo = _mm256_castps256_ps128(acc);
  const __m128 hi = _mm256_extractf128_ps(acc, 1);
  __m128 s = _mm_add_ps(lo, hi);
  s = _mm_hadd_ps(s, s);
  s = _mm_hadd_ps(s, s);
  float total = _mm_cvtss_f32(s);
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

const KernelTable<float> kAvx2Float{&conv_forward, &conv_weight_grad, &channel_sum,
                                    &axpy,         &dot,              "avx2"};

}  // namespace

const KernelTable<float>* avx2_float_kernels() { return &kAvx2Float; }

}  // namespace stadyn::kernels

#else

namespace stadyn::kernels {
const KernelTable<float>* avx2_float_kernels() { return nullptr; }
}  // namespace stadyn::kernels

#endif
