#pragma once

#include <array>

#include "stadyn/pairgen/video.hpp"

namespace stadyn::pairgen {

inline constexpr int kNumStyles = 4;

/// Time-invariant per-pixel color transform: rgb' = clamp(M * rgb + offset).
///
/// The four built-in styles (identity, channel rotation, inversion, and a
/// doubly-stochastic channel mix) map the unit color cube into itself, so
/// the clamp is inactive on valid frames and each style is exactly
/// invertible there. All of them preserve luminance up to the affine map
/// L -> 1 - L, which leaves the flow analog unchanged.
struct StyleMap {
  int id = 0;
  std::array<double, 9> matrix{1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::array<double, 3> offset{0, 0, 0};

  static StyleMap builtin(int id);

  /// Unclamped inverse on the continuous color cube.
  StyleMap inverse() const;
  /// this ∘ other
  StyleMap compose(const StyleMap& other) const;

  std::array<float, 3> apply(const float* rgb) const;
  Tensor<float> apply(const Tensor<float>& frames) const;
};

/// Styled copy of `v`; flow is carried over unchanged.
Video apply_style(const Video& v, int style);

}  // namespace stadyn::pairgen
