#pragma once

// Two-stream fusion and cross-connection modules.
//
// Parameters live in a ParameterSet under a name prefix:
//   <prefix>.se.w1 (in, hidden)  <prefix>.se.b1 (hidden)
//   <prefix>.se.w2 (hidden, out) <prefix>.se.b2 (out)
//   <prefix>.sp.w  (1, 3, 3, 2c, 1)  <prefix>.sp.b (1)
// For convex-combination gating the excitation output has c entries (one
// weight per channel shared by both streams); for plain gating it has 2c.
//
// Cross connections use <prefix>.m2a.{w,b,gate} and <prefix>.a2m.{w,b,gate}
// with w a 1x1 conv (1, 1, 1, c, c) and gate a per-channel logit (c).

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stadyn/modelzoo/descriptor.hpp"
#include "stadyn/modelzoo/parameters.hpp"
#include "stadyn/numerics/rng.hpp"

namespace stadyn::zoo {

template <typename T>
struct ExcitationCache {
  std::vector<T> squeezed;
  std::vector<T> hidden_pre;
  std::vector<T> gate;
};

template <typename T>
struct CcgChannelResult {
  Tensor<T> za, zm;
  ExcitationCache<T> cache;      // cache.gate is A_c (c entries)
  std::vector<T> motion_weight;  // 1 - A_c
};

template <typename T>
struct GatedChannelResult {
  Tensor<T> z;
  ExcitationCache<T> cache;  // cache.gate is A_c (2c entries)
};

template <typename T>
struct SpatialResult {
  Tensor<T> z;
  Tensor<T> gate;        // A_sp, (F, H, W, 1)
  Tensor<T> complement;  // 1 - A_sp (convex-combination form only)
};

template <typename T>
struct CrossResult {
  Tensor<T> appearance, motion;
  Tensor<T> m2a_conv, a2m_conv;  // pre-gate 1x1 conv outputs (empty when unused)
};

/// 1 - w elementwise; the weights the convex-combination gates put on the
/// motion path.
template <typename T>
std::vector<T> convex_complement(std::span<const T> w) {
  std::vector<T> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = T{1} - w[i];
  return out;
}

/// Z_a = A_c * U_a, Z_m = (1 - A_c) * U_m with A_c = excite(squeeze(U_a ++ U_m)).
template <typename T>
CcgChannelResult<T> ccg_channel_attention(const Tensor<T>& ua, const Tensor<T>& um, const ParameterSet<T>& p,
                                          const std::string& prefix);
template <typename T>
std::pair<Tensor<T>, Tensor<T>> ccg_channel_attention_backward(const Tensor<T>& ua, const Tensor<T>& um,
                                                               const ParameterSet<T>& p, const std::string& prefix,
                                                               const CcgChannelResult<T>& fwd, const Tensor<T>& dza,
                                                               const Tensor<T>& dzm, ParameterSet<T>& grads);

/// Z = A_c * (U_a ++ U_m), A_c in (0,1)^{2c} without coupling.
template <typename T>
GatedChannelResult<T> gated_channel_attention(const Tensor<T>& ua, const Tensor<T>& um, const ParameterSet<T>& p,
                                              const std::string& prefix);
template <typename T>
std::pair<Tensor<T>, Tensor<T>> gated_channel_attention_backward(const Tensor<T>& ua, const Tensor<T>& um,
                                                                 const ParameterSet<T>& p, const std::string& prefix,
                                                                 const GatedChannelResult<T>& fwd,
                                                                 const Tensor<T>& dz, ParameterSet<T>& grads);

/// Z = A_sp * Z_a ++ (1 - A_sp) * Z_m with A_sp = sigmoid(conv3x3(Z_a ++ Z_m)).
template <typename T>
SpatialResult<T> ccg_spatial_attention(const Tensor<T>& za, const Tensor<T>& zm, const ParameterSet<T>& p,
                                       const std::string& prefix);
template <typename T>
std::pair<Tensor<T>, Tensor<T>> ccg_spatial_attention_backward(const Tensor<T>& za, const Tensor<T>& zm,
                                                               const ParameterSet<T>& p, const std::string& prefix,
                                                               const SpatialResult<T>& fwd, const Tensor<T>& dz,
                                                               ParameterSet<T>& grads);

/// Z' = A_sp * Z + Z with A_sp = sigmoid(conv3x3(Z)).
template <typename T>
SpatialResult<T> gated_spatial_attention(const Tensor<T>& z, const ParameterSet<T>& p, const std::string& prefix);
template <typename T>
Tensor<T> gated_spatial_attention_backward(const Tensor<T>& z, const ParameterSet<T>& p, const std::string& prefix,
                                           const SpatialResult<T>& fwd, const Tensor<T>& dz_out,
                                           ParameterSet<T>& grads);

/// None: identity. MotionToAppearance: a' = a + sigmoid(g) * conv1x1(m),
/// m' = m. Bidirectional additionally m' = m + sigmoid(g') * conv1x1'(a),
/// both computed from the unmodified inputs.
template <typename T>
CrossResult<T> cross_connect(const Tensor<T>& a, const Tensor<T>& m, CrossConnection topology,
                             const ParameterSet<T>& p, const std::string& prefix);
template <typename T>
std::pair<Tensor<T>, Tensor<T>> cross_connect_backward(const Tensor<T>& a, const Tensor<T>& m,
                                                       CrossConnection topology, const ParameterSet<T>& p,
                                                       const std::string& prefix, const CrossResult<T>& fwd,
                                                       const Tensor<T>& da_out, const Tensor<T>& dm_out,
                                                       ParameterSet<T>& grads);

/// Adds fusion parameters for `channels` per stream (fan-in uniform init).
template <typename T>
void add_fusion_parameters(ParameterSet<T>& p, const std::string& prefix, Fusion fusion, std::size_t channels,
                           std::size_t hidden, Rng& rng);
template <typename T>
void add_cross_parameters(ParameterSet<T>& p, const std::string& prefix, CrossConnection topology,
                          std::size_t channels, Rng& rng);

/// Uniform(-gain/sqrt(fan_in), gain/sqrt(fan_in)).
template <typename T>
Tensor<T> fan_in_uniform(Shape shape, std::size_t fan_in, Rng& rng, double gain = 1.0);

/// Gain keeping activation variance stable through ReLU layers (sqrt(6)).
inline constexpr double kReluGain = 2.449489742783178;

}  // namespace stadyn::zoo
