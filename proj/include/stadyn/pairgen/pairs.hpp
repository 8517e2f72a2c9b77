#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "stadyn/pairgen/style.hpp"
#include "stadyn/pairgen/video.hpp"

namespace stadyn::pairgen {

enum class SharedFactor { Static, Dynamic, Identical };

std::string_view to_string(SharedFactor f);
SharedFactor shared_factor_from_string(std::string_view text);

/// Parameters that produced a pair, kept for audit.
struct PairProvenance {
  int style_a = 0;
  int style_b = 0;
  std::vector<std::size_t> permutation;  // frame order of side b (shuffle pairs)
  double rotation_deg = 0.0;             // flow jitter pairs
  double flow_scale = 1.0;
  bool zero_flow_warning = false;
};

struct FactorPair {
  Video a;
  Video b;
  SharedFactor shared = SharedFactor::Identical;
  PairProvenance provenance;
};

struct FlowJitter {
  double rotation_deg = 0.0;
  double scale = 1.0;
};

inline constexpr double kMinJitterRotationDeg = 30.0;
inline constexpr double kMaxJitterRotationDeg = 180.0;
inline constexpr double kMinJitterScale = 0.5;
inline constexpr double kMaxJitterScale = 2.0;

/// Same static content, different dynamics: both sides carry style s; side b
/// plays the frames in a uniformly random non-identity order (flow recomputed
/// from the reordered frames). `forced_permutation` is a test hook; passing
/// the identity yields an Identical pair.
FactorPair make_static_pair(const Video& v, Rng& rng, int num_styles = kNumStyles,
                            const std::optional<std::vector<std::size_t>>& forced_permutation = std::nullopt);

/// Two-stream variant: same RGB frames and style on both sides, side b's flow
/// rotated by an angle in [30, 180] degrees and scaled by a factor in
/// [0.5, 2]. An all-zero flow sets `zero_flow_warning`.
FactorPair make_static_pair_flow(const Video& v, Rng& rng, int num_styles = kNumStyles,
                                 const std::optional<FlowJitter>& forced = std::nullopt);

/// Same dynamics, different statics: style s1 on side a, s2 != s1 on side b,
/// identical frame order and flow. Forcing s1 == s2 yields an Identical pair.
FactorPair make_dynamic_pair(const Video& v, Rng& rng, int num_styles = kNumStyles,
                             const std::optional<std::pair<int, int>>& forced_styles = std::nullopt);

/// Same video on both sides (random shared style).
FactorPair make_identical_pair(const Video& v, Rng& rng, int num_styles = kNumStyles);

/// Rotates every flow vector by `rotation_deg` and scales it.
Tensor<float> jitter_flow(const Tensor<float>& flow, const FlowJitter& jitter);

enum class PairMode { FrameShuffle, FlowJitter };

/// Builds one pair per video for `factor`; pair i uses rng.derive(i).
std::vector<FactorPair> make_pairs(const Dataset& data, SharedFactor factor, PairMode mode, std::size_t count,
                                   const Rng& rng);

}  // namespace stadyn::pairgen
