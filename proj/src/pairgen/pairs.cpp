#include "stadyn/pairgen/pairs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace stadyn::pairgen {

namespace {

void check_styles(int num_styles) {
  if (num_styles < 1 || num_styles > kNumStyles) {
    throw std::invalid_argument("num_styles must be in [1, " + std::to_string(kNumStyles) + "]");
  }
}

// Exact values at multiples of 90 degrees so that a 180 degree rotation is an
// exact sign flip.
std::pair<double, double> cos_sin_deg(double deg) {
  const double r = std::fmod(std::fmod(deg, 360.0) + 360.0, 360.0);
  if (r == 0.0) return {1.0, 0.0};
  if (r == 90.0) return {0.0, 1.0};
  if (r == 180.0) return {-1.0, 0.0};
  if (r == 270.0) return {0.0, -1.0};
  const double rad = r * std::numbers::pi / 180.0;
  return {std::cos(rad), std::sin(rad)};
}

bool is_identity(const std::vector<std::size_t>& p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] != i) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(SharedFactor f) {
  switch (f) {
    case SharedFactor::Static: return "static";
    case SharedFactor::Dynamic: return "dynamic";
    case SharedFactor::Identical: return "identical";
  }
  return "?";
}

SharedFactor shared_factor_from_string(std::string_view text) {
  for (auto f : {SharedFactor::Static, SharedFactor::Dynamic, SharedFactor::Identical}) {
    if (to_string(f) == text) return f;
  }
  throw std::invalid_argument("unknown factor '" + std::string(text) + "'");
}

FactorPair make_static_pair(const Video& v, Rng& rng, int num_styles,
                            const std::optional<std::vector<std::size_t>>& forced_permutation) {
  check_styles(num_styles);
  const std::size_t T = v.num_frames();
  if (T < 2) throw std::invalid_argument("make_static_pair: need at least 2 frames");
  const int style = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_styles)));
  const auto perm = forced_permutation ? *forced_permutation : rng.non_identity_permutation(T);

  FactorPair pair;
  pair.provenance.style_a = pair.provenance.style_b = style;
  pair.provenance.permutation = perm;
  const StyleMap map = StyleMap::builtin(style);
  pair.a = Video{map.apply(v.frames), v.flow};
  if (is_identity(perm)) {
    pair.b = pair.a;
    pair.shared = SharedFactor::Identical;
    return pair;
  }
  const Tensor<float> shuffled = permute_frames(v.frames, perm);
  pair.b = Video{map.apply(shuffled), v.has_flow() ? flow_analog(shuffled) : Tensor<float>{}};
  pair.shared = SharedFactor::Static;
  return pair;
}

Tensor<float> jitter_flow(const Tensor<float>& flow, const FlowJitter& jitter) {
  if (flow.rank() != 4 || flow.extent(3) != 2) {
    throw std::invalid_argument("jitter_flow: expected (T, H, W, 2) flow");
  }
  const auto [c, s] = cos_sin_deg(jitter.rotation_deg);
  Tensor<float> out(flow.shape());
  for (std::size_t i = 0; i < flow.size(); i += 2) {
    const double u = flow[i], w = flow[i + 1];
    out[i] = static_cast<float>(jitter.scale * (c * u - s * w));
    out[i + 1] = static_cast<float>(jitter.scale * (s * u + c * w));
  }
  return out;
}

FactorPair make_static_pair_flow(const Video& v, Rng& rng, int num_styles, const std::optional<FlowJitter>& forced) {
  check_styles(num_styles);
  if (!v.has_flow()) throw std::invalid_argument("make_static_pair_flow: video has no flow analog");
  const int style = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_styles)));
  FlowJitter jitter;
  if (forced) {
    jitter = *forced;
  } else {
    jitter.rotation_deg = rng.uniform(kMinJitterRotationDeg, kMaxJitterRotationDeg);
    jitter.scale = rng.uniform(kMinJitterScale, kMaxJitterScale);
  }

  FactorPair pair;
  pair.provenance.style_a = pair.provenance.style_b = style;
  pair.provenance.rotation_deg = jitter.rotation_deg;
  pair.provenance.flow_scale = jitter.scale;
  pair.provenance.zero_flow_warning =
      std::all_of(v.flow.data().begin(), v.flow.data().end(), [](float f) { return f == 0.0f; });
  pair.a = Video{StyleMap::builtin(style).apply(v.frames), v.flow};
  if (jitter.rotation_deg == 0.0 && jitter.scale == 1.0) {
    pair.b = pair.a;
    pair.shared = SharedFactor::Identical;
    return pair;
  }
  pair.b = Video{pair.a.frames, jitter_flow(v.flow, jitter)};
  pair.shared = SharedFactor::Static;
  return pair;
}

FactorPair make_dynamic_pair(const Video& v, Rng& rng, int num_styles,
                             const std::optional<std::pair<int, int>>& forced_styles) {
  check_styles(num_styles);
  int s1 = 0, s2 = 0;
  if (forced_styles) {
    std::tie(s1, s2) = *forced_styles;
  } else {
    if (num_styles < 2) throw std::invalid_argument("make_dynamic_pair: need at least 2 styles");
    s1 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_styles)));
    s2 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_styles - 1)));
    if (s2 >= s1) ++s2;
  }
  FactorPair pair;
  pair.provenance.style_a = s1;
  pair.provenance.style_b = s2;
  pair.a = apply_style(v, s1);
  if (s1 == s2) {
    pair.b = pair.a;
    pair.shared = SharedFactor::Identical;
    return pair;
  }
  pair.b = apply_style(v, s2);
  pair.shared = SharedFactor::Dynamic;
  return pair;
}

FactorPair make_identical_pair(const Video& v, Rng& rng, int num_styles) {
  check_styles(num_styles);
  const int s = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_styles)));
  FactorPair pair;
  pair.provenance.style_a = pair.provenance.style_b = s;
  pair.a = apply_style(v, s);
  pair.b = pair.a;
  pair.shared = SharedFactor::Identical;
  return pair;
}

std::vector<FactorPair> make_pairs(const Dataset& data, SharedFactor factor, PairMode mode, std::size_t count,
                                   const Rng& rng) {
  if (data.items.empty()) throw std::invalid_argument("make_pairs: empty dataset");
  std::vector<FactorPair> out;
  out.reserve(count);
  const int styles = data.spec.styles;
  for (std::size_t i = 0; i < count; ++i) {
    Rng sub = rng.derive(static_cast<std::uint64_t>(i));
    const Video& v = data.items[i % data.items.size()].video;
    switch (factor) {
      case SharedFactor::Static:
        out.push_back(mode == PairMode::FrameShuffle ? make_static_pair(v, sub, styles)
                                                     : make_static_pair_flow(v, sub, styles));
        break;
      case SharedFactor::Dynamic:
        out.push_back(make_dynamic_pair(v, sub, styles));
        break;
      case SharedFactor::Identical:
        out.push_back(make_identical_pair(v, sub, styles));
        break;
    }
  }
  return out;
}

}  // namespace stadyn::pairgen
