#include "stadyn/probe/planted.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stadyn::probe {

namespace {

// Typical spreads of the color contrasts and of the mean flow magnitude on
// 8x16x16 videos.
constexpr std::array<double, 4> kStaticSpread{0.20, 0.24, 0.22, 0.35};
constexpr double kMotionSpread = 0.03;
// Weight of the color contrast inside a joint channel. Restyling correlates
// the contrasts slightly negatively (about -0.2), so the static part must
// stay below unit weight for the sum to keep a dynamic-pair score above 0.5.
constexpr double kJointStaticWeight = 0.6;

std::array<double, 4> static_features(const Tensor<float>& frames) {
  double r = 0, g = 0, b = 0;
  const std::size_t P = frames.size() / 3;
  for (std::size_t i = 0; i < P; ++i) {
    r += frames[3 * i];
    g += frames[3 * i + 1];
    b += frames[3 * i + 2];
  }
  r /= P, g /= P, b /= P;
  return {r - g, g - b, b - r, 2 * r - g - b};
}

struct Motion {
  std::array<double, 4> direction;  // u, v, u+v, u-v
  double magnitude;                 // mean |(u, v)|
};

Motion motion_features(const pairgen::Video& video) {
  const Tensor<float> flow = video.has_flow() ? video.flow : pairgen::flow_analog(video.frames);
  double u = 0, v = 0, mag = 0;
  const std::size_t P = flow.size() / 2;
  for (std::size_t i = 0; i < P; ++i) {
    u += flow[2 * i];
    v += flow[2 * i + 1];
    mag += std::hypot(static_cast<double>(flow[2 * i]), static_cast<double>(flow[2 * i + 1]));
  }
  u /= P, v /= P, mag /= P;
  return {{u, v, u + v, u - v}, mag};
}

}  // namespace

std::size_t PlantedNetwork::channels(const std::string& layer) const {
  if (layer != kLayer) throw std::invalid_argument("planted network has no layer '" + layer + "'");
  return kChannels;
}

std::map<std::string, std::vector<double>> PlantedNetwork::pooled(const pairgen::Video& video,
                                                                  const std::vector<std::string>& layers) const {
  std::map<std::string, std::vector<double>> out;
  for (const auto& name : layers) {
    channels(name);
    const auto s = static_features(video.frames);
    const auto m = motion_features(video);
    std::vector<double> z(kChannels, 0.0);
    for (std::size_t i = 0; i < 4; ++i) {
      z[i] = s[i];
      z[4 + i] = m.direction[i];
      z[8 + i] = kJointStaticWeight * s[i] / kStaticSpread[i] + m.magnitude / kMotionSpread;
    }
    for (std::size_t c = 0; c < kChannels; ++c) {
      if (removed_[c]) z[c] = 0.0;
    }
    out[name] = std::move(z);
  }
  return out;
}

UnitClass PlantedNetwork::planted_class(std::size_t channel) {
  if (channel >= kChannels) throw std::invalid_argument("planted channel out of range");
  static constexpr UnitClass kRoles[] = {UnitClass::Static, UnitClass::Dynamic, UnitClass::Joint, UnitClass::Residual};
  return kRoles[channel / 4];
}

void PlantedNetwork::remove_channels(const std::vector<std::size_t>& channels) {
  for (auto c : channels) {
    if (c >= kChannels) throw std::invalid_argument("planted channel out of range");
    removed_[c] = true;
  }
}

int PlantedNetwork::predict_direction(const pairgen::Video& video) const {
  const auto z = pooled(video, {kLayer}).at(kLayer);
  const double u = z[4], v = z[5];
  if (u == 0.0 && v == 0.0) return 0;
  // image rows grow downward; directions count counter-clockwise from east
  const double angle = std::atan2(-v, u);
  const int bin = static_cast<int>(std::lround(angle / (std::numbers::pi / 4)));
  return (bin % pairgen::kDirections + pairgen::kDirections) % pairgen::kDirections;
}

}  // namespace stadyn::probe
