#pragma once

#include <array>
#include <vector>

#include "stadyn/probe/metrics.hpp"
#include "stadyn/probe/trace.hpp"

namespace stadyn::probe {

/// Hand-built probe target with one 16-channel layer "planted" whose channel
/// roles are known by construction:
///   0-3   static:  frame-averaged color contrasts (R-G, G-B, B-R, 2R-G-B);
///         invariant to frame order, changed by restyling
///   4-7   dynamic: mean flow-analog components (u, v, u+v, u-v); invariant
///         to restyling, scrambled by frame shuffling
///   8-11  joint:   static channel i plus the mean flow magnitude, which
///         survives restyling exactly and frame shuffling mostly
///   12-15 dead:    constant zero
class PlantedNetwork final : public ProbeTarget {
 public:
  static constexpr std::size_t kChannels = 16;
  static constexpr const char* kLayer = "planted";

  std::vector<std::string> layer_names() const override { return {kLayer}; }
  std::size_t channels(const std::string& layer) const override;
  std::map<std::string, std::vector<double>> pooled(const pairgen::Video& video,
                                                    const std::vector<std::string>& layers) const override;

  /// The class each channel was built to have.
  static UnitClass planted_class(std::size_t channel);

  /// Zeroes channels persistently (union with earlier removals).
  void remove_channels(const std::vector<std::size_t>& channels);
  const std::array<bool, kChannels>& removed() const { return removed_; }

  /// Direction bin read out from the dynamic channels (nearest compass
  /// direction of the mean flow); 0 when they are removed or zero.
  int predict_direction(const pairgen::Video& video) const;

 private:
  std::array<bool, kChannels> removed_{};
};

}  // namespace stadyn::probe
