#pragma once

// Trace directory layout:
//   trace.json            {"version": 1, "factor": "static"|"dynamic"|"identical",
//                          "layers": [{"name", "channels", "pairs",
//                                      "files": ["<name>.z1.f32", "<name>.z2.f32"]}]}
//   <name>.z1.f32 / .z2.f32  pairs x channels, row-major, binary32 LE, no header

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stadyn/modelzoo/network.hpp"
#include "stadyn/pairgen/pairs.hpp"

namespace stadyn::probe {

using pairgen::SharedFactor;

/// Pooled activations of one layer for both sides of every pair.
struct LayerTrace {
  std::string name;
  std::size_t pairs = 0;
  std::size_t channels = 0;
  std::vector<float> z1;  // pairs x channels
  std::vector<float> z2;

  /// Column `c` of z1 or z2 as doubles.
  std::vector<double> column(int side, std::size_t c) const;
  bool operator==(const LayerTrace&) const = default;
};

struct ActivationTrace {
  SharedFactor factor = SharedFactor::Identical;
  std::vector<LayerTrace> layers;

  /// Throws std::invalid_argument when absent.
  const LayerTrace& layer(const std::string& name) const;
  /// Checks shapes and the pairs >= 2 requirement.
  void validate() const;
  bool operator==(const ActivationTrace&) const = default;
};

/// Anything that maps a video to globally pooled per-channel activations.
class ProbeTarget {
 public:
  virtual ~ProbeTarget() = default;
  virtual std::vector<std::string> layer_names() const = 0;
  virtual std::size_t channels(const std::string& layer) const = 0;
  virtual std::map<std::string, std::vector<double>> pooled(const pairgen::Video& video,
                                                            const std::vector<std::string>& layers) const = 0;
};

class NetworkTarget final : public ProbeTarget {
 public:
  explicit NetworkTarget(const zoo::Network<float>& net) : net_(net) {}
  std::vector<std::string> layer_names() const override { return net_.descriptor().probe_layers(); }
  std::size_t channels(const std::string& layer) const override { return net_.descriptor().layer_channels(layer); }
  std::map<std::string, std::vector<double>> pooled(const pairgen::Video& video,
                                                    const std::vector<std::string>& layers) const override {
    return net_.pooled(video, layers);
  }

 private:
  const zoo::Network<float>& net_;
};

/// Runs both sides of every pair through `target`. Rows follow pair order.
/// Throws std::invalid_argument for fewer than 2 pairs, mixed factor tags, or
/// unknown layers. An empty `layers` list means every probe layer.
ActivationTrace collect_trace(const ProbeTarget& target, std::span<const pairgen::FactorPair> pairs,
                              std::vector<std::string> layers = {});

void write_trace(const ActivationTrace& trace, const std::filesystem::path& dir, const std::string& config_hash = "");
/// Throws FormatError for a missing, malformed, or mis-sized manifest or file.
ActivationTrace read_trace(const std::filesystem::path& dir);

}  // namespace stadyn::probe
