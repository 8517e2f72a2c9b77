#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stadyn/modelzoo/checkpoint.hpp"
#include "stadyn/probe/trace.hpp"

namespace stadyn::probe {

enum class ScoreNorm {
  Mean,    // S_F = mean channel correlation, so S_identical = 1
  RawSum,  // S_F = sum of channel correlations
};

/// Factor scores of one layer and the unit counts their softmax implies.
struct LayerBias {
  std::map<SharedFactor, double> score;
  /// softmax over every supplied factor, times N^l
  std::map<SharedFactor, double> units;
  /// softmax over {static, dynamic} only, times N^l
  std::map<SharedFactor, double> units_two_factor;
};

/// Per-channel correlation between paired columns of one layer.
std::vector<double> channel_correlations(const LayerTrace& layer);

/// Scores from one trace per factor (static and dynamic required; identical
/// optional). Throws std::invalid_argument for a missing factor or layer or
/// for channel counts that disagree.
LayerBias layer_bias(const std::map<SharedFactor, ActivationTrace>& traces, const std::string& layer,
                     ScoreNorm norm = ScoreNorm::Mean);

/// Unit counts N_F = softmax(S) * N for factors listed in order.
std::vector<double> unit_counts(std::span<const double> scores, std::size_t channels);

/// s^i for the static and dynamic factors.
struct UnitScore {
  double static_score = 0.0;
  double dynamic_score = 0.0;
};

std::vector<UnitScore> unit_scores(const std::map<SharedFactor, ActivationTrace>& traces, const std::string& layer);

enum class UnitClass { Static, Dynamic, Joint, Residual };
std::string_view to_string(UnitClass c);

struct UnitCounts {
  std::size_t static_units = 0, dynamic_units = 0, joint = 0, residual = 0;
  std::size_t total() const { return static_units + dynamic_units + joint + residual; }
};

struct UnitClassification {
  std::vector<UnitClass> classes;
  UnitCounts counts;
};

inline constexpr double kDefaultThreshold = 0.5;

/// A score counts as carrying a factor only when strictly above lambda.
/// Throws std::invalid_argument unless 0 < lambda < 1.
UnitClassification classify_units(std::span<const UnitScore> scores, double lambda = kDefaultThreshold);

/// N_dyn / (N_dyn + N_stat); 0.5 when both are zero.
double dynamic_unit_ratio(const UnitCounts& counts);

/// Per-pixel foreground frequency over H x W masks divided by its maximum.
/// All-empty masks give an all-zero map. Throws std::invalid_argument for
/// an empty list or masks of unequal shape.
Tensor<double> center_bias(std::span<const Tensor<float>> masks);

struct LayerReport {
  std::string name;
  std::size_t channels = 0;
  LayerBias bias;
  std::vector<UnitScore> unit_scores;
  UnitClassification classification;
};

struct BiasReport {
  double lambda = kDefaultThreshold;
  int epoch = -1;  // checkpoint epoch, -1 when not from a checkpoint
  std::vector<LayerReport> layers;

  const LayerReport& layer(const std::string& name) const;
};

BiasReport bias_report(const std::map<SharedFactor, ActivationTrace>& traces, double lambda = kDefaultThreshold,
                       ScoreNorm norm = ScoreNorm::Mean);

/// Probes every checkpoint on the same pair sets.
std::vector<BiasReport> epoch_sweep(std::span<const zoo::ModelCheckpoint> checkpoints,
                                    const std::map<SharedFactor, std::vector<pairgen::FactorPair>>& pairs,
                                    const std::vector<std::string>& layers, double lambda = kDefaultThreshold);

nlohmann::json to_json(const BiasReport& report);

}  // namespace stadyn::probe
