#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stadyn/modelzoo/train.hpp"
#include "stadyn/probe/trace.hpp"

namespace stadyn::interventions {

inline constexpr std::size_t kMinScoreBatch = 8;
inline constexpr std::uint64_t kDefaultReestimatePeriod = 30;

/// Per-channel correlation between pooled activations of each video and a
/// frame-shuffled copy of it, across the batch. Throws std::invalid_argument
/// for batches smaller than kMinScoreBatch.
std::vector<double> static_scores_for_dropout(const probe::ProbeTarget& target,
                                              std::span<const pairgen::LabeledVideo* const> batch,
                                              const std::string& layer, Rng& rng);

/// p_i = softmax(S)_i.
std::vector<double> static_dropout_probs(std::span<const double> scores);

/// m distinct indices drawn one at a time with probability proportional to
/// the remaining weights. Throws std::invalid_argument if m exceeds the
/// number of positive weights.
std::vector<std::size_t> sample_without_replacement(std::span<const double> weights, std::size_t m, Rng& rng);

/// Channel multipliers for one sample: round(r C) channels drawn by `probs`
/// get 0, the rest 1 / (1 - r). r = 0 gives all ones.
std::vector<float> static_dropout_scales(std::span<const double> probs, double rate, Rng& rng);

struct DropoutState {
  std::string layer;
  double rate = 0.0;
  std::uint64_t period = kDefaultReestimatePeriod;
  std::uint64_t iteration = 0;     // last iteration seen
  std::uint64_t estimated_at = 0;  // iteration of the last score update
  std::uint64_t estimates = 0;     // number of score updates so far
  std::vector<double> scores;      // S_i
  std::vector<double> probs;       // p_i

  nlohmann::json to_json() const;
};

/// Dropout that preferentially removes channels whose activations survive
/// frame shuffling. Scores are re-estimated from the current batch every
/// `period` iterations (and on the first call).
class StaticDropout final : public zoo::DropoutPolicy {
 public:
  StaticDropout(std::string layer, double rate, std::uint64_t period = kDefaultReestimatePeriod);

  std::vector<zoo::ChannelScales<float>> sample(const zoo::Network<float>& net,
                                                std::span<const pairgen::LabeledVideo* const> batch,
                                                std::uint64_t iteration, Rng& rng) override;
  nlohmann::json describe() const override;
  const DropoutState& state() const { return state_; }

 private:
  DropoutState state_;
};

/// Continues training from `ck` (fresh momentum) without dropout.
zoo::TrainResult finetune_no_dropout(const zoo::ModelCheckpoint& ck, const pairgen::Dataset& data,
                                     const zoo::TrainConfig& config, std::uint64_t seed,
                                     const std::string& config_hash = "");

}  // namespace stadyn::interventions
