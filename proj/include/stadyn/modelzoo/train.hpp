#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stadyn/modelzoo/checkpoint.hpp"
#include "stadyn/modelzoo/network.hpp"
#include "stadyn/pairgen/video.hpp"

namespace stadyn::zoo {

/// Supplies per-sample channel scales for one training iteration.
class DropoutPolicy {
 public:
  virtual ~DropoutPolicy() = default;
  virtual std::vector<ChannelScales<float>> sample(const Network<float>& net,
                                                   std::span<const pairgen::LabeledVideo* const> batch,
                                                   std::uint64_t iteration, Rng& rng) = 0;
  /// Auditable state for reports.
  virtual nlohmann::json describe() const = 0;
};

/// Bernoulli channel dropout at rate r with survivors scaled by 1/(1-r).
class StandardDropout final : public DropoutPolicy {
 public:
  StandardDropout(std::string layer, double rate);
  std::vector<ChannelScales<float>> sample(const Network<float>& net,
                                           std::span<const pairgen::LabeledVideo* const> batch,
                                           std::uint64_t iteration, Rng& rng) override;
  nlohmann::json describe() const override;

 private:
  std::string layer_;
  double rate_;
};

struct TrainConfig {
  int epochs = 10;
  double lr = 0.05;
  double momentum = 0.9;
  std::size_t batch = 16;
  /// Checkpoint period in epochs; 0 keeps only the initial and final ones.
  int checkpoint_every = 0;
};

struct TrainResult {
  std::vector<ModelCheckpoint> checkpoints;
  std::vector<double> epoch_loss;  // mean training loss per epoch
};

/// SGD with momentum (v = mu v + g; p -= lr v) over shuffled mini-batches.
/// Checkpoints are taken at epoch 0, every `checkpoint_every` epochs and at
/// the end. `resume` continues a previous run from its checkpoint; epoch
/// order depends only on (seed, epoch), so resumed runs match uninterrupted
/// ones. Throws NumericError carrying the global iteration index when a batch
/// loss is not finite.
TrainResult train(const Network<float>& initial, const pairgen::Dataset& data, const TrainConfig& config,
                  std::uint64_t seed, DropoutPolicy* dropout = nullptr, const std::string& config_hash = "",
                  const ModelCheckpoint* resume = nullptr);

/// Fraction of correctly classified items.
double accuracy(const Network<float>& net, const pairgen::Dataset& data);

/// Key-frame foreground/background IoU averaged over the two classes, with
/// intersections and unions pooled over the whole dataset.
double mean_iou(const Network<float>& net, const pairgen::Dataset& data);

}  // namespace stadyn::zoo
