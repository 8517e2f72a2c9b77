#include "stadyn/modelzoo/train.hpp"

#include <cmath>
#include <stdexcept>

#include "stadyn/errors.hpp"

namespace stadyn::zoo {

StandardDropout::StandardDropout(std::string layer, double rate) : layer_(std::move(layer)), rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
}

std::vector<ChannelScales<float>> StandardDropout::sample(const Network<float>& net,
                                                          std::span<const pairgen::LabeledVideo* const> batch,
                                                          std::uint64_t, Rng& rng) {
  const std::size_t C = net.descriptor().layer_channels(layer_);
  const float keep_scale = static_cast<float>(1.0 / (1.0 - rate_));
  std::vector<ChannelScales<float>> out(batch.size());
  for (auto& s : out) {
    auto& v = s[layer_];
    v.resize(C);
    for (auto& x : v) x = rng.uniform() < rate_ ? 0.0f : keep_scale;
  }
  return out;
}

nlohmann::json StandardDropout::describe() const {
  return {{"kind", "standard"}, {"layer", layer_}, {"rate", rate_}};
}

namespace {

ModelCheckpoint snapshot(const Network<float>& net, const ParameterSet<float>& velocity, int epoch,
                         std::uint64_t seed, const Rng& rng, const std::string& hash) {
  ModelCheckpoint ck;
  ck.descriptor = net.descriptor();
  ck.params = net.parameters();
  ck.velocity = velocity;
  ck.epoch = epoch;
  ck.seed = seed;
  ck.rng = rng.state();
  ck.config_hash = hash;
  for (const auto& [layer, mask] : net.removal_masks()) {
    auto& removed = ck.removed[layer];
    for (std::size_t c = 0; c < mask.size(); ++c) {
      if (mask[c] == 0.0f) removed.push_back(c);
    }
  }
  return ck;
}

}  // namespace

TrainResult train(const Network<float>& initial, const pairgen::Dataset& data, const TrainConfig& config,
                  std::uint64_t seed, DropoutPolicy* dropout, const std::string& config_hash,
                  const ModelCheckpoint* resume) {
  if (data.items.empty()) throw std::invalid_argument("train: empty dataset");
  if (config.batch == 0) throw std::invalid_argument("train: batch must be >= 1");
  if (config.epochs < 0 || config.checkpoint_every < 0) throw std::invalid_argument("train: negative epoch count");

  Network<float> net = initial;
  ParameterSet<float> velocity = net.parameters().zeros_like();
  int start = 0;
  const Rng root = Rng(seed).derive("train");
  Rng dropout_rng = root.derive("dropout");
  if (resume) {
    if (resume->descriptor != initial.descriptor()) throw std::invalid_argument("train: resume descriptor mismatch");
    net.parameters() = resume->params;
    velocity = resume->velocity;
    start = resume->epoch;
    dropout_rng = Rng::from_state(resume->rng);
  }

  TrainResult result;
  if (!resume) result.checkpoints.push_back(snapshot(net, velocity, 0, seed, dropout_rng, config_hash));

  const std::size_t n = data.items.size();
  const std::size_t per_epoch = (n + config.batch - 1) / config.batch;
  const float lr = static_cast<float>(config.lr), mu = static_cast<float>(config.momentum);
  ParameterSet<float> grads;
  std::vector<const pairgen::LabeledVideo*> batch;
  for (int epoch = start; epoch < config.epochs; ++epoch) {
    Rng order_rng = root.derive("order").derive(static_cast<std::uint64_t>(epoch));
    const auto order = order_rng.permutation(n);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < per_epoch; ++b) {
      const std::uint64_t iteration = static_cast<std::uint64_t>(epoch) * per_epoch + b;
      batch.clear();
      for (std::size_t i = b * config.batch; i < std::min(n, (b + 1) * config.batch); ++i) {
        batch.push_back(&data.items[order[i]]);
      }
      std::vector<ChannelScales<float>> scales;
      if (dropout) scales = dropout->sample(net, batch, iteration, dropout_rng);
      const float loss = net.loss_and_gradients(batch, grads, 1.0f, scales);
      if (!std::isfinite(loss)) {
        std::string ids;
        for (std::size_t i = b * config.batch; i < std::min(n, (b + 1) * config.batch); ++i) {
          ids += (ids.empty() ? "" : ",") + std::to_string(order[i]);
        }
        throw NumericError(static_cast<std::int64_t>(iteration),
                           "non-finite loss at epoch " + std::to_string(epoch) + " (samples " + ids + ")");
      }
      loss_sum += loss * static_cast<double>(batch.size());
      auto& params = net.parameters().entries();
      for (std::size_t e = 0; e < params.size(); ++e) {
        auto& p = params[e].value;
        auto& v = velocity.entries()[e].value;
        const auto& g = grads.entries()[e].value;
        for (std::size_t i = 0; i < p.size(); ++i) {
          v[i] = mu * v[i] + g[i];
          p[i] -= lr * v[i];
        }
      }
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(n));
    const int done = epoch + 1;
    if (done == config.epochs || (config.checkpoint_every > 0 && done % config.checkpoint_every == 0)) {
      result.checkpoints.push_back(snapshot(net, velocity, done, seed, dropout_rng, config_hash));
    }
  }
  if (result.checkpoints.empty() || result.checkpoints.back().epoch != std::max(config.epochs, start)) {
    result.checkpoints.push_back(snapshot(net, velocity, std::max(config.epochs, start), seed, dropout_rng,
                                          config_hash));
  }
  return result;
}

double accuracy(const Network<float>& net, const pairgen::Dataset& data) {
  if (data.items.empty()) throw std::invalid_argument("accuracy: empty dataset");
  std::size_t correct = 0;
  for (const auto& it : data.items) correct += net.predict(it.video) == it.label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(data.items.size());
}

double mean_iou(const Network<float>& net, const pairgen::Dataset& data) {
  const auto& d = net.descriptor();
  if (d.head != Head::Segmenter) throw std::invalid_argument("mean_iou: model has no segmentation head");
  if (data.items.empty()) throw std::invalid_argument("mean_iou: empty dataset");
  const std::size_t P = d.height * d.width;
  double inter[2] = {0, 0}, uni[2] = {0, 0};
  for (const auto& it : data.items) {
    const auto logits = net.forward(it.video).output;
    const float* mask = it.mask.raw() + d.key_frame * P;
    for (std::size_t i = 0; i < P; ++i) {
      const int pred = logits[i] > 0.0f ? 1 : 0;
      const int truth = mask[i] > 0.5f ? 1 : 0;
      for (int c = 0; c < 2; ++c) {
        inter[c] += (pred == c && truth == c) ? 1 : 0;
        uni[c] += (pred == c || truth == c) ? 1 : 0;
      }
    }
  }
  double total = 0.0;
  for (int c = 0; c < 2; ++c) total += uni[c] > 0 ? inter[c] / uni[c] : 1.0;
  return total / 2.0;
}

}  // namespace stadyn::zoo
