#include "stadyn/interventions/dropout.hpp"

#include <cmath>
#include <stdexcept>

#include "stadyn/numerics/stats.hpp"

namespace stadyn::interventions {

std::vector<double> static_scores_for_dropout(const probe::ProbeTarget& target,
                                              std::span<const pairgen::LabeledVideo* const> batch,
                                              const std::string& layer, Rng& rng) {
  if (batch.size() < kMinScoreBatch) {
    throw std::invalid_argument("static scores need a batch of at least " + std::to_string(kMinScoreBatch));
  }
  CorrAccumulator acc(target.channels(layer));
  for (const auto* item : batch) {
    const auto& v = item->video;
    pairgen::Video shuffled;
    if (v.num_frames() >= 2) {
      shuffled.frames = pairgen::permute_frames(v.frames, rng.non_identity_permutation(v.num_frames()));
    } else {
      shuffled.frames = v.frames;
    }
    if (v.has_flow()) shuffled.flow = pairgen::flow_analog(shuffled.frames);
    const auto a = target.pooled(v, {layer}).at(layer);
    const auto b = target.pooled(shuffled, {layer}).at(layer);
    acc.update(a, b);
  }
  return acc.correlations();
}

std::vector<double> static_dropout_probs(std::span<const double> scores) { return softmax(scores); }

std::vector<std::size_t> sample_without_replacement(std::span<const double> weights, std::size_t m, Rng& rng) {
  std::vector<double> w(weights.begin(), weights.end());
  std::size_t positive = 0;
  for (double x : w) {
    if (!(x >= 0.0)) throw std::invalid_argument("sampling weights must be non-negative");
    positive += x > 0.0;
  }
  if (m > positive) throw std::invalid_argument("cannot draw more channels than have positive weight");
  std::vector<std::size_t> out;
  for (std::size_t draw = 0; draw < m; ++draw) {
    double total = 0.0;
    for (double x : w) total += x;
    const double u = rng.uniform() * total;
    double run = 0.0;
    std::size_t pick = w.size();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] <= 0.0) continue;
      pick = i;  // last positive entry absorbs rounding at the top end
      run += w[i];
      if (u < run) break;
    }
    out.push_back(pick);
    w[pick] = 0.0;
  }
  return out;
}

std::vector<float> static_dropout_scales(std::span<const double> probs, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
  const std::size_t C = probs.size();
  std::vector<float> scales(C, 1.0f);
  if (rate == 0.0) return scales;
  const auto m = static_cast<std::size_t>(std::llround(rate * static_cast<double>(C)));
  const float keep = static_cast<float>(1.0 / (1.0 - rate));
  for (auto& s : scales) s = keep;
  for (auto c : sample_without_replacement(probs, m, rng)) scales[c] = 0.0f;
  return scales;
}

nlohmann::json DropoutState::to_json() const {
  return {{"kind", "static"},
          {"layer", layer},
          {"rate", rate},
          {"period", period},
          {"iteration", iteration},
          {"estimated_at", estimated_at},
          {"estimates", estimates},
          {"scores", scores},
          {"probs", probs}};
}

StaticDropout::StaticDropout(std::string layer, double rate, std::uint64_t period) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
  if (period == 0) throw std::invalid_argument("re-estimation period must be >= 1");
  state_.layer = std::move(layer);
  state_.rate = rate;
  state_.period = period;
}

std::vector<zoo::ChannelScales<float>> StaticDropout::sample(const zoo::Network<float>& net,
                                                             std::span<const pairgen::LabeledVideo* const> batch,
                                                             std::uint64_t iteration, Rng& rng) {
  state_.iteration = iteration;
  if (state_.estimates == 0 || iteration >= state_.estimated_at + state_.period) {
    state_.scores = static_scores_for_dropout(probe::NetworkTarget(net), batch, state_.layer, rng);
    state_.probs = static_dropout_probs(state_.scores);
    state_.estimated_at = iteration;
    ++state_.estimates;
  }
  std::vector<zoo::ChannelScales<float>> out(batch.size());
  for (auto& s : out) s[state_.layer] = static_dropout_scales(state_.probs, state_.rate, rng);
  return out;
}

nlohmann::json StaticDropout::describe() const { return state_.to_json(); }

zoo::TrainResult finetune_no_dropout(const zoo::ModelCheckpoint& ck, const pairgen::Dataset& data,
                                     const zoo::TrainConfig& config, std::uint64_t seed,
                                     const std::string& config_hash) {
  return zoo::train(ck.network(), data, config, seed, nullptr, config_hash);
}

}  // namespace stadyn::interventions
