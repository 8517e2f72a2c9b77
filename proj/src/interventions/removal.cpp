#include "stadyn/interventions/removal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace stadyn::interventions {

std::string_view to_string(RemovalMode mode) {
  switch (mode) {
    case RemovalMode::TopBiased: return "top_biased";
    case RemovalMode::RandomLeastBiased: return "random_least_biased";
    case RemovalMode::PureRandom: return "pure_random";
  }
  return "?";
}

RemovalMode removal_mode_from_string(std::string_view text) {
  for (auto m : {RemovalMode::TopBiased, RemovalMode::RandomLeastBiased, RemovalMode::PureRandom}) {
    if (to_string(m) == text) return m;
  }
  throw std::invalid_argument("unknown removal mode '" + std::string(text) + "'");
}

nlohmann::json RemovalPlan::to_json() const {
  return {{"layer", layer},
          {"mode", std::string(interventions::to_string(mode))},
          {"factor", std::string(pairgen::to_string(factor))},
          {"percent", percent},
          {"seed", seed},
          {"scores", scores},
          {"channels", channels}};
}

std::size_t removal_count(double percent, std::size_t n) {
  if (!(percent >= 0.0 && percent <= 100.0)) throw std::invalid_argument("removal percent must be in [0, 100]");
  return static_cast<std::size_t>(std::llround(percent * static_cast<double>(n) / 100.0));
}

namespace {

std::vector<std::size_t> order_by(std::span<const double> scores, bool descending) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return idx;
}

std::vector<std::size_t> sample_from(std::vector<std::size_t> pool, std::size_t k, Rng& rng) {
  const auto perm = rng.permutation(pool.size());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(pool[perm[i]]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<std::size_t> rank_top_biased(std::span<const double> scores, std::size_t k) {
  if (k > scores.size()) throw std::invalid_argument("cannot remove more channels than the layer has");
  auto idx = order_by(scores, true);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::size_t> rank_random_least_biased(std::span<const double> scores, double percent, Rng& rng) {
  const std::size_t n = scores.size();
  const std::size_t k = removal_count(percent, n);
  const std::size_t pool_size =
      std::min(n, static_cast<std::size_t>(std::llround((percent + 5.0) * static_cast<double>(n) / 100.0)));
  auto pool = order_by(scores, false);
  pool.resize(pool_size);
  return sample_from(std::move(pool), k, rng);
}

std::vector<std::size_t> rank_pure_random(std::size_t n, std::size_t k, Rng& rng) {
  if (k > n) throw std::invalid_argument("cannot remove more channels than the layer has");
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  return sample_from(std::move(all), k, rng);
}

std::vector<double> factor_scores(std::span<const probe::UnitScore> scores, SharedFactor factor) {
  if (factor == SharedFactor::Identical) throw std::invalid_argument("removal ranks by static or dynamic scores");
  std::vector<double> out;
  for (const auto& s : scores) out.push_back(factor == SharedFactor::Static ? s.static_score : s.dynamic_score);
  return out;
}

RemovalPlan plan_removal(const std::string& layer, RemovalMode mode, SharedFactor factor,
                         std::span<const probe::UnitScore> scores, double percent, std::uint64_t seed) {
  RemovalPlan plan;
  plan.layer = layer;
  plan.mode = mode;
  plan.factor = factor;
  plan.percent = percent;
  plan.seed = seed;
  plan.scores = factor_scores(scores, factor);
  Rng rng = Rng(seed).derive("removal");
  const std::size_t k = removal_count(percent, scores.size());
  switch (mode) {
    case RemovalMode::TopBiased: plan.channels = rank_top_biased(plan.scores, k); break;
    case RemovalMode::RandomLeastBiased: plan.channels = rank_random_least_biased(plan.scores, percent, rng); break;
    case RemovalMode::PureRandom: plan.channels = rank_pure_random(scores.size(), k, rng); break;
  }
  return plan;
}

zoo::Network<float> remove_units(const zoo::Network<float>& net, const RemovalPlan& plan) {
  zoo::Network<float> out = net;
  out.remove_channels(plan.layer, plan.channels);
  return out;
}

}  // namespace stadyn::interventions
