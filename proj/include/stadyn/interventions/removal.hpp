#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stadyn/modelzoo/network.hpp"
#include "stadyn/numerics/rng.hpp"
#include "stadyn/probe/metrics.hpp"

namespace stadyn::interventions {

using pairgen::SharedFactor;

enum class RemovalMode {
  TopBiased,          // highest scores for `factor`
  RandomLeastBiased,  // random draw among the least `factor`-biased channels
  PureRandom,
};

std::string_view to_string(RemovalMode mode);
RemovalMode removal_mode_from_string(std::string_view text);

/// Channels to zero at one layer, with the inputs that chose them.
struct RemovalPlan {
  std::string layer;
  RemovalMode mode = RemovalMode::TopBiased;
  SharedFactor factor = SharedFactor::Dynamic;
  double percent = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> scores;          // per-channel scores used for ranking
  std::vector<std::size_t> channels;  // unique, ascending

  nlohmann::json to_json() const;
};

/// round(percent * n / 100); throws std::invalid_argument outside [0, 100].
std::size_t removal_count(double percent, std::size_t n);

/// The k highest-scoring channels (ties go to the lower index).
std::vector<std::size_t> rank_top_biased(std::span<const double> scores, std::size_t k);

/// Samples round(x N / 100) channels uniformly without replacement from the
/// round((x + 5) N / 100) channels with the lowest `scores` (the pool is
/// clamped to N). Result is ascending.
std::vector<std::size_t> rank_random_least_biased(std::span<const double> scores, double percent, Rng& rng);

/// k channels uniformly without replacement, ascending.
std::vector<std::size_t> rank_pure_random(std::size_t n, std::size_t k, Rng& rng);

/// Per-channel score of `factor` from unit scores (static or dynamic only).
std::vector<double> factor_scores(std::span<const probe::UnitScore> scores, SharedFactor factor);

RemovalPlan plan_removal(const std::string& layer, RemovalMode mode, SharedFactor factor,
                         std::span<const probe::UnitScore> scores, double percent, std::uint64_t seed);

/// Copy of `net` with the plan's channels persistently zeroed.
zoo::Network<float> remove_units(const zoo::Network<float>& net, const RemovalPlan& plan);

}  // namespace stadyn::interventions
