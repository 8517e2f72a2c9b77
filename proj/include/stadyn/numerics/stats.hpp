#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace stadyn {

/// Population Pearson correlation. Returns 0 when either input is constant.
/// Throws std::invalid_argument on length mismatch or length < 2.
double pearson(std::span<const double> a, std::span<const double> b);
double pearson(std::span<const float> a, std::span<const float> b);

/// Shift-invariant softmax. Throws std::invalid_argument on empty input.
std::vector<double> softmax(std::span<const double> scores);

/// Per-channel streaming Pearson correlation between paired rows.
///
/// Each update consumes one row pair (a, b) of `channels` values and applies
/// a Welford co-moment step per channel. Updates are order-sensitive but
/// deterministic for a fixed input order.
class CorrAccumulator {
 public:
  explicit CorrAccumulator(std::size_t channels);

  void update(std::span<const double> a, std::span<const double> b);
  void update(std::span<const float> a, std::span<const float> b);

  std::size_t count() const noexcept { return count_; }
  std::size_t channels() const noexcept { return mean_a_.size(); }

  /// Correlation in [-1, 1]; 0 for degenerate variance or count < 2.
  double correlation(std::size_t channel) const;
  std::vector<double> correlations() const;

 private:
  std::size_t count_ = 0;
  std::vector<double> mean_a_, mean_b_, m2_a_, m2_b_, co_moment_;
};

}  // namespace stadyn
