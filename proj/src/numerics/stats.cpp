#include "stadyn/numerics/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stadyn {

namespace {

template <typename T>
double pearson_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("pearson: length mismatch (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  }
  if (a.size() < 2) throw std::invalid_argument("pearson: need at least 2 samples");

  // Exact degeneracy test; a computed variance of a constant column can be a
  // few ulps above zero.
  const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
  const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
  if (*amin == *amax || *bmin == *bmax) return 0.0;

  const double n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += static_cast<double>(a[i]);
    mean_b += static_cast<double>(b[i]);
  }
  mean_a /= n;
  mean_b /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = static_cast<double>(a[i]) - mean_a;
    const double db = static_cast<double>(b[i]) - mean_b;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace

double pearson(std::span<const double> a, std::span<const double> b) {
  return pearson_impl(a, b);
}

double pearson(std::span<const float> a, std::span<const float> b) {
  return pearson_impl(a, b);
}

std::vector<double> softmax(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("softmax: empty input");
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - top);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

CorrAccumulator::CorrAccumulator(std::size_t channels)
    : mean_a_(channels, 0.0),
      mean_b_(channels, 0.0),
      m2_a_(channels, 0.0),
      m2_b_(channels, 0.0),
      co_moment_(channels, 0.0) {}

void CorrAccumulator::update(std::span<const double> a, std::span<const double> b) {
  if (a.size() != channels() || b.size() != channels()) {
    throw std::invalid_argument("CorrAccumulator: row width mismatch");
  }
  ++count_;
  const double n = static_cast<double>(count_);
  for (std::size_t c = 0; c < channels(); ++c) {
    const double da = a[c] - mean_a_[c];
    mean_a_[c] += da / n;
    const double db = b[c] - mean_b_[c];
    mean_b_[c] += db / n;
    m2_a_[c] += da * (a[c] - mean_a_[c]);
    m2_b_[c] += db * (b[c] - mean_b_[c]);
    co_moment_[c] += da * (b[c] - mean_b_[c]);
  }
}

void CorrAccumulator::update(std::span<const float> a, std::span<const float> b) {
  std::vector<double> da(a.begin(), a.end()), db(b.begin(), b.end());
  update(std::span<const double>(da), std::span<const double>(db));
}

double CorrAccumulator::correlation(std::size_t channel) const {
  if (count_ < 2) return 0.0;
  const double va = m2_a_.at(channel), vb = m2_b_.at(channel);
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  return std::clamp(co_moment_[channel] / std::sqrt(va * vb), -1.0, 1.0);
}

std::vector<double> CorrAccumulator::correlations() const {
  std::vector<double> out(channels());
  for (std::size_t c = 0; c < channels(); ++c) out[c] = correlation(c);
  return out;
}

}  // namespace stadyn
