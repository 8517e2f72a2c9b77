#pragma once

// Central finite-difference check of Network<double>::loss_and_gradients.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stadyn/modelzoo/network.hpp"
#include "stadyn/pairgen/video.hpp"

namespace stadyn::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t checked = 0;
};

/// Elementwise |analytic - numeric| / max(|analytic|, |numeric|, floor).
/// The floor keeps near-zero gradients from dominating on rounding noise.
inline GradCheckResult finite_difference_check(zoo::Network<double>& net,
                                               const std::vector<const pairgen::LabeledVideo*>& batch,
                                               double step = 1e-6, double floor = 1e-3) {
  zoo::ParameterSet<double> grads;
  net.loss_and_gradients(batch, grads);
  GradCheckResult r;
  auto& params = net.parameters().entries();
  for (std::size_t e = 0; e < params.size(); ++e) {
    auto& value = params[e].value;
    const auto& g = grads.entries()[e].value;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + step;
      const double up = net.loss(batch);
      value[i] = saved - step;
      const double down = net.loss(batch);
      value[i] = saved;
      const double numeric = (up - down) / (2 * step);
      const double err = std::abs(g[i] - numeric) / std::max({std::abs(g[i]), std::abs(numeric), floor});
      if (err > r.max_rel_error) {
        r.max_rel_error = err;
        r.worst_parameter = params[e].name + "[" + std::to_string(i) + "]";
      }
      ++r.checked;
    }
  }
  return r;
}

}  // namespace stadyn::testing
