#include "stadyn/probe/metrics.hpp"

#include <algorithm>
#include <stdexcept>

#include "stadyn/numerics/stats.hpp"

namespace stadyn::probe {

namespace {

const LayerTrace& factor_layer(const std::map<SharedFactor, ActivationTrace>& traces, SharedFactor f,
                               const std::string& layer) {
  const auto it = traces.find(f);
  if (it == traces.end()) {
    throw std::invalid_argument("missing " + std::string(pairgen::to_string(f)) + " trace");
  }
  if (it->second.factor != f) throw std::invalid_argument("trace keyed under the wrong factor");
  return it->second.layer(layer);
}

}  // namespace

std::vector<double> channel_correlations(const LayerTrace& layer) {
  if (layer.pairs < 2) throw std::invalid_argument("layer '" + layer.name + "': at least 2 pairs required");
  CorrAccumulator acc(layer.channels);
  for (std::size_t k = 0; k < layer.pairs; ++k) {
    acc.update(std::span(layer.z1).subspan(k * layer.channels, layer.channels),
               std::span(layer.z2).subspan(k * layer.channels, layer.channels));
  }
  return acc.correlations();
}

std::vector<double> unit_counts(std::span<const double> scores, std::size_t channels) {
  auto p = softmax(scores);
  for (auto& x : p) x *= static_cast<double>(channels);
  return p;
}

LayerBias layer_bias(const std::map<SharedFactor, ActivationTrace>& traces, const std::string& layer,
                     ScoreNorm norm) {
  std::vector<SharedFactor> factors{SharedFactor::Static, SharedFactor::Dynamic};
  if (traces.contains(SharedFactor::Identical)) factors.push_back(SharedFactor::Identical);

  LayerBias out;
  std::size_t channels = 0;
  std::vector<double> scores;
  for (auto f : factors) {
    const auto& l = factor_layer(traces, f, layer);
    if (channels != 0 && l.channels != channels) throw std::invalid_argument("factor traces disagree on N^l");
    channels = l.channels;
    const auto corr = channel_correlations(l);
    double s = 0.0;
    for (double c : corr) s += c;  // ascending channel order
    if (norm == ScoreNorm::Mean) s /= static_cast<double>(channels);
    out.score[f] = s;
    scores.push_back(s);
  }
  const auto all = unit_counts(scores, channels);
  const auto two = unit_counts(std::span(scores).first(2), channels);
  for (std::size_t i = 0; i < factors.size(); ++i) out.units[factors[i]] = all[i];
  out.units_two_factor[SharedFactor::Static] = two[0];
  out.units_two_factor[SharedFactor::Dynamic] = two[1];
  return out;
}

std::vector<UnitScore> unit_scores(const std::map<SharedFactor, ActivationTrace>& traces, const std::string& layer) {
  const auto& ls = factor_layer(traces, SharedFactor::Static, layer);
  const auto& ld = factor_layer(traces, SharedFactor::Dynamic, layer);
  if (ls.channels != ld.channels) throw std::invalid_argument("factor traces disagree on N^l");
  const auto s = channel_correlations(ls), d = channel_correlations(ld);
  std::vector<UnitScore> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = {s[i], d[i]};
  return out;
}

std::string_view to_string(UnitClass c) {
  switch (c) {
    case UnitClass::Static: return "static";
    case UnitClass::Dynamic: return "dynamic";
    case UnitClass::Joint: return "joint";
    case UnitClass::Residual: return "residual";
  }
  return "?";
}

UnitClassification classify_units(std::span<const UnitScore> scores, double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("threshold must lie in (0, 1)");
  UnitClassification out;
  out.classes.reserve(scores.size());
  for (const auto& s : scores) {
    const bool st = s.static_score > lambda, dy = s.dynamic_score > lambda;
    UnitClass c;
    if (st && dy) {
      c = UnitClass::Joint;
      ++out.counts.joint;
    } else if (st) {
      c = UnitClass::Static;
      ++out.counts.static_units;
    } else if (dy) {
      c = UnitClass::Dynamic;
      ++out.counts.dynamic_units;
    } else {
      c = UnitClass::Residual;
      ++out.counts.residual;
    }
    out.classes.push_back(c);
  }
  return out;
}

double dynamic_unit_ratio(const UnitCounts& counts) {
  const std::size_t n = counts.dynamic_units + counts.static_units;
  return n == 0 ? 0.5 : static_cast<double>(counts.dynamic_units) / static_cast<double>(n);
}

Tensor<double> center_bias(std::span<const Tensor<float>> masks) {
  if (masks.empty()) throw std::invalid_argument("center_bias: no masks");
  const auto shape = masks.front().shape();
  if (shape.size() != 2) throw std::invalid_argument("center_bias: masks must be H x W");
  Tensor<double> map(shape);
  for (const auto& m : masks) {
    if (m.shape() != shape) throw std::invalid_argument("center_bias: masks differ in shape");
    for (std::size_t i = 0; i < m.size(); ++i) map[i] += m[i] > 0.5f ? 1.0 : 0.0;
  }
  double peak = 0.0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    map[i] /= static_cast<double>(masks.size());
    peak = std::max(peak, map[i]);
  }
  if (peak > 0.0) {
    for (std::size_t i = 0; i < map.size(); ++i) map[i] /= peak;
  }
  return map;
}

const LayerReport& BiasReport::layer(const std::string& name) const {
  for (const auto& l : layers) {
    if (l.name == name) return l;
  }
  throw std::invalid_argument("report has no layer '" + name + "'");
}

BiasReport bias_report(const std::map<SharedFactor, ActivationTrace>& traces, double lambda, ScoreNorm norm) {
  const auto it = traces.find(SharedFactor::Static);
  if (it == traces.end()) throw std::invalid_argument("missing static trace");
  BiasReport report;
  report.lambda = lambda;
  for (const auto& l : it->second.layers) {
    LayerReport r;
    r.name = l.name;
    r.channels = l.channels;
    r.bias = layer_bias(traces, l.name, norm);
    r.unit_scores = unit_scores(traces, l.name);
    r.classification = classify_units(r.unit_scores, lambda);
    report.layers.push_back(std::move(r));
  }
  return report;
}

std::vector<BiasReport> epoch_sweep(std::span<const zoo::ModelCheckpoint> checkpoints,
                                    const std::map<SharedFactor, std::vector<pairgen::FactorPair>>& pairs,
                                    const std::vector<std::string>& layers, double lambda) {
  std::vector<BiasReport> out;
  for (const auto& ck : checkpoints) {
    const auto net = ck.network();
    const NetworkTarget target(net);
    std::map<SharedFactor, ActivationTrace> traces;
    for (const auto& [factor, set] : pairs) traces[factor] = collect_trace(target, set, layers);
    auto report = bias_report(traces, lambda);
    report.epoch = ck.epoch;
    out.push_back(std::move(report));
  }
  return out;
}

nlohmann::json to_json(const BiasReport& report) {
  using nlohmann::json;
  json layers = json::array();
  for (const auto& l : report.layers) {
    json scores = json::object(), units = json::object(), two = json::object();
    for (const auto& [f, s] : l.bias.score) scores[std::string(pairgen::to_string(f))] = s;
    for (const auto& [f, n] : l.bias.units) units[std::string(pairgen::to_string(f))] = n;
    for (const auto& [f, n] : l.bias.units_two_factor) two[std::string(pairgen::to_string(f))] = n;
    json per_unit = json::array();
    for (std::size_t i = 0; i < l.unit_scores.size(); ++i) {
      per_unit.push_back({{"channel", i},
                          {"static", l.unit_scores[i].static_score},
                          {"dynamic", l.unit_scores[i].dynamic_score},
                          {"class", std::string(to_string(l.classification.classes[i]))}});
    }
    const auto& c = l.classification.counts;
    layers.push_back({{"name", l.name},
                      {"channels", l.channels},
                      {"scores", scores},
                      {"units", units},
                      {"units_two_factor", two},
                      {"counts",
                       {{"static", c.static_units}, {"dynamic", c.dynamic_units}, {"joint", c.joint},
                        {"residual", c.residual}}},
                      {"unit_scores", per_unit}});
  }
  return {{"lambda", report.lambda}, {"epoch", report.epoch}, {"layers", layers}};
}

}  // namespace stadyn::probe
