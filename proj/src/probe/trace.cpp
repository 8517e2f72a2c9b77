#include "stadyn/probe/trace.hpp"

#include <array>
#include <stdexcept>

#include <json.hpp>

#include "stadyn/errors.hpp"
#include "stadyn/io/binary.hpp"

namespace stadyn::probe {

using nlohmann::json;

std::vector<double> LayerTrace::column(int side, std::size_t c) const {
  if (c >= channels) throw std::invalid_argument("trace column out of range");
  const auto& z = side == 1 ? z1 : z2;
  std::vector<double> out(pairs);
  for (std::size_t k = 0; k < pairs; ++k) out[k] = z[k * channels + c];
  return out;
}

const LayerTrace& ActivationTrace::layer(const std::string& name) const {
  for (const auto& l : layers) {
    if (l.name == name) return l;
  }
  throw std::invalid_argument("trace has no layer '" + name + "'");
}

void ActivationTrace::validate() const {
  for (const auto& l : layers) {
    if (l.pairs < 2) throw std::invalid_argument("layer '" + l.name + "': at least 2 pairs required");
    if (l.channels == 0) throw std::invalid_argument("layer '" + l.name + "': no channels");
    if (l.z1.size() != l.pairs * l.channels || l.z2.size() != l.pairs * l.channels) {
      throw std::invalid_argument("layer '" + l.name + "': matrix size does not match pairs x channels");
    }
  }
}

ActivationTrace collect_trace(const ProbeTarget& target, std::span<const pairgen::FactorPair> pairs,
                              std::vector<std::string> layers) {
  if (pairs.size() < 2) throw std::invalid_argument("collect_trace: at least 2 pairs required");
  for (const auto& p : pairs) {
    if (p.shared != pairs.front().shared) throw std::invalid_argument("collect_trace: pairs mix factor tags");
  }
  if (layers.empty()) layers = target.layer_names();

  ActivationTrace trace;
  trace.factor = pairs.front().shared;
  for (const auto& name : layers) {
    LayerTrace l;
    l.name = name;
    l.pairs = pairs.size();
    l.channels = target.channels(name);
    l.z1.reserve(l.pairs * l.channels);
    l.z2.reserve(l.pairs * l.channels);
    trace.layers.push_back(std::move(l));
  }
  for (const auto& p : pairs) {
    const auto a = target.pooled(p.a, layers);
    const auto b = target.pooled(p.b, layers);
    for (auto& l : trace.layers) {
      for (double x : a.at(l.name)) l.z1.push_back(static_cast<float>(x));
      for (double x : b.at(l.name)) l.z2.push_back(static_cast<float>(x));
    }
  }
  return trace;
}

void write_trace(const ActivationTrace& trace, const std::filesystem::path& dir, const std::string& config_hash) {
  trace.validate();
  std::filesystem::create_directories(dir);
  json m;
  m["version"] = 1;
  if (!config_hash.empty()) m["config_hash"] = config_hash;
  m["factor"] = std::string(pairgen::to_string(trace.factor));
  m["layers"] = json::array();
  for (const auto& l : trace.layers) {
    const std::string f1 = l.name + ".z1.f32", f2 = l.name + ".z2.f32";
    m["layers"].push_back({{"name", l.name}, {"channels", l.channels}, {"pairs", l.pairs}, {"files", {f1, f2}}});
    io::write_f32_file(dir / f1, l.z1);
    io::write_f32_file(dir / f2, l.z2);
  }
  io::write_text(dir / "trace.json", m.dump(2) + "\n");
}

ActivationTrace read_trace(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "trace.json";
  const std::string label = manifest_path.string();
  const std::string text = io::read_text(manifest_path);
  ActivationTrace trace;
  std::vector<std::array<std::string, 2>> files;
  try {
    const auto m = json::parse(text);
    if (m.at("version").get<int>() != 1) throw FormatError(label, 0, "unsupported trace version");
    trace.factor = pairgen::shared_factor_from_string(m.at("factor").get<std::string>());
    for (const auto& e : m.at("layers")) {
      LayerTrace l;
      l.name = e.at("name").get<std::string>();
      l.channels = e.at("channels").get<std::size_t>();
      l.pairs = e.at("pairs").get<std::size_t>();
      const auto& f = e.at("files");
      if (!f.is_array() || f.size() != 2) throw FormatError(label, 0, "layer '" + l.name + "': files needs 2 entries");
      files.push_back({f[0].get<std::string>(), f[1].get<std::string>()});
      trace.layers.push_back(std::move(l));
    }
  } catch (const json::parse_error& e) {
    throw FormatError(label, e.byte, std::string("bad JSON: ") + e.what());
  } catch (const json::exception& e) {
    throw FormatError(label, 0, e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(label, 0, e.what());
  }
  for (std::size_t i = 0; i < trace.layers.size(); ++i) {
    auto& l = trace.layers[i];
    l.z1 = io::read_f32_file(dir / files[i][0], l.pairs * l.channels);
    l.z2 = io::read_f32_file(dir / files[i][1], l.pairs * l.channels);
  }
  try {
    trace.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(label, 0, e.what());
  }
  return trace;
}

}  // namespace stadyn::probe
