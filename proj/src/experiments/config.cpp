#include "stadyn/experiments/config.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "stadyn/errors.hpp"
#include "stadyn/interventions/dropout.hpp"
#include "stadyn/io/binary.hpp"
#include "stadyn/numerics/rng.hpp"

namespace stadyn::experiments {

using nlohmann::json;

std::string_view to_string(DropoutKind k) {
  switch (k) {
    case DropoutKind::None: return "none";
    case DropoutKind::Standard: return "standard";
    case DropoutKind::Static: return "static";
  }
  return "?";
}

json default_config() {
  const pairgen::VideoSpec spec;
  const zoo::TrainConfig tc;
  return {
      {"seed", 1},
      {"output", "out"},
      {"dataset",
       {{"task_mode", "DynamicOnly"},
        {"train", 400},
        {"test", 200},
        {"frames", spec.frames},
        {"height", spec.height},
        {"width", spec.width},
        {"palettes", spec.palettes},
        {"textures", spec.textures},
        {"shapes", spec.shapes},
        {"styles", spec.styles},
        {"dir", ""}}},
      {"model",
       {{"kind", "SingleStream3D"},
        {"widths", {8, 16}},
        {"cross_connection", "None"},
        {"fusion", "Gated"},
        {"head", "Classifier"},
        {"se_reduction", 2},
        {"key_frame", 0}}},
      {"train",
       {{"epochs", 35},
        {"lr", 0.1},
        {"momentum", tc.momentum},
        {"batch", tc.batch},
        {"checkpoint_every", 0},
        {"resume", false},
        {"dropout", {{"kind", "none"}, {"rate", 0.5}, {"layer", ""}, {"period", 30}}}}},
      {"probe",
       {{"lambda", probe::kDefaultThreshold},
        {"pairs", 200},
        {"layers", json::array()},
        {"pair_mode", "frame_shuffle"},
        {"norm", "mean"},
        {"checkpoint", ""},
        {"trace_dir", ""},
        {"epoch_series", false}}},
      {"ablate", {{"grid", {0, 10, 20, 30, 40, 50}}, {"layer", ""}, {"checkpoint", ""}}},
      {"dose",
       {{"rates", {0.1, 0.3, 0.5, 0.7}},
        {"standard_rate", 0.5},
        {"layer", ""},
        {"finetune_epochs", 0},
        {"finetune_lr", 0.001}}},
  };
}

namespace {

enum class Kind { Unsigned, Number, String, Boolean, Object, Array };

// Element kinds for arrays whose default is empty.
const std::map<std::string, Kind> kEmptyArrayElements = {{"probe.layers", Kind::String}};

Kind kind_of(const json& v) {
  switch (v.type()) {
    case json::value_t::number_unsigned:
    case json::value_t::number_integer: return Kind::Unsigned;  // every integer key is a count or seed
    case json::value_t::number_float: return Kind::Number;
    case json::value_t::string: return Kind::String;
    case json::value_t::boolean: return Kind::Boolean;
    case json::value_t::object: return Kind::Object;
    case json::value_t::array: return Kind::Array;
    default: return Kind::String;
  }
}

const char* describe(Kind k) {
  switch (k) {
    case Kind::Unsigned: return "a non-negative integer";
    case Kind::Number: return "a number";
    case Kind::String: return "a string";
    case Kind::Boolean: return "a boolean";
    case Kind::Object: return "an object";
    case Kind::Array: return "an array";
  }
  return "?";
}

bool matches(Kind want, const json& v) {
  switch (want) {
    case Kind::Unsigned: return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    case Kind::Number: return v.is_number();
    case Kind::String: return v.is_string();
    case Kind::Boolean: return v.is_boolean();
    case Kind::Object: return v.is_object();
    case Kind::Array: return v.is_array();
  }
  return false;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_scalar(const json& def, const json& v, const std::string& path) {
  Kind want = kind_of(def);
  if (want == Kind::Unsigned && v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
    throw ConfigError(path, "must be non-negative");
  }
  if (!matches(want, v)) throw ConfigError(path, std::string("expected ") + describe(want));
}

}  // namespace

void merge_config(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, value] : user.items()) {
    const std::string here = join(path, key);
    if (!base.contains(key)) throw ConfigError(here, "unknown key");
    json& slot = base[key];
    if (slot.is_object()) {
      merge_config(slot, value, here);
      continue;
    }
    if (slot.is_array()) {
      if (!value.is_array()) throw ConfigError(here, "expected an array");
      Kind elem = Kind::String;
      if (!slot.empty()) {
        elem = kind_of(slot.front());
        if (elem == Kind::Unsigned) {
          // numeric grids default to integers but accept any number
          elem = here == "model.widths" ? Kind::Unsigned : Kind::Number;
        }
      } else if (auto it = kEmptyArrayElements.find(here); it != kEmptyArrayElements.end()) {
        elem = it->second;
      }
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (!matches(elem, value[i])) {
          throw ConfigError(here + "[" + std::to_string(i) + "]", std::string("expected ") + describe(elem));
        }
      }
      slot = value;
      continue;
    }
    check_scalar(slot, value, here);
    slot = value;
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json patch = value;
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    parts.push_back(key.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (it->empty()) throw ConfigError(key, "empty path segment");
    patch = json{{*it, patch}};
  }
  merge_config(doc, patch);
}

namespace {

template <typename T>
T get(const json& doc, const std::string& path) {
  const json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    node = &node->at(path.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return node->get<T>();
}

template <typename F>
auto parse_field(const json& doc, const std::string& path, F&& parse) {
  const auto text = get<std::string>(doc, path);
  try {
    return parse(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

}  // namespace

ExperimentConfig resolve_config(const json& doc) {
  json full = default_config();
  merge_config(full, doc);

  ExperimentConfig c;
  c.doc = full;
  c.seed = get<std::uint64_t>(full, "seed");
  c.output = get<std::string>(full, "output");
  require(!c.output.empty(), "output", "must not be empty");

  auto& d = c.dataset;
  d.task_mode = parse_field(full, "dataset.task_mode", pairgen::task_mode_from_string);
  d.train = get<std::size_t>(full, "dataset.train");
  d.test = get<std::size_t>(full, "dataset.test");
  require(d.train >= 1, "dataset.train", "must be >= 1");
  require(d.test >= 1, "dataset.test", "must be >= 1");
  d.spec.frames = get<std::size_t>(full, "dataset.frames");
  d.spec.height = get<std::size_t>(full, "dataset.height");
  d.spec.width = get<std::size_t>(full, "dataset.width");
  d.spec.palettes = get<int>(full, "dataset.palettes");
  d.spec.textures = get<int>(full, "dataset.textures");
  d.spec.shapes = get<int>(full, "dataset.shapes");
  d.spec.styles = get<int>(full, "dataset.styles");
  d.dir = get<std::string>(full, "dataset.dir");
  require(d.spec.frames >= 2, "dataset.frames", "must be >= 2");
  require(d.spec.height >= 4, "dataset.height", "must be >= 4");
  require(d.spec.width >= 4, "dataset.width", "must be >= 4");
  require(d.spec.palettes >= 1 && d.spec.palettes <= pairgen::kMaxPalettes, "dataset.palettes",
          "must be in [1, " + std::to_string(pairgen::kMaxPalettes) + "]");
  require(d.spec.textures >= 1 && d.spec.textures <= 4, "dataset.textures", "must be in [1, 4]");
  require(d.spec.shapes >= 1 && d.spec.shapes <= 4, "dataset.shapes", "must be in [1, 4]");
  require(d.spec.styles >= 2 && d.spec.styles <= pairgen::kNumStyles, "dataset.styles",
          "must be in [2, " + std::to_string(pairgen::kNumStyles) + "]");

  auto& m = c.model;
  m.kind = parse_field(full, "model.kind", zoo::model_kind_from_string);
  m.widths = get<std::vector<std::size_t>>(full, "model.widths");
  m.cross_connection = parse_field(full, "model.cross_connection", zoo::cross_connection_from_string);
  m.fusion = parse_field(full, "model.fusion", zoo::fusion_from_string);
  m.head = parse_field(full, "model.head", zoo::head_from_string);
  m.se_reduction = get<std::size_t>(full, "model.se_reduction");
  m.key_frame = get<std::size_t>(full, "model.key_frame");
  m.frames = d.spec.frames;
  m.height = d.spec.height;
  m.width = d.spec.width;
  m.num_classes = pairgen::num_classes(d.task_mode, d.spec);
  if (m.head == zoo::Head::Segmenter) {
    require(d.task_mode == pairgen::TaskMode::Camouflage, "model.head", "Segmenter needs the Camouflage task");
  } else {
    require(d.task_mode != pairgen::TaskMode::Camouflage, "model.head", "the Camouflage task needs a Segmenter");
  }
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("model", e.what());
  }

  auto& t = c.train;
  t.config.epochs = get<int>(full, "train.epochs");
  t.config.lr = get<double>(full, "train.lr");
  t.config.momentum = get<double>(full, "train.momentum");
  t.config.batch = get<std::size_t>(full, "train.batch");
  t.config.checkpoint_every = get<int>(full, "train.checkpoint_every");
  t.resume = get<bool>(full, "train.resume");
  require(t.config.epochs >= 0, "train.epochs", "must be >= 0");
  require(t.config.lr >= 0, "train.lr", "must be >= 0");
  require(t.config.momentum >= 0 && t.config.momentum < 1, "train.momentum", "must be in [0, 1)");
  require(t.config.batch >= 1, "train.batch", "must be >= 1");
  require(t.config.checkpoint_every >= 0, "train.checkpoint_every", "must be >= 0");
  const auto kind = get<std::string>(full, "train.dropout.kind");
  if (kind == "none") {
    t.dropout.kind = DropoutKind::None;
  } else if (kind == "standard") {
    t.dropout.kind = DropoutKind::Standard;
  } else if (kind == "static") {
    t.dropout.kind = DropoutKind::Static;
  } else {
    throw ConfigError("train.dropout.kind", "expected none, standard or static");
  }
  t.dropout.rate = get<double>(full, "train.dropout.rate");
  t.dropout.layer = get<std::string>(full, "train.dropout.layer");
  t.dropout.period = get<std::uint64_t>(full, "train.dropout.period");
  require(t.dropout.rate >= 0 && t.dropout.rate < 1, "train.dropout.rate", "must be in [0, 1)");
  require(t.dropout.period >= 1, "train.dropout.period", "must be >= 1");

  const auto known_layer = [&](const std::string& layer, const std::string& path) {
    if (layer.empty()) return;
    const auto names = m.probe_layers();
    require(std::find(names.begin(), names.end(), layer) != names.end(), path,
            "model has no layer '" + layer + "'");
  };
  known_layer(t.dropout.layer, "train.dropout.layer");
  if (t.dropout.kind == DropoutKind::Static) {
    require(t.config.batch >= interventions::kMinScoreBatch, "train.batch",
            "static dropout needs batches of at least " + std::to_string(interventions::kMinScoreBatch));
  }

  auto& p = c.probe;
  p.lambda = get<double>(full, "probe.lambda");
  require(p.lambda > 0 && p.lambda < 1, "probe.lambda", "must be in (0, 1)");
  p.pairs = get<std::size_t>(full, "probe.pairs");
  require(p.pairs >= 2, "probe.pairs", "must be >= 2");
  p.layers = get<std::vector<std::string>>(full, "probe.layers");
  for (std::size_t i = 0; i < p.layers.size(); ++i) known_layer(p.layers[i], "probe.layers[" + std::to_string(i) + "]");
  const auto mode = get<std::string>(full, "probe.pair_mode");
  if (mode == "frame_shuffle") {
    p.pair_mode = pairgen::PairMode::FrameShuffle;
  } else if (mode == "flow_jitter") {
    p.pair_mode = pairgen::PairMode::FlowJitter;
  } else {
    throw ConfigError("probe.pair_mode", "expected frame_shuffle or flow_jitter");
  }
  const auto norm = get<std::string>(full, "probe.norm");
  if (norm == "mean") {
    p.norm = probe::ScoreNorm::Mean;
  } else if (norm == "raw_sum") {
    p.norm = probe::ScoreNorm::RawSum;
  } else {
    throw ConfigError("probe.norm", "expected mean or raw_sum");
  }
  p.checkpoint = get<std::string>(full, "probe.checkpoint");
  p.trace_dir = get<std::string>(full, "probe.trace_dir");
  p.epoch_series = get<bool>(full, "probe.epoch_series");

  auto& a = c.ablate;
  a.grid = get<std::vector<double>>(full, "ablate.grid");
  require(!a.grid.empty(), "ablate.grid", "must not be empty");
  for (std::size_t i = 0; i < a.grid.size(); ++i) {
    require(a.grid[i] >= 0 && a.grid[i] <= 100, "ablate.grid[" + std::to_string(i) + "]", "must be in [0, 100]");
  }
  a.layer = get<std::string>(full, "ablate.layer");
  known_layer(a.layer, "ablate.layer");
  a.checkpoint = get<std::string>(full, "ablate.checkpoint");

  auto& ds = c.dose;
  ds.rates = get<std::vector<double>>(full, "dose.rates");
  for (std::size_t i = 0; i < ds.rates.size(); ++i) {
    require(ds.rates[i] > 0 && ds.rates[i] < 1, "dose.rates[" + std::to_string(i) + "]", "must be in (0, 1)");
  }
  ds.standard_rate = get<double>(full, "dose.standard_rate");
  require(ds.standard_rate >= 0 && ds.standard_rate < 1, "dose.standard_rate", "must be in [0, 1)");
  ds.layer = get<std::string>(full, "dose.layer");
  known_layer(ds.layer, "dose.layer");
  ds.finetune_epochs = get<int>(full, "dose.finetune_epochs");
  require(ds.finetune_epochs >= 0, "dose.finetune_epochs", "must be >= 0");
  ds.finetune_lr = get<double>(full, "dose.finetune_lr");
  require(ds.finetune_lr >= 0, "dose.finetune_lr", "must be >= 0");
  return c;
}

std::string ExperimentConfig::hash() const {
  json canon = doc;
  canon.erase("output");
  canon["train"].erase("resume");
  canon["train"].erase("epochs");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canon.dump())));
  return buf;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  json doc = default_config();
  if (!path.empty()) {
    std::string text;
    try {
      text = io::read_text(path);
    } catch (const FormatError& e) {
      throw ConfigError("<file>", std::string("cannot read config: ") + e.what());
    }
    json user;
    try {
      user = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
    }
    merge_config(doc, user);
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return resolve_config(doc);
}

}  // namespace stadyn::experiments
