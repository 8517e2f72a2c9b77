#include "stadyn/experiments/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>

#include "stadyn/errors.hpp"
#include "stadyn/experiments/tables.hpp"
#include "stadyn/interventions/dropout.hpp"
#include "stadyn/io/binary.hpp"
#include "stadyn/modelzoo/checkpoint.hpp"
#include "stadyn/pairgen/dataset_io.hpp"
#include "stadyn/probe/trace.hpp"

namespace stadyn::experiments {

namespace fs = std::filesystem;
using nlohmann::json;
using interventions::RemovalMode;

namespace {

constexpr SharedFactor kFactors[] = {SharedFactor::Static, SharedFactor::Dynamic, SharedFactor::Identical};

std::string factor_name(SharedFactor f) { return std::string(pairgen::to_string(f)); }

Rng root(const ExperimentConfig& cfg) { return Rng(cfg.seed); }

void write_config(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.output);
  write_json_report(cfg.output / "config.json", "config/v1", {{"config", cfg.doc}}, cfg.hash(), cfg.seed);
}

pairgen::Dataset shuffled(const ExperimentConfig& cfg, const pairgen::Dataset& data, std::string_view split) {
  return pairgen::shuffle_dataset_frames(data, root(cfg).derive("shuffle").derive(split));
}

std::vector<pairgen::FactorPair> factor_pairs(const ExperimentConfig& cfg, const pairgen::Dataset& data,
                                              SharedFactor f) {
  return pairgen::make_pairs(data, f, cfg.probe.pair_mode, cfg.probe.pairs,
                             root(cfg).derive("pairs").derive(pairgen::to_string(f)));
}

std::string checkpoint_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%04d.ckpt", epoch);
  return buf;
}

json read_json(const fs::path& path) {
  const std::string text = io::read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string(), e.byte, e.what());
  }
}

std::string header_hash(const json& j, const fs::path& path) {
  if (j.contains("header") && j["header"].contains("config_hash")) return j["header"]["config_hash"].get<std::string>();
  if (j.contains("config_hash")) return j["config_hash"].get<std::string>();
  throw FormatError(path.string(), 0, "no config hash");
}

/// Final checkpoint of this config's own training run.
zoo::ModelCheckpoint own_final_checkpoint(const ExperimentConfig& cfg) {
  const fs::path run = cfg.output / "train" / "run.json";
  const json j = read_json(run);
  const std::string recorded = header_hash(j, run);
  if (recorded != cfg.hash()) {
    throw ConfigError("output", "training run in " + (cfg.output / "train").string() + " has config hash " + recorded +
                                    ", this config has " + cfg.hash());
  }
  return zoo::load_checkpoint(cfg.output / "train" / j.at("final").get<std::string>());
}

struct Target {
  zoo::Network<float> net;
  int epoch = 0;
};

Target load_target(const ExperimentConfig& cfg, const std::string& spec, const std::string& key) {
  if (spec == "init") return {initial_network(cfg), 0};
  const zoo::ModelCheckpoint ck = spec.empty() ? own_final_checkpoint(cfg) : zoo::load_checkpoint(spec);
  const auto& d = ck.descriptor;
  if (d.frames != cfg.model.frames || d.height != cfg.model.height || d.width != cfg.model.width ||
      d.head != cfg.model.head) {
    throw ConfigError(key, "checkpoint model does not fit the configured dataset");
  }
  return {ck.network(), ck.epoch};
}

probe::UnitClassification classify_layer(const ExperimentConfig& cfg, const zoo::Network<float>& net,
                                         const pairgen::Dataset& data, const std::string& layer,
                                         probe::LayerBias* bias = nullptr,
                                         std::vector<probe::UnitScore>* scores = nullptr) {
  const probe::NetworkTarget target(net);
  std::map<SharedFactor, probe::ActivationTrace> traces;
  for (auto f : {SharedFactor::Static, SharedFactor::Dynamic}) {
    traces[f] = probe::collect_trace(target, factor_pairs(cfg, data, f), {layer});
  }
  auto s = probe::unit_scores(traces, layer);
  if (bias) *bias = probe::layer_bias(traces, layer, cfg.probe.norm);
  auto out = probe::classify_units(s, cfg.probe.lambda);
  if (scores) *scores = std::move(s);
  return out;
}

void add_report_rows(const probe::BiasReport& r, CsvTable& layers, CsvTable& classes, CsvTable* units) {
  for (const auto& l : r.layers) {
    const auto get = [](const std::map<SharedFactor, double>& m, SharedFactor f) {
      const auto it = m.find(f);
      return it == m.end() ? std::string() : cell(it->second);
    };
    layers.add({cell(r.epoch), l.name, cell(l.channels), get(l.bias.score, SharedFactor::Static),
                get(l.bias.score, SharedFactor::Dynamic), get(l.bias.score, SharedFactor::Identical),
                get(l.bias.units, SharedFactor::Static), get(l.bias.units, SharedFactor::Dynamic),
                get(l.bias.units, SharedFactor::Identical), get(l.bias.units_two_factor, SharedFactor::Static),
                get(l.bias.units_two_factor, SharedFactor::Dynamic)});
    const auto& c = l.classification.counts;
    classes.add({cell(r.epoch), l.name, cell(l.channels), cell(r.lambda), cell(c.static_units), cell(c.dynamic_units),
                 cell(c.joint), cell(c.residual), cell(probe::dynamic_unit_ratio(c))});
    if (!units) continue;
    for (std::size_t i = 0; i < l.unit_scores.size(); ++i) {
      units->add({cell(r.epoch), l.name, cell(i), cell(l.unit_scores[i].static_score),
                  cell(l.unit_scores[i].dynamic_score), std::string(probe::to_string(l.classification.classes[i]))});
    }
  }
}

}  // namespace

Splits load_splits(const ExperimentConfig& cfg) {
  const auto& d = cfg.dataset;
  if (d.dir.empty()) {
    const Rng data = root(cfg).derive("data");
    return {pairgen::generate_dataset(d.task_mode, d.train, d.spec, data.derive("train")),
            pairgen::generate_dataset(d.task_mode, d.test, d.spec, data.derive("test"))};
  }
  Splits s{pairgen::import_dataset(fs::path(d.dir) / "train"), pairgen::import_dataset(fs::path(d.dir) / "test")};
  for (const auto* part : {&s.train, &s.test}) {
    const auto& spec = part->spec;
    if (part->mode != d.task_mode || spec.frames != d.spec.frames || spec.height != d.spec.height ||
        spec.width != d.spec.width || spec.styles != d.spec.styles) {
      throw ConfigError("dataset.dir", "stored dataset does not match the dataset section");
    }
  }
  return s;
}

zoo::Network<float> initial_network(const ExperimentConfig& cfg) {
  return zoo::Network<float>(cfg.model, root(cfg).derive("model").next_u64());
}

std::uint64_t train_seed(const ExperimentConfig& cfg) { return root(cfg).derive("train").next_u64(); }

double evaluate(const zoo::Network<float>& net, const pairgen::Dataset& data) {
  return net.descriptor().head == zoo::Head::Classifier ? zoo::accuracy(net, data) : zoo::mean_iou(net, data);
}

std::string metric_name(const zoo::ArchitectureDescriptor& d) {
  return d.head == zoo::Head::Classifier ? "accuracy" : "miou";
}

std::unique_ptr<zoo::DropoutPolicy> make_dropout(const DropoutSection& d, const zoo::ArchitectureDescriptor& model) {
  const std::string layer = d.layer.empty() ? model.final_layer() : d.layer;
  switch (d.kind) {
    case DropoutKind::None: return nullptr;
    case DropoutKind::Standard: return std::make_unique<zoo::StandardDropout>(layer, d.rate);
    case DropoutKind::Static: return std::make_unique<interventions::StaticDropout>(layer, d.rate, d.period);
  }
  return nullptr;
}

GenRun run_gen(const ExperimentConfig& cfg) {
  write_config(cfg);
  const Splits s = load_splits(cfg);
  GenRun out{cfg.output / "dataset" / "train", cfg.output / "dataset" / "test"};
  pairgen::export_dataset(s.train, out.train_dir, cfg.hash());
  pairgen::export_dataset(s.test, out.test_dir, cfg.hash());
  return out;
}

TrainRun run_train(const ExperimentConfig& cfg) {
  write_config(cfg);
  const fs::path dir = cfg.output / "train";
  const fs::path run_file = dir / "run.json";
  const std::string hash = cfg.hash();

  std::optional<zoo::ModelCheckpoint> resume;
  std::vector<double> earlier_loss;
  std::vector<int> earlier_epochs;
  if (cfg.train.resume) {
    if (!fs::exists(run_file)) throw ConfigError("train.resume", "no previous run in " + dir.string());
    const json prev = read_json(run_file);
    const std::string recorded = header_hash(prev, run_file);
    if (recorded != hash) {
      throw ConfigError("train.resume",
                        "previous run has config hash " + recorded + ", this config has " + hash + "; refusing to resume");
    }
    resume = zoo::load_checkpoint(dir / prev.at("final").get<std::string>());
    if (resume->config_hash != hash) throw ConfigError("train.resume", "checkpoint config hash does not match");
    earlier_loss = prev.at("epoch_loss").get<std::vector<double>>();
    earlier_loss.resize(std::min<std::size_t>(earlier_loss.size(), static_cast<std::size_t>(resume->epoch)));
    for (const auto& c : prev.at("checkpoints")) {
      if (c.at("epoch").get<int>() <= resume->epoch) earlier_epochs.push_back(c.at("epoch").get<int>());
    }
  } else if (fs::exists(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      const auto name = e.path().filename().string();
      if (name.rfind("epoch_", 0) == 0 && e.path().extension() == ".ckpt") fs::remove(e.path());
    }
  }
  fs::create_directories(dir);

  const Splits s = load_splits(cfg);
  auto dropout = make_dropout(cfg.train.dropout, cfg.model);
  auto result = zoo::train(initial_network(cfg), s.train, cfg.train.config, train_seed(cfg), dropout.get(), hash,
                           resume ? &*resume : nullptr);

  TrainRun out;
  out.checkpoints = std::move(result.checkpoints);
  out.epoch_loss = earlier_loss;
  out.epoch_loss.insert(out.epoch_loss.end(), result.epoch_loss.begin(), result.epoch_loss.end());
  out.final_checkpoint = out.checkpoints.empty() ? *resume : out.checkpoints.back();
  out.test_metric = evaluate(out.final_checkpoint.network(), s.test);

  std::vector<int> epochs = earlier_epochs;
  for (const auto& ck : out.checkpoints) {
    zoo::save_checkpoint(ck, dir / checkpoint_name(ck.epoch));
    if (std::find(epochs.begin(), epochs.end(), ck.epoch) == epochs.end()) epochs.push_back(ck.epoch);
  }
  json list = json::array();
  for (int e : epochs) list.push_back({{"epoch", e}, {"file", checkpoint_name(e)}});

  CsvTable loss(schemas::kTrainLoss);
  for (std::size_t i = 0; i < out.epoch_loss.size(); ++i) loss.add({cell(i + 1), cell(out.epoch_loss[i])});
  loss.write(dir / "loss.csv", hash, cfg.seed);

  json body{{"model", zoo::to_json(cfg.model)},
            {"checkpoints", list},
            {"final", checkpoint_name(out.final_checkpoint.epoch)},
            {"epoch_loss", out.epoch_loss},
            {"metric", metric_name(cfg.model)},
            {"test_metric", out.test_metric},
            {"dropout", dropout ? dropout->describe() : json(nullptr)}};
  write_json_report(run_file, "train_run/v1", std::move(body), hash, cfg.seed);
  return out;
}

ProbeRun run_probe(const ExperimentConfig& cfg) {
  write_config(cfg);
  const fs::path dir = cfg.output / "probe";
  fs::create_directories(dir);
  const std::string hash = cfg.hash();
  ProbeRun out;

  if (!cfg.probe.trace_dir.empty()) {
    std::map<SharedFactor, probe::ActivationTrace> traces;
    for (auto f : kFactors) {
      const fs::path sub = fs::path(cfg.probe.trace_dir) / factor_name(f);
      if (f == SharedFactor::Identical && !fs::exists(sub)) continue;
      traces[f] = probe::read_trace(sub);
      if (traces[f].factor != f) throw FormatError((sub / "trace.json").string(), 0, "trace factor disagrees with directory");
    }
    out.report = probe::bias_report(traces, cfg.probe.lambda, cfg.probe.norm);
  } else {
    const Target t = load_target(cfg, cfg.probe.checkpoint, "probe.checkpoint");
    const Splits s = load_splits(cfg);
    const probe::NetworkTarget target(t.net);
    std::map<SharedFactor, std::vector<pairgen::FactorPair>> pairs;
    std::map<SharedFactor, probe::ActivationTrace> traces;
    for (auto f : kFactors) {
      pairs[f] = factor_pairs(cfg, s.test, f);
      traces[f] = probe::collect_trace(target, pairs[f], cfg.probe.layers);
      probe::write_trace(traces[f], dir / "traces" / factor_name(f), hash);
    }
    out.report = probe::bias_report(traces, cfg.probe.lambda, cfg.probe.norm);
    out.report.epoch = t.epoch;

    if (cfg.probe.epoch_series && cfg.probe.checkpoint.empty()) {
      const json run = read_json(cfg.output / "train" / "run.json");
      std::vector<zoo::ModelCheckpoint> cks;
      for (const auto& c : run.at("checkpoints")) {
        cks.push_back(zoo::load_checkpoint(cfg.output / "train" / c.at("file").get<std::string>()));
      }
      const auto layers = cfg.probe.layers.empty() ? cfg.model.probe_layers() : cfg.probe.layers;
      out.series = probe::epoch_sweep(cks, pairs, layers, cfg.probe.lambda);
      CsvTable series(schemas::kEpochSeries);
      for (const auto& r : out.series) {
        for (const auto& l : r.layers) {
          const auto& c = l.classification.counts;
          series.add({cell(r.epoch), l.name, cell(l.bias.score.at(SharedFactor::Static)),
                      cell(l.bias.score.at(SharedFactor::Dynamic)), cell(c.static_units), cell(c.dynamic_units),
                      cell(c.joint), cell(c.residual), cell(probe::dynamic_unit_ratio(c))});
        }
      }
      series.write(dir / "epoch_series.csv", hash, cfg.seed);
    }
  }

  CsvTable layers(schemas::kBiasLayers), classes(schemas::kUnitClasses), units(schemas::kUnits);
  add_report_rows(out.report, layers, classes, &units);
  layers.write(dir / "bias_layers.csv", hash, cfg.seed);
  classes.write(dir / "unit_classes.csv", hash, cfg.seed);
  units.write(dir / "units.csv", hash, cfg.seed);
  write_json_report(dir / "bias_report.json", "bias_report/v1", probe::to_json(out.report), hash, cfg.seed);
  return out;
}

double AblateRun::value(RemovalMode mode, SharedFactor factor, double percent) const {
  for (const auto& r : rows) {
    if (r.plan.mode == mode && r.plan.factor == factor && r.plan.percent == percent) return r.value;
  }
  throw std::invalid_argument("no removal row for that mode, factor and percent");
}

AblateRun run_ablate(const ExperimentConfig& cfg) {
  write_config(cfg);
  const fs::path dir = cfg.output / "ablate";
  fs::create_directories(dir);
  const std::string hash = cfg.hash();
  const Target t = load_target(cfg, cfg.ablate.checkpoint, "ablate.checkpoint");
  const Splits s = load_splits(cfg);

  AblateRun out;
  out.layer = cfg.ablate.layer.empty() ? cfg.model.final_layer() : cfg.ablate.layer;
  out.metric = metric_name(cfg.model);
  std::vector<probe::UnitScore> scores;
  classify_layer(cfg, t.net, s.test, out.layer, &out.bias, &scores);
  out.dominant = out.bias.score.at(SharedFactor::Static) > out.bias.score.at(SharedFactor::Dynamic)
                     ? SharedFactor::Static
                     : SharedFactor::Dynamic;
  out.baseline = evaluate(t.net, s.test);

  std::vector<std::pair<RemovalMode, SharedFactor>> modes;
  for (auto mode : {RemovalMode::TopBiased, RemovalMode::RandomLeastBiased, RemovalMode::PureRandom})
    for (auto factor : {SharedFactor::Static, SharedFactor::Dynamic}) modes.emplace_back(mode, factor);
  const Rng plan_root = root(cfg).derive("ablate");
  CsvTable table(schemas::kRemoval);
  json plans = json::array();
  for (double percent : cfg.ablate.grid) {
    for (const auto& [mode, factor] : modes) {
      const std::uint64_t seed = plan_root.derive(interventions::to_string(mode))
                                     .derive(factor_name(factor))
                                     .derive(static_cast<std::uint64_t>(std::llround(percent * 1000)))
                                     .next_u64();
      RemovalRow row{interventions::plan_removal(out.layer, mode, factor, scores, percent, seed), 0.0};
      row.value = evaluate(interventions::remove_units(t.net, row.plan), s.test);
      table.add({out.layer, std::string(interventions::to_string(mode)), factor_name(factor), cell(percent),
                 cell(row.plan.channels.size()), out.metric, cell(row.value)});
      json p = row.plan.to_json();
      p["value"] = row.value;
      plans.push_back(std::move(p));
      out.rows.push_back(std::move(row));
    }
  }
  table.write(dir / "removal.csv", hash, cfg.seed);
  json body{{"layer", out.layer},
            {"epoch", t.epoch},
            {"metric", out.metric},
            {"baseline", out.baseline},
            {"dominant_factor", factor_name(out.dominant)},
            {"s_static", out.bias.score.at(SharedFactor::Static)},
            {"s_dynamic", out.bias.score.at(SharedFactor::Dynamic)},
            {"plans", plans}};
  write_json_report(dir / "removal.json", "removal/v1", std::move(body), hash, cfg.seed);
  return out;
}

ShuffleRun run_shuffle(const ExperimentConfig& cfg) {
  write_config(cfg);
  const fs::path dir = cfg.output / "shuffle";
  fs::create_directories(dir);
  const std::string hash = cfg.hash();
  const Splits s = load_splits(cfg);
  const auto train_shuf = shuffled(cfg, s.train, "train");
  const auto test_shuf = shuffled(cfg, s.test, "test");
  const auto init = initial_network(cfg);

  const auto fit = [&](const pairgen::Dataset& data) {
    auto dropout = make_dropout(cfg.train.dropout, cfg.model);
    return zoo::train(init, data, cfg.train.config, train_seed(cfg), dropout.get(), hash).checkpoints.back().network();
  };
  const auto normal_net = fit(s.train);
  const auto shuf_net = fit(train_shuf);

  ShuffleRun out;
  out.chance = cfg.model.head == zoo::Head::Classifier ? 1.0 / cfg.model.num_classes : 0.0;
  out.normal = evaluate(normal_net, s.test);
  out.normal_on_shuffled = evaluate(normal_net, test_shuf);
  out.shuffled = evaluate(shuf_net, test_shuf);
  out.shuffled_on_normal = evaluate(shuf_net, s.test);

  const std::string mode(pairgen::to_string(cfg.dataset.task_mode));
  CsvTable table(schemas::kShuffle);
  table.add({mode, "ordered", "ordered", cell(out.normal), cell(out.chance)});
  table.add({mode, "ordered", "shuffled", cell(out.normal_on_shuffled), cell(out.chance)});
  table.add({mode, "shuffled", "shuffled", cell(out.shuffled), cell(out.chance)});
  table.add({mode, "shuffled", "ordered", cell(out.shuffled_on_normal), cell(out.chance)});
  table.write(dir / "shuffle.csv", hash, cfg.seed);
  json body{{"task_mode", mode},
            {"metric", metric_name(cfg.model)},
            {"chance", out.chance},
            {"ordered", out.normal},
            {"shuffled", out.shuffled},
            {"ordered_model_on_shuffled", out.normal_on_shuffled},
            {"shuffled_model_on_ordered", out.shuffled_on_normal},
            {"drop", out.drop()}};
  write_json_report(dir / "shuffle.json", "shuffle/v1", std::move(body), hash, cfg.seed);
  return out;
}

const DoseRow& DoseRun::row(const std::string& condition, double rate) const {
  for (const auto& r : rows) {
    if (r.condition == condition && r.rate == rate) return r;
  }
  throw std::invalid_argument("no dose-response row " + condition);
}

DoseRun run_dose_response(const ExperimentConfig& cfg) {
  write_config(cfg);
  const fs::path dir = cfg.output / "dose";
  fs::create_directories(dir);
  const std::string hash = cfg.hash();
  const Splits s = load_splits(cfg);
  const auto test_shuf = shuffled(cfg, s.test, "test");
  const auto init = initial_network(cfg);

  DoseRun out;
  out.layer = cfg.dose.layer.empty() ? cfg.model.final_layer() : cfg.dose.layer;
  std::vector<std::pair<DropoutKind, double>> conditions = {{DropoutKind::None, 0.0}};
  if (cfg.dose.standard_rate > 0) conditions.emplace_back(DropoutKind::Standard, cfg.dose.standard_rate);
  for (double r : cfg.dose.rates) conditions.emplace_back(DropoutKind::Static, r);

  CsvTable table(schemas::kDoseResponse);
  json rows = json::array();
  for (const auto& [kind, rate] : conditions) {
    DropoutSection section{kind, rate, out.layer, cfg.train.dropout.period};
    auto dropout = make_dropout(section, cfg.model);
    auto ck = zoo::train(init, s.train, cfg.train.config, train_seed(cfg), dropout.get(), hash).checkpoints.back();
    if (cfg.dose.finetune_epochs > 0) {
      zoo::TrainConfig ft = cfg.train.config;
      ft.epochs = cfg.dose.finetune_epochs;
      ft.lr = cfg.dose.finetune_lr;
      ft.checkpoint_every = 0;
      ck = interventions::finetune_no_dropout(ck, s.train, ft, root(cfg).derive("finetune").next_u64(), hash)
               .checkpoints.back();
    }
    const auto net = ck.network();
    DoseRow row;
    row.condition = std::string(to_string(kind));
    row.rate = rate;
    row.top1 = evaluate(net, s.test);
    row.shuffled_top1 = evaluate(net, test_shuf);
    row.relative_shuffled = row.top1 > 0 ? row.shuffled_top1 / row.top1 : 0.0;
    row.counts = classify_layer(cfg, net, s.test, out.layer, &row.bias).counts;
    row.dynamic_ratio = probe::dynamic_unit_ratio(row.counts);
    row.dropout = dropout ? dropout->describe() : json(nullptr);
    table.add({row.condition, cell(rate), cell(row.top1), cell(row.shuffled_top1), cell(row.relative_shuffled),
               cell(row.bias.score.at(SharedFactor::Static)), cell(row.bias.score.at(SharedFactor::Dynamic)),
               cell(row.counts.static_units), cell(row.counts.dynamic_units), cell(row.counts.joint),
               cell(row.counts.residual), cell(row.dynamic_ratio)});
    rows.push_back({{"condition", row.condition},
                    {"rate", rate},
                    {"top1", row.top1},
                    {"shuffled_top1", row.shuffled_top1},
                    {"relative_shuffled", row.relative_shuffled},
                    {"s_static", row.bias.score.at(SharedFactor::Static)},
                    {"s_dynamic", row.bias.score.at(SharedFactor::Dynamic)},
                    {"units",
                     {{"static", row.counts.static_units},
                      {"dynamic", row.counts.dynamic_units},
                      {"joint", row.counts.joint},
                      {"residual", row.counts.residual}}},
                    {"dynamic_ratio", row.dynamic_ratio},
                    {"dropout", row.dropout}});
    out.rows.push_back(std::move(row));
  }
  table.write(dir / "dose_response.csv", hash, cfg.seed);
  write_json_report(dir / "dose_response.json", "dose_response/v1",
                    {{"layer", out.layer}, {"metric", metric_name(cfg.model)}, {"rows", rows}}, hash, cfg.seed);
  return out;
}

ReportRun run_report(const ExperimentConfig& cfg) {
  write_config(cfg);
  const std::string hash = cfg.hash();
  const fs::path dir = cfg.output / "report";
  fs::create_directories(dir);

  if (cfg.dataset.task_mode == pairgen::TaskMode::Camouflage) {
    const Splits s = load_splits(cfg);
    const auto H = cfg.dataset.spec.height, W = cfg.dataset.spec.width;
    std::vector<Tensor<float>> masks;
    for (const auto& item : s.test.items) {
      const auto begin = item.mask.data().begin() + static_cast<std::ptrdiff_t>(cfg.model.key_frame * H * W);
      masks.emplace_back(Shape{H, W}, std::vector<float>(begin, begin + static_cast<std::ptrdiff_t>(H * W)));
    }
    const auto grid = probe::center_bias(masks);
    CsvTable table(schemas::kCenterBias);
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) table.add({cell(y), cell(x), cell(grid[y * W + x])});
    table.write(dir / "center_bias.csv", hash, cfg.seed);
  }

  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(cfg.output)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if (ext != ".csv" && ext != ".json") continue;
    if (e.path() == dir / "index.json") continue;
    files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  ReportRun out;
  json index = json::array();
  for (const auto& f : files) {
    std::string file_hash, schema;
    if (f.extension() == ".csv") {
      const auto h = read_csv_header(f);
      file_hash = h.config_hash;
      schema = h.schema;
    } else {
      const json j = read_json(f);
      file_hash = header_hash(j, f);
      schema = j.contains("header") ? j["header"].at("schema").get<std::string>()
               : f.filename() == "trace.json" ? "trace/v1"
                                              : "dataset/v1";
    }
    const auto rel = fs::relative(f, cfg.output).generic_string();
    if (file_hash != hash) {
      throw ConfigError("output", rel + " has config hash " + file_hash + ", this config has " + hash);
    }
    out.files.emplace_back(rel, schema);
    index.push_back({{"file", rel}, {"schema", schema}});
  }
  write_json_report(dir / "index.json", "report_index/v1", {{"files", index}}, hash, cfg.seed);
  return out;
}

}  // namespace stadyn::experiments
