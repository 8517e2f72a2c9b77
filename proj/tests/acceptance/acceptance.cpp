// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset. Exit status is 1 when any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "stadyn/experiments/runner.hpp"
#include "stadyn/interventions/removal.hpp"
#include "stadyn/io/binary.hpp"
#include "stadyn/modelzoo/checkpoint.hpp"
#include "stadyn/modelzoo/fusion.hpp"
#include "stadyn/pairgen/dataset_io.hpp"
#include "stadyn/probe/metrics.hpp"
#include "stadyn/probe/planted.hpp"
#include "stadyn/probe/trace.hpp"
#include "test_helpers.hpp"

using namespace stadyn;
using nlohmann::json;
using pairgen::SharedFactor;
namespace fs = std::filesystem;
namespace ex = stadyn::experiments;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path work_dir(const std::string& name) { return testing::scratch_dir("acceptance_" + name); }

void note(const std::string& line) {
  std::printf("    %s\n", line.c_str());
  std::fflush(stdout);
}

ex::ExperimentConfig config(json doc, const fs::path& out) {
  doc["output"] = out.string();
  return ex::resolve_config(doc);
}

// ---------------------------------------------------------------------------

zoo::ArchitectureDescriptor probe_model(zoo::ModelKind kind, zoo::Head head, zoo::Fusion fusion,
                                        zoo::CrossConnection cross, const pairgen::VideoSpec& spec) {
  zoo::ArchitectureDescriptor d;
  d.kind = kind;
  d.head = head;
  d.fusion = fusion;
  d.cross_connection = cross;
  d.widths = {8, 16};
  d.frames = spec.frames;
  d.height = spec.height;
  d.width = spec.width;
  d.num_classes = pairgen::num_classes(pairgen::TaskMode::Mixed, spec);
  return d;
}

Outcome identity_ceiling() {
  pairgen::VideoSpec spec;
  spec.frames = 8;
  spec.height = spec.width = 16;
  const auto data = pairgen::generate_dataset(pairgen::TaskMode::Mixed, 64, spec, Rng(11));
  const auto camo = pairgen::generate_dataset(pairgen::TaskMode::Camouflage, 64, spec, Rng(12));

  using zoo::CrossConnection, zoo::Fusion, zoo::Head, zoo::ModelKind;
  std::vector<std::pair<std::string, zoo::Network<float>>> models;
  models.emplace_back("single-stream init",
                      zoo::Network<float>(probe_model(ModelKind::SingleStream3D, Head::Classifier, Fusion::Gated,
                                                      CrossConnection::None, spec),
                                          1));
  models.emplace_back("two-stream gated m2a init",
                      zoo::Network<float>(probe_model(ModelKind::TwoStream, Head::Classifier, Fusion::Gated,
                                                      CrossConnection::MotionToAppearance, spec),
                                          2));
  models.emplace_back("two-stream ccg bidirectional segmenter init",
                      zoo::Network<float>(probe_model(ModelKind::TwoStream, Head::Segmenter,
                                                      Fusion::ConvexCombinationGated, CrossConnection::Bidirectional,
                                                      spec),
                                          3));
  zoo::TrainConfig tc;
  tc.epochs = 3;
  tc.lr = 0.05;
  tc.batch = 16;
  models.emplace_back("single-stream trained", zoo::train(models[0].second, data, tc, 4).checkpoints.back().network());
  models.emplace_back("two-stream segmenter trained",
                      zoo::train(models[2].second, camo, tc, 5).checkpoints.back().network());

  double worst = 0.0;
  std::size_t layers = 0;
  for (const auto& [name, net] : models) {
    const auto& source = net.descriptor().head == Head::Segmenter ? camo : data;
    std::map<SharedFactor, probe::ActivationTrace> traces;
    for (auto f : {SharedFactor::Static, SharedFactor::Dynamic, SharedFactor::Identical}) {
      const auto pairs = pairgen::make_pairs(source, f, pairgen::PairMode::FrameShuffle, 64,
                                             Rng(21).derive(std::string(pairgen::to_string(f))));
      traces[f] = probe::collect_trace(probe::NetworkTarget(net), pairs);
    }
    for (const auto& layer : net.descriptor().probe_layers()) {
      const double s = probe::layer_bias(traces, layer).score.at(SharedFactor::Identical);
      worst = std::max(worst, std::abs(s - 1.0));
      ++layers;
    }
  }
  return {worst <= 1e-6, fmt("%zu models, %zu layers, max |S_identical - 1| = %.3g", models.size(), layers, worst)};
}

// ---------------------------------------------------------------------------

Outcome planted_recovery() {
  int good_seeds = 0, worst = 16;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Rng root(seed);
    const auto data =
        pairgen::generate_dataset(pairgen::TaskMode::Mixed, 200, pairgen::VideoSpec{}, root.derive("data"));
    probe::PlantedNetwork net;
    std::map<SharedFactor, probe::ActivationTrace> traces;
    for (auto f : {SharedFactor::Static, SharedFactor::Dynamic}) {
      const auto pairs = pairgen::make_pairs(data, f, pairgen::PairMode::FrameShuffle, 200,
                                             root.derive(std::string(pairgen::to_string(f))));
      traces[f] = probe::collect_trace(net, pairs);
    }
    const auto scores = probe::unit_scores(traces, probe::PlantedNetwork::kLayer);
    const auto cls = probe::classify_units(scores, 0.5);
    int correct = 0;
    for (std::size_t c = 0; c < probe::PlantedNetwork::kChannels; ++c)
      correct += cls.classes[c] == probe::PlantedNetwork::planted_class(c);
    good_seeds += correct >= 15;
    worst = std::min(worst, correct);
  }
  return {good_seeds >= 18, fmt("%d/20 seeds with >= 15/16 correct (worst seed %d/16)", good_seeds, worst)};
}

// ---------------------------------------------------------------------------

Outcome metric_math() {
  double err = 0.0;
  const double e = std::exp(1.0);
  const std::vector<double> s{0.0, 0.0, 1.0};
  const auto n = probe::unit_counts(s, 100);
  err = std::max({std::abs(n[0] - 100 / (2 + e)), std::abs(n[1] - 100 / (2 + e)), std::abs(n[2] - 100 * e / (2 + e))});
  const bool example = std::abs(n[0] - 21.19) < 5e-3 && std::abs(n[2] - 57.61) < 5e-3;

  Rng rng(31);
  // softmax against a direct evaluation, and layer_bias on traces with planted correlations
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.next_u64() % 2, N = 1 + rng.next_u64() % 512;
    std::vector<double> sc(k);
    for (auto& x : sc) x = rng.uniform(-1.0, 1.0);
    const auto got = probe::unit_counts(sc, N);
    double z = 0.0;
    for (double x : sc) z += std::exp(x);
    for (std::size_t i = 0; i < k; ++i) err = std::max(err, std::abs(got[i] - N * std::exp(sc[i]) / z));
  }
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t pairs = 32, channels = 1 + rng.next_u64() % 12;
    std::map<SharedFactor, probe::ActivationTrace> traces;
    for (auto f : {SharedFactor::Static, SharedFactor::Dynamic, SharedFactor::Identical}) {
      probe::LayerTrace l{"x", pairs, channels, {}, {}};
      for (std::size_t i = 0; i < pairs * channels; ++i) {
        const float a = static_cast<float>(rng.normal());
        l.z1.push_back(a);
        l.z2.push_back(f == SharedFactor::Identical ? a : static_cast<float>(rng.normal()));
      }
      traces[f] = probe::ActivationTrace{f, {l}};
    }
    const auto b = probe::layer_bias(traces, "x");
    const std::vector<double> sc{b.score.at(SharedFactor::Static), b.score.at(SharedFactor::Dynamic),
                                 b.score.at(SharedFactor::Identical)};
    double z = 0.0;
    for (double x : sc) z += std::exp(x);
    const SharedFactor order[] = {SharedFactor::Static, SharedFactor::Dynamic, SharedFactor::Identical};
    for (std::size_t i = 0; i < 3; ++i)
      err = std::max(err, std::abs(b.units.at(order[i]) - channels * std::exp(sc[i]) / z));
  }

  int partition_failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t N = 1 + rng.next_u64() % 256;
    std::vector<probe::UnitScore> scores(N);
    for (auto& u : scores) {
      // some scores sit exactly on the threshold
      u.static_score = rng.uniform() < 0.05 ? 0.5 : rng.uniform(-1.0, 1.0);
      u.dynamic_score = rng.uniform() < 0.05 ? 0.5 : rng.uniform(-1.0, 1.0);
    }
    const auto cls = probe::classify_units(scores, 0.5);
    std::size_t counted[4] = {};
    for (auto c : cls.classes) ++counted[static_cast<int>(c)];
    const bool ok = cls.classes.size() == N && cls.counts.total() == N &&
                    counted[static_cast<int>(probe::UnitClass::Static)] == cls.counts.static_units &&
                    counted[static_cast<int>(probe::UnitClass::Dynamic)] == cls.counts.dynamic_units &&
                    counted[static_cast<int>(probe::UnitClass::Joint)] == cls.counts.joint &&
                    counted[static_cast<int>(probe::UnitClass::Residual)] == cls.counts.residual;
    partition_failures += !ok;
  }
  return {err <= 1e-9 && example && partition_failures == 0,
          fmt("S=(0,0,1) N=100 -> %.2f/%.2f/%.2f, max softmax error %.3g, %d/1000 partitions wrong", n[0], n[1], n[2],
              err, partition_failures)};
}

// ---------------------------------------------------------------------------

Outcome shuffle_direction() {
  bool pass = true;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto dyn = ex::run_shuffle(config({{"seed", seed}, {"dataset", {{"task_mode", "DynamicOnly"}}}},
                                            work_dir(fmt("shuffle_dyn_%llu", (unsigned long long)seed))));
    const auto sta = ex::run_shuffle(config({{"seed", seed}, {"dataset", {{"task_mode", "StaticOnly"}}}},
                                            work_dir(fmt("shuffle_sta_%llu", (unsigned long long)seed))));
    const bool ok = std::abs(dyn.shuffled - dyn.chance) <= 0.10 && sta.drop() <= 0.02;
    pass = pass && ok;
    note(fmt("seed %llu: DynamicOnly %.3f -> shuffled %.3f (chance %.3f); StaticOnly %.3f -> %.3f (drop %+.3f) %s",
             (unsigned long long)seed, dyn.normal, dyn.shuffled, dyn.chance, sta.normal, sta.shuffled, sta.drop(),
             ok ? "ok" : "miss"));
  }
  return {pass, "every seed: DynamicOnly within 0.10 of chance, StaticOnly drop <= 0.02"};
}

// ---------------------------------------------------------------------------

Outcome removal_asymmetry() {
  using interventions::RemovalMode;
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto cfg = config({{"seed", seed}, {"ablate", {{"grid", {40}}}}},
                            work_dir(fmt("removal_%llu", (unsigned long long)seed)));
    ex::run_train(cfg);
    const auto r = ex::run_ablate(cfg);
    const double top = r.value(RemovalMode::TopBiased, SharedFactor::Dynamic, 40);
    const double rlb = r.value(RemovalMode::RandomLeastBiased, SharedFactor::Dynamic, 40);
    wins += top < rlb;
    note(fmt("seed %llu: baseline %.3f, top-dynamic 40%% %.3f, least-biased 40%% %.3f %s", (unsigned long long)seed,
             r.baseline, top, rlb, top < rlb ? "ok" : "miss"));
  }
  return {wins >= 4, fmt("top-dynamic removal hurts more in %d/5 seeds", wins)};
}

// ---------------------------------------------------------------------------

Outcome dose_response() {
  bool pass = true;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto r = ex::run_dose_response(config(
        {{"seed", seed},
         {"train", {{"epochs", 60}}},
         {"dose", {{"rates", {0.5}}, {"standard_rate", 0.0}, {"finetune_epochs", 3}, {"finetune_lr", 0.001}}}},
        work_dir(fmt("dose_%llu", (unsigned long long)seed))));
    const auto& none = r.row("none", 0.0);
    const auto& st = r.row("static", 0.5);
    const bool ok = st.dynamic_ratio > none.dynamic_ratio && st.relative_shuffled < none.relative_shuffled;
    pass = pass && ok;
    note(fmt("seed %llu: dynamic ratio %.3f -> %.3f (units s/d %zu/%zu -> %zu/%zu, S_static %.3f -> %.3f, "
             "S_dynamic %.3f -> %.3f), shuffled/ordered %.3f -> %.3f (top1 %.3f -> %.3f) %s",
             (unsigned long long)seed, none.dynamic_ratio, st.dynamic_ratio, none.counts.static_units,
             none.counts.dynamic_units, st.counts.static_units, st.counts.dynamic_units,
             none.bias.score.at(SharedFactor::Static), st.bias.score.at(SharedFactor::Static),
             none.bias.score.at(SharedFactor::Dynamic), st.bias.score.at(SharedFactor::Dynamic),
             none.relative_shuffled, st.relative_shuffled, none.top1, st.top1, ok ? "ok" : "miss"));
  }
  return {pass, "every seed: higher dynamic ratio and lower shuffled relative performance at r = 0.5"};
}

// ---------------------------------------------------------------------------

pairgen::LabeledVideo random_item(const zoo::ArchitectureDescriptor& d, Rng& rng, int label) {
  pairgen::LabeledVideo item;
  item.video.frames = testing::random_tensor<float>({d.frames, d.height, d.width, 3}, rng, 0.0, 1.0);
  item.video.flow = testing::random_tensor<float>({d.frames, d.height, d.width, 2}, rng, -2.0, 2.0);
  item.label = label;
  item.mask = Tensor<float>({d.frames, d.height, d.width});
  for (std::size_t i = 0; i < item.mask.size(); ++i) item.mask[i] = rng.uniform() < 0.4 ? 1.0f : 0.0f;
  return item;
}

Outcome fusion_convexity() {
  using zoo::CrossConnection, zoo::Fusion, zoo::Head, zoo::ModelKind;
  Rng rng(41);
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t c = 1 + rng.next_u64() % 6;
    zoo::ParameterSet<double> p;
    zoo::add_fusion_parameters(p, "f", Fusion::ConvexCombinationGated, c, 1 + c / 2, rng);
    for (auto& e : p.entries())
      for (std::size_t i = 0; i < e.value.size(); ++i) e.value[i] = rng.uniform(-2.0, 2.0);
    const Shape shape{1 + rng.next_u64() % 3, 1 + rng.next_u64() % 5, 1 + rng.next_u64() % 5, c};
    const auto ua = testing::random_tensor<double>(shape, rng, -3.0, 3.0);
    const auto um = testing::random_tensor<double>(shape, rng, -3.0, 3.0);
    const auto ch = zoo::ccg_channel_attention(ua, um, p, "f");
    for (std::size_t k = 0; k < c; ++k) violations += ch.cache.gate[k] + ch.motion_weight[k] != 1.0;
    const auto sp = zoo::ccg_spatial_attention(ch.za, ch.zm, p, "f");
    for (std::size_t i = 0; i < sp.gate.size(); ++i) violations += sp.gate[i] + sp.complement[i] != 1.0;
  }

  int variants = 0, failing = 0;
  double worst = 0.0;
  for (auto cross : {CrossConnection::None, CrossConnection::MotionToAppearance, CrossConnection::Bidirectional})
    for (auto fusion : {Fusion::Gated, Fusion::ConvexCombinationGated})
      for (auto head : {Head::Classifier, Head::Segmenter}) {
        zoo::ArchitectureDescriptor d;
        d.kind = ModelKind::TwoStream;
        d.cross_connection = cross;
        d.fusion = fusion;
        d.head = head;
        d.widths = {3, 4};
        d.num_classes = 3;
        d.frames = 3;
        d.height = d.width = 4;
        d.key_frame = 1;
        zoo::Network<double> net(d, 50 + variants);
        Rng jitter(60 + variants);
        for (auto& e : net.parameters().entries())
          for (std::size_t i = 0; i < e.value.size(); ++i) e.value[i] += jitter.uniform(-0.3, 0.3);
        Rng data_rng(70 + variants);
        const auto x = random_item(d, data_rng, 2), y = random_item(d, data_rng, 0);
        const auto res = testing::finite_difference_check(net, {&x, &y});
        worst = std::max(worst, res.max_rel_error);
        failing += !(res.max_rel_error < 1e-4);
        ++variants;
      }
  return {violations == 0 && failing == 0,
          fmt("%d convexity violations over 100 inputs; %d/%d variants pass gradient check (worst rel err %.2g)",
              violations, variants - failing, variants, worst)};
}

// ---------------------------------------------------------------------------

json camouflage_doc(std::uint64_t seed, const char* fusion, const char* cross) {
  return {{"seed", seed},
          {"dataset", {{"task_mode", "Camouflage"}, {"train", 800}, {"test", 200}}},
          {"model", {{"kind", "TwoStream"}, {"head", "Segmenter"}, {"fusion", fusion}, {"cross_connection", cross}}},
          {"train", {{"epochs", 40}, {"lr", 0.05}}}};
}

Outcome camouflage_fusion() {
  bool pass = true;
  for (std::uint64_t seed : {1, 2, 3}) {
    std::map<std::string, double> miou;
    for (auto [fusion, cross] : {std::pair{"Gated", "MotionToAppearance"}, std::pair{"ConvexCombinationGated",
                                                                                     "MotionToAppearance"},
                                 std::pair{"Gated", "None"}, std::pair{"ConvexCombinationGated", "None"}}) {
      const std::string key = std::string(fusion) + "+" + cross;
      miou[key] = ex::run_train(config(camouflage_doc(seed, fusion, cross),
                                       work_dir(fmt("camo_%llu_%s_%s", (unsigned long long)seed, fusion, cross))))
                      .test_metric;
    }
    const double g = miou["Gated+MotionToAppearance"], c = miou["ConvexCombinationGated+MotionToAppearance"];
    const double none = miou["Gated+None"];
    const bool ok = g >= c - 0.02 && g > none && c > none;
    pass = pass && ok;
    note(fmt("seed %llu: G+U %.4f, CCG+U %.4f, G no-cross %.4f (CCG no-cross %.4f, not scored) %s",
             (unsigned long long)seed, g, c, none, miou["ConvexCombinationGated+None"], ok ? "ok" : "miss"));
  }
  return {pass, "every seed: G+U >= CCG+U - 0.02 and both above the no-cross variant"};
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = io::read_text(e.path());
  return out;
}

json tiny_doc(bool camouflage) {
  json doc{{"dataset", {{"train", 32}, {"test", 16}, {"frames", 4}, {"height", 8}, {"width", 8}}},
           {"model", {{"widths", {4, 6}}}},
           {"train", {{"epochs", 2}, {"batch", 8}, {"checkpoint_every", 1}}},
           {"probe", {{"pairs", 16}, {"epoch_series", true}}},
           {"ablate", {{"grid", {0, 25, 50}}}},
           {"dose", {{"rates", {0.5}}, {"standard_rate", 0.5}, {"finetune_epochs", 1}}}};
  if (camouflage) {
    doc["dataset"]["task_mode"] = "Camouflage";
    doc["model"]["kind"] = "TwoStream";
    doc["model"]["head"] = "Segmenter";
    doc["model"]["cross_connection"] = "Bidirectional";
  }
  return doc;
}

void run_all_commands(const ex::ExperimentConfig& cfg) {
  ex::run_gen(cfg);
  ex::run_train(cfg);
  ex::run_probe(cfg);
  ex::run_ablate(cfg);
  ex::run_shuffle(cfg);
  ex::run_dose_response(cfg);
  ex::run_report(cfg);
}

Outcome determinism_and_formats() {
  std::vector<std::string> problems;
  std::size_t files = 0;
  for (bool camouflage : {false, true}) {
    const auto dir = work_dir(camouflage ? "rerun_camo" : "rerun");
    const auto cfg = config(tiny_doc(camouflage), dir);
    run_all_commands(cfg);
    const auto first = snapshot(dir);
    fs::remove_all(dir);
    run_all_commands(cfg);
    const auto second = snapshot(dir);
    files += first.size();
    if (first != second) problems.push_back(std::string("rerun differs") + (camouflage ? " (camouflage)" : ""));

    // round trips of the artifacts just written
    const auto train = pairgen::import_dataset(dir / "dataset" / "train");
    const auto copy = work_dir("roundtrip_dataset");
    pairgen::export_dataset(train, copy, cfg.hash());
    if (snapshot(copy) != snapshot(dir / "dataset" / "train")) problems.push_back("dataset re-export differs");

    const auto trace = probe::read_trace(dir / "probe" / "traces" / "dynamic");
    const auto tcopy = work_dir("roundtrip_trace");
    probe::write_trace(trace, tcopy, cfg.hash());
    if (snapshot(tcopy) != snapshot(dir / "probe" / "traces" / "dynamic") || !(probe::read_trace(tcopy) == trace))
      problems.push_back("trace round trip differs");

    const auto ck_path = dir / "train" / "epoch_0002.ckpt";
    const auto bytes = io::read_bytes(ck_path);
    if (zoo::encode_checkpoint(zoo::load_checkpoint(ck_path)) != bytes) problems.push_back("checkpoint re-encode differs");
  }

  // hand-authored bytes
  const auto gd = work_dir("golden_dataset");
  std::vector<std::uint8_t> video(48 * 4, 0), flow(32 * 4, 0);
  video[3] = 0x3F;  // red of pixel 0 = 0.5f
  video[6] = 0x80;
  video[7] = 0x3F;  // green of pixel 0 = 1.0f
  io::write_bytes(gd / "0.f32", video);
  io::write_bytes(gd / "0.flow.f32", flow);
  io::write_text(gd / "manifest.json", R"({"version": 1, "count": 1, "T": 1, "H": 4, "W": 4, "C": 3,
    "task_mode": "StaticOnly", "palettes": 4, "textures": 4, "shapes": 4, "styles": 4, "labels": [2],
    "factors": [{"palette": 2, "texture": 0, "shape": 1, "direction": 5, "speed": 1, "flicker_period": 0}],
    "files": [{"video": "0.f32", "flow": "0.flow.f32"}]})");
  const auto d = pairgen::import_dataset(gd);
  bool dataset_ok = d.size() == 1 && d.items[0].label == 2 && d.items[0].video.frames[0] == 0.5f &&
                    d.items[0].video.frames[1] == 1.0f;
  for (std::size_t i = 2; dataset_ok && i < d.items[0].video.frames.size(); ++i)
    dataset_ok = d.items[0].video.frames[i] == 0.0f;
  if (!dataset_ok) problems.push_back("golden dataset");

  const auto gt = work_dir("golden_trace");
  io::write_text(gt / "trace.json", R"({"version": 1, "factor": "dynamic", "layers": [
    {"name": "x", "channels": 2, "pairs": 2, "files": ["x.z1.f32", "x.z2.f32"]}]})");
  io::write_bytes(gt / "x.z1.f32", std::vector<std::uint8_t>{0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x00, 0x40, 0x00,
                                                             0x00, 0x00, 0xBF, 0x00, 0x00, 0x80, 0x3E});
  io::write_bytes(gt / "x.z2.f32", std::vector<std::uint8_t>{0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xC0, 0x00,
                                                             0x00, 0x40, 0x40, 0x00, 0x00, 0x00, 0x3F});
  const auto t = probe::read_trace(gt);
  if (!(t.factor == SharedFactor::Dynamic && t.layers.size() == 1 &&
        t.layers[0].z1 == std::vector<float>{1.0f, 2.0f, -0.5f, 0.25f} &&
        t.layers[0].z2 == std::vector<float>{0.0f, -2.0f, 3.0f, 0.5f}))
    problems.push_back("golden trace");

  zoo::ArchitectureDescriptor desc;
  desc.widths = {2, 3};
  desc.frames = 2;
  desc.height = desc.width = 4;
  desc.num_classes = 2;
  const zoo::Network<float> shape_only(desc, 1);
  json params = json::array();
  for (const auto& e : shape_only.parameters().entries()) params.push_back({{"name", e.name}, {"shape", e.value.shape()}});
  const std::string manifest = json{{"version", 1},
                                    {"descriptor", zoo::to_json(desc)},
                                    {"epoch", 3},
                                    {"seeds", {{"seed", 9}, {"rng_key", 8}, {"rng_counter", 7}}},
                                    {"config_hash", "feed"},
                                    {"parameters", params},
                                    {"removed", {{"block2", {1}}}}}
                                   .dump();
  std::vector<std::uint8_t> ck{'S', 'D', 'C', 'K', '0', '0', '0', '1'};
  for (int i = 0; i < 8; ++i) ck.push_back(static_cast<std::uint8_t>(std::uint64_t{manifest.size()} >> (8 * i)));
  ck.insert(ck.end(), manifest.begin(), manifest.end());
  const std::size_t n = shape_only.parameters().total_values();
  for (std::size_t i = 0; i < n; ++i) ck.insert(ck.end(), {0x00, 0x00, 0x00, 0x3F});  // 0.5f
  for (std::size_t i = 0; i < n; ++i) ck.insert(ck.end(), {0x00, 0x00, 0x80, 0xBF});  // -1.0f
  const auto back = zoo::decode_checkpoint(ck, "golden");
  bool ck_ok = back.epoch == 3 && back.seed == 9 && back.rng.key == 8 && back.rng.counter == 7 &&
               back.config_hash == "feed" && back.removed.at("block2") == std::vector<std::size_t>{1};
  for (const auto& e : back.params.entries())
    for (std::size_t i = 0; i < e.value.size(); ++i) ck_ok = ck_ok && e.value[i] == 0.5f;
  for (const auto& e : back.velocity.entries())
    for (std::size_t i = 0; i < e.value.size(); ++i) ck_ok = ck_ok && e.value[i] == -1.0f;
  if (!ck_ok || zoo::encode_checkpoint(back) != ck) problems.push_back("golden checkpoint");

  std::string detail = fmt("%zu files compared across reruns, round trips and 3 golden files", files);
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "identity ceiling", 10, identity_ceiling},
      {2, "planted unit recovery", 60, planted_recovery},
      {3, "metric math", 5, metric_math},
      {4, "shuffle direction", 600, shuffle_direction},
      {5, "removal asymmetry", 600, removal_asymmetry},
      {6, "static dropout dose response", 900, dose_response},
      {7, "fusion convexity and gradients", 300, fusion_convexity},
      {8, "camouflage fusion direction", 900, camouflage_fusion},
      {9, "determinism and formats", 60, determinism_and_formats},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    std::printf("[%d] %s\n", c.id, c.name);
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s %d %s: %s (%.1fs, limit %.0fs%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                c.budget_s, in_time ? "" : ", over time");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
