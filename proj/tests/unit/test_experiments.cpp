#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <string>

#include "stadyn/errors.hpp"
#include "stadyn/experiments/config.hpp"
#include "stadyn/experiments/runner.hpp"
#include "stadyn/experiments/tables.hpp"
#include "stadyn/io/binary.hpp"
#include "test_helpers.hpp"

using namespace stadyn;
using namespace stadyn::experiments;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string config_error_path(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

json tiny_doc(const fs::path& out) {
  return {{"output", out.string()},
          {"dataset", {{"train", 24}, {"test", 12}, {"frames", 4}, {"height", 8}, {"width", 8}}},
          {"model", {{"widths", {4, 6}}}},
          {"train", {{"epochs", 2}, {"batch", 8}, {"checkpoint_every", 1}}},
          {"probe", {{"pairs", 12}}},
          {"ablate", {{"grid", {0, 50}}}},
          {"dose", {{"rates", {0.5}}, {"standard_rate", 0.0}}}};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = io::read_text(e.path());
  }
  return out;
}

}  // namespace

TEST_CASE("default config resolves") {
  const auto cfg = resolve_config(json::object());
  CHECK(cfg.seed == 1);
  CHECK(cfg.dataset.task_mode == pairgen::TaskMode::DynamicOnly);
  CHECK(cfg.model.kind == zoo::ModelKind::SingleStream3D);
  CHECK(cfg.model.num_classes == 8);
  CHECK(cfg.model.frames == cfg.dataset.spec.frames);
  CHECK(cfg.train.dropout.kind == DropoutKind::None);
  CHECK(cfg.probe.lambda == 0.5);
  CHECK(cfg.hash().size() == 16);
}

TEST_CASE("unknown keys and wrong types name their path") {
  CHECK(config_error_path([] { resolve_config({{"trian", {{"lr", 1}}}}); }) == "trian");
  CHECK(config_error_path([] { resolve_config({{"train", {{"lrr", 1}}}}); }) == "train.lrr");
  CHECK(config_error_path([] { resolve_config({{"train", {{"dropout", {{"rat", 0.1}}}}}}); }) ==
        "train.dropout.rat");
  CHECK(config_error_path([] { resolve_config({{"train", {{"lr", "fast"}}}}); }) == "train.lr");
  CHECK(config_error_path([] { resolve_config({{"train", {{"epochs", 2.5}}}}); }) == "train.epochs");
  CHECK(config_error_path([] { resolve_config({{"train", {{"epochs", -1}}}}); }) == "train.epochs");
  CHECK(config_error_path([] { resolve_config({{"model", {{"widths", {4, "x"}}}}}); }) == "model.widths[1]");
  CHECK(config_error_path([] { resolve_config({{"probe", {{"layers", {"block9"}}}}}); }) == "probe.layers[0]");
  CHECK(config_error_path([] { resolve_config({{"dataset", {{"task_mode", "Dynamic"}}}}); }) == "dataset.task_mode");
  CHECK(config_error_path([] { resolve_config({{"probe", {{"lambda", 1.0}}}}); }) == "probe.lambda");
  CHECK(config_error_path([] { resolve_config({{"train", {{"dropout", {{"kind", "spatial"}}}}}}); }) ==
        "train.dropout.kind");
  CHECK(config_error_path([] { resolve_config({{"model", {{"head", "Segmenter"}}}}); }) == "model.head");
  CHECK(config_error_path([] { resolve_config({{"ablate", {{"grid", {10, 120}}}}}); }) == "ablate.grid[1]");
  CHECK(config_error_path([] { resolve_config({{"model", 3}}); }) == "model");
  // integers are accepted where numbers are expected
  CHECK(resolve_config({{"train", {{"lr", 1}}}}).train.config.lr == 1.0);
}

TEST_CASE("dotted overrides") {
  json doc = default_config();
  apply_override(doc, "train.lr=0.25");
  apply_override(doc, "dataset.task_mode=StaticOnly");
  apply_override(doc, "model.widths=[3,5]");
  apply_override(doc, "probe.layers=[\"block2\"]");
  apply_override(doc, "train.dropout.kind=static");
  const auto cfg = resolve_config(doc);
  CHECK(cfg.train.config.lr == 0.25);
  CHECK(cfg.dataset.task_mode == pairgen::TaskMode::StaticOnly);
  CHECK(cfg.model.widths == std::vector<std::size_t>{3, 5});
  CHECK(cfg.probe.layers == std::vector<std::string>{"block2"});
  CHECK(cfg.train.dropout.kind == DropoutKind::Static);

  CHECK(config_error_path([&] { apply_override(doc, "train.nope=1"); }) == "train.nope");
  CHECK(config_error_path([&] { apply_override(doc, "train=1"); }) == "train");
  CHECK(config_error_path([&] { apply_override(doc, "train.lr"); }) == "train.lr");
  CHECK(config_error_path([&] { apply_override(doc, "train..lr=1"); }) == "train..lr");
}

TEST_CASE("config files") {
  const auto dir = testing::scratch_dir("cfg_files");
  io::write_text(dir / "a.json", R"({"seed": 9, "train": {"lr": 0.5}})");
  const auto cfg = load_config(dir / "a.json", {"train.lr=0.05", "output=\"x\""});
  CHECK(cfg.seed == 9);
  CHECK(cfg.train.config.lr == 0.05);
  CHECK(cfg.output == "x");
  io::write_text(dir / "bad.json", R"({"seed": 9,)");
  CHECK_THROWS_AS(load_config(dir / "bad.json", {}), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "missing.json", {}), ConfigError);
}

TEST_CASE("config hash") {
  const auto a = resolve_config(json::object());
  CHECK(resolve_config(json::object()).hash() == a.hash());
  CHECK(resolve_config({{"output", "elsewhere"}}).hash() == a.hash());
  CHECK(resolve_config({{"train", {{"resume", true}}}}).hash() == a.hash());
  CHECK(resolve_config({{"train", {{"epochs", 3}}}}).hash() == a.hash());
  CHECK(resolve_config({{"seed", 2}}).hash() != a.hash());
  CHECK(resolve_config({{"train", {{"lr", 0.2}}}}).hash() != a.hash());
  CHECK(resolve_config({{"probe", {{"lambda", 0.6}}}}).hash() != a.hash());
}

TEST_CASE("csv schemas are pinned") {
  const std::map<std::string, std::string> golden = {
      {"train_loss/v1", "epoch,loss"},
      {"bias_layers/v1",
       "epoch,layer,channels,s_static,s_dynamic,s_identical,n_static,n_dynamic,n_identical,n2_static,n2_dynamic"},
      {"unit_classes/v1", "epoch,layer,channels,lambda,static,dynamic,joint,residual,dynamic_ratio"},
      {"units/v1", "epoch,layer,channel,s_static,s_dynamic,class"},
      {"epoch_series/v1", "epoch,layer,s_static,s_dynamic,static,dynamic,joint,residual,dynamic_ratio"},
      {"removal/v1", "layer,mode,factor,percent,removed,metric,value"},
      {"shuffle/v1", "task_mode,train_frames,eval_frames,accuracy,chance"},
      {"dose_response/v1",
       "condition,rate,top1,shuffled_top1,relative_shuffled,s_static,s_dynamic,static,dynamic,joint,residual,dynamic_ratio"},
      {"center_bias/v1", "y,x,value"},
  };
  CHECK(schemas::all().size() == golden.size());
  for (const auto* s : schemas::all()) {
    std::string cols;
    for (std::size_t i = 0; i < s->columns.size(); ++i) cols += (i ? "," : "") + std::string(s->columns[i]);
    REQUIRE(golden.count(s->id()) == 1);
    CHECK(golden.at(s->id()) == cols);
  }
}

TEST_CASE("csv rendering") {
  CsvTable t(schemas::kTrainLoss);
  t.add({cell(std::size_t{1}), cell(0.5)});
  t.add({cell(std::size_t{2}), cell(1.0 / 3.0)});
  t.add({cell(std::size_t{3}), cell(-0.0)});
  CHECK(t.render("00000000deadbeef", 7) ==
        "# schema=train_loss/v1 config_hash=00000000deadbeef seed=7\n"
        "epoch,loss\n"
        "1,0.5\n"
        "2,0.3333333333\n"
        "3,0\n");
  CHECK_THROWS_AS(t.add({"1"}), std::invalid_argument);
  CHECK(cell(1e-12) == "1e-12");
  CHECK(cell(std::int64_t{-3}) == "-3");

  const auto dir = testing::scratch_dir("csv_header");
  t.write(dir / "loss.csv", "00000000deadbeef", 7);
  const auto h = read_csv_header(dir / "loss.csv");
  CHECK(h.schema == "train_loss/v1");
  CHECK(h.config_hash == "00000000deadbeef");
  CHECK(h.seed == 7);
  io::write_text(dir / "plain.csv", "a,b\n1,2\n");
  CHECK_THROWS_AS(read_csv_header(dir / "plain.csv"), FormatError);
  io::write_text(dir / "partial.csv", "# schema=x/v1 seed=1\n");
  CHECK_THROWS_AS(read_csv_header(dir / "partial.csv"), FormatError);
}

TEST_CASE("commands are byte-identical on rerun") {
  const auto a = testing::scratch_dir("rerun_a");
  const auto b = testing::scratch_dir("rerun_b");
  for (const auto& dir : {a, b}) {
    const auto cfg = resolve_config(tiny_doc(dir));
    run_gen(cfg);
    run_train(cfg);
    run_probe(cfg);
    run_ablate(cfg);
    run_shuffle(cfg);
    run_dose_response(cfg);
    run_report(cfg);
  }
  const auto sa = snapshot(a), sb = snapshot(b);
  CHECK(sa.size() == sb.size());
  for (const auto& [name, text] : sa) {
    INFO(name);
    REQUIRE(sb.count(name) == 1);
    if (name == "config.json" || name == "report/index.json") continue;  // record the output path
    CHECK(text == sb.at(name));
  }
  // the same directory rerun is identical byte for byte, including paths
  const auto cfg = resolve_config(tiny_doc(a));
  run_gen(cfg);
  run_train(cfg);
  run_probe(cfg);
  run_report(cfg);
  CHECK(snapshot(a) == sa);
}

TEST_CASE("every report carries the config hash") {
  const auto dir = testing::scratch_dir("hash_headers");
  const auto cfg = resolve_config(tiny_doc(dir));
  run_gen(cfg);
  run_train(cfg);
  run_probe(cfg);
  const auto idx = run_report(cfg);
  CHECK(idx.files.size() >= 10);
  const auto run = json::parse(io::read_text(dir / "train" / "run.json"));
  CHECK(run["header"]["config_hash"] == cfg.hash());
  CHECK(run["header"]["schema"] == "train_run/v1");
  const auto manifest = json::parse(io::read_text(dir / "dataset" / "train" / "manifest.json"));
  CHECK(manifest["config_hash"] == cfg.hash());
  const auto trace = json::parse(io::read_text(dir / "probe" / "traces" / "static" / "trace.json"));
  CHECK(trace["config_hash"] == cfg.hash());
  CHECK(zoo::load_checkpoint(dir / "train" / "epoch_0002.ckpt").config_hash == cfg.hash());

  // a report from another config in the same directory is refused
  auto other = tiny_doc(dir);
  other["probe"]["lambda"] = 0.6;
  const auto cfg2 = resolve_config(other);
  CHECK(config_error_path([&] { run_report(cfg2); }) == "output");
  CHECK(config_error_path([&] { run_probe(cfg2); }) == "output");
}

TEST_CASE("resume continues a run and refuses another config") {
  const auto a = testing::scratch_dir("resume_a");
  const auto b = testing::scratch_dir("resume_b");
  auto doc = tiny_doc(a);
  doc["train"]["epochs"] = 1;
  run_train(resolve_config(doc));
  doc["train"]["epochs"] = 2;
  doc["train"]["resume"] = true;
  const auto resumed = run_train(resolve_config(doc));
  const auto direct = run_train(resolve_config(tiny_doc(b)));
  CHECK(resumed.final_checkpoint.epoch == 2);
  CHECK(io::read_bytes(a / "train" / "epoch_0002.ckpt") == io::read_bytes(b / "train" / "epoch_0002.ckpt"));
  CHECK(io::read_text(a / "train" / "run.json") == io::read_text(b / "train" / "run.json"));
  CHECK(resumed.epoch_loss == direct.epoch_loss);

  doc["train"]["lr"] = 0.5;
  CHECK(config_error_path([&] { run_train(resolve_config(doc)); }) == "train.resume");
  auto fresh = tiny_doc(testing::scratch_dir("resume_none"));
  fresh["train"]["resume"] = true;
  CHECK(config_error_path([&] { run_train(resolve_config(fresh)); }) == "train.resume");
}

TEST_CASE("ablation at zero percent equals the baseline") {
  const auto dir = testing::scratch_dir("ablate_zero");
  auto doc = tiny_doc(dir);
  doc["ablate"]["grid"] = {0};
  doc["ablate"]["checkpoint"] = "init";
  const auto r = run_ablate(resolve_config(doc));
  REQUIRE(r.rows.size() == 6);
  for (const auto& row : r.rows) {
    CHECK(row.plan.channels.empty());
    CHECK(row.value == r.baseline);
  }
  const auto j = json::parse(io::read_text(dir / "ablate" / "removal.json"));
  CHECK(j["plans"].size() == 6);
  CHECK(j["plans"][0].contains("channels"));
  CHECK(j["plans"][0].contains("seed"));
}

TEST_CASE("probing identical pairs gives S_identical = 1") {
  const auto dir = testing::scratch_dir("probe_identical");
  auto doc = tiny_doc(dir);
  doc["probe"]["checkpoint"] = "init";
  const auto r = run_probe(resolve_config(doc));
  for (const auto& l : r.report.layers) CHECK(l.bias.score.at(SharedFactor::Identical) == doctest::Approx(1.0).epsilon(1e-6));

  // re-probing from the written traces reproduces the report
  auto from_traces = tiny_doc(testing::scratch_dir("probe_traces"));
  from_traces["probe"]["trace_dir"] = (dir / "probe" / "traces").string();
  const auto r2 = run_probe(resolve_config(from_traces));
  REQUIRE(r2.report.layers.size() == r.report.layers.size());
  for (std::size_t i = 0; i < r.report.layers.size(); ++i) {
    CHECK(r2.report.layers[i].bias.score == r.report.layers[i].bias.score);
  }
}

TEST_CASE("dose response records dropout state") {
  const auto dir = testing::scratch_dir("dose_state");
  const auto r = run_dose_response(resolve_config(tiny_doc(dir)));
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].condition == "none");
  CHECK(r.rows[0].dropout.is_null());
  CHECK(r.rows[1].condition == "static");
  CHECK(r.rows[1].dropout["kind"] == "static");
  CHECK(r.rows[1].dropout["probs"].size() == 6);
  CHECK(r.row("static", 0.5).counts.total() == 6);
  const auto j = json::parse(io::read_text(dir / "dose" / "dose_response.json"));
  CHECK(j["rows"][1]["dropout"]["layer"] == "block2");
}

TEST_CASE("camouflage report writes the center-bias grid") {
  const auto dir = testing::scratch_dir("center_bias");
  auto doc = tiny_doc(dir);
  doc["dataset"]["task_mode"] = "Camouflage";
  doc["model"]["kind"] = "TwoStream";
  doc["model"]["head"] = "Segmenter";
  const auto cfg = resolve_config(doc);
  run_report(cfg);
  const auto text = io::read_text(dir / "report" / "center_bias.csv");
  CHECK(read_csv_header(dir / "report" / "center_bias.csv").schema == "center_bias/v1");
  CHECK(std::count(text.begin(), text.end(), '\n') == 2 + 64);
}
