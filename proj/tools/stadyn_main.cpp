#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stadyn/errors.hpp"
#include "stadyn/experiments/runner.hpp"

using namespace stadyn;
using namespace stadyn::experiments;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kNumeric = 3, kFormat = 4 };

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void print_probe(const ProbeRun& r) {
  for (const auto& l : r.report.layers) {
    const auto& c = l.classification.counts;
    std::printf("%-8s S_static=%.4f S_dynamic=%.4f units static=%zu dynamic=%zu joint=%zu residual=%zu\n",
                l.name.c_str(), l.bias.score.at(SharedFactor::Static), l.bias.score.at(SharedFactor::Dynamic),
                c.static_units, c.dynamic_units, c.joint, c.residual);
  }
}

int dispatch(const std::string& command, const ExperimentConfig& cfg) {
  if (command == "gen") {
    const auto r = run_gen(cfg);
    std::printf("dataset written to %s and %s\n", r.train_dir.string().c_str(), r.test_dir.string().c_str());
  } else if (command == "train") {
    const auto r = run_train(cfg);
    std::printf("trained to epoch %d, final loss %.6f, test %s %.4f\n", r.final_checkpoint.epoch,
                r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back(), metric_name(cfg.model).c_str(), r.test_metric);
  } else if (command == "probe") {
    print_probe(run_probe(cfg));
  } else if (command == "ablate") {
    const auto r = run_ablate(cfg);
    std::printf("layer %s baseline %s %.4f, dominant factor %s\n", r.layer.c_str(), r.metric.c_str(), r.baseline,
                std::string(pairgen::to_string(r.dominant)).c_str());
    for (const auto& row : r.rows) {
      std::printf("  %-20s %-8s %5.1f%% -> %.4f\n", std::string(interventions::to_string(row.plan.mode)).c_str(),
                  std::string(pairgen::to_string(row.plan.factor)).c_str(), row.plan.percent, row.value);
    }
  } else if (command == "shuffle-exp") {
    const auto r = run_shuffle(cfg);
    std::printf("ordered %.4f shuffled %.4f drop %.4f chance %.4f\n", r.normal, r.shuffled, r.drop(), r.chance);
  } else if (command == "dose-response") {
    const auto r = run_dose_response(cfg);
    for (const auto& row : r.rows) {
      std::printf("%-8s r=%.2f top1 %.4f shuffled %.4f relative %.4f S_static %.4f S_dynamic %.4f dynamic ratio %.4f\n",
                  row.condition.c_str(), row.rate, row.top1, row.shuffled_top1, row.relative_shuffled,
                  row.bias.score.at(SharedFactor::Static), row.bias.score.at(SharedFactor::Dynamic), row.dynamic_ratio);
    }
  } else if (command == "report") {
    const auto r = run_report(cfg);
    std::printf("%zu report files indexed in %s\n", r.files.size(), (cfg.output / "report" / "index.json").string().c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probe static and dynamic information in spatiotemporal networks on synthetic video."};
  app.require_subcommand(1);
  Options opts;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen", "write the configured dataset to <out>/dataset"},
      {"train", "train the configured model and write checkpoints"},
      {"probe", "collect factor-pair traces and report layer and unit bias"},
      {"ablate", "accuracy after removing units by each ranking"},
      {"shuffle-exp", "train and evaluate on ordered versus shuffled frames"},
      {"dose-response", "train under no, standard and static dropout"},
      {"report", "index every report under <out> and write dataset grids"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "JSON config file");
    sub->add_option("--set", opts.sets, "override one key, e.g. --set train.lr=0.05 (repeatable)");
    sub->add_option("--out", opts.out, "output directory (overrides output)");
    sub->add_option("--seed", opts.seed, "root seed (overrides seed)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    std::vector<std::string> overrides = opts.sets;
    if (opts.seed) overrides.push_back("seed=" + std::to_string(*opts.seed));
    if (!opts.out.empty()) overrides.push_back("output=" + nlohmann::json(opts.out).dump());
    const ExperimentConfig cfg = load_config(opts.config, overrides);
    return dispatch(command, cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kFormat;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kFormat;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
