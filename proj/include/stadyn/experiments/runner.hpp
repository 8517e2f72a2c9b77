#pragma once

// Experiment commands. Each reads an ExperimentConfig, writes its artifacts
// under `config.output`, and returns the numbers it reported.
//
//   <out>/config.json                 resolved config
//   <out>/dataset/{train,test}/       gen
//   <out>/train/epoch_NNNN.ckpt       train (+ run.json, loss.csv)
//   <out>/probe/                      bias_report.json, *.csv, traces/<factor>/
//   <out>/ablate/                     removal.json, removal.csv
//   <out>/shuffle/                    shuffle.json, shuffle.csv
//   <out>/dose/                       dose_response.json, dose_response.csv
//   <out>/report/                     index.json, center_bias.csv

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "stadyn/experiments/config.hpp"
#include "stadyn/interventions/removal.hpp"
#include "stadyn/modelzoo/train.hpp"
#include "stadyn/probe/metrics.hpp"

namespace stadyn::experiments {

struct Splits {
  pairgen::Dataset train, test;
};

/// The configured dataset: imported from `dataset.dir` or generated from the seed.
Splits load_splits(const ExperimentConfig& cfg);

/// Freshly initialized network for the config.
zoo::Network<float> initial_network(const ExperimentConfig& cfg);
std::uint64_t train_seed(const ExperimentConfig& cfg);

/// Accuracy for classifiers, mean IoU for segmenters.
double evaluate(const zoo::Network<float>& net, const pairgen::Dataset& data);
std::string metric_name(const zoo::ArchitectureDescriptor& d);

std::unique_ptr<zoo::DropoutPolicy> make_dropout(const DropoutSection& d, const zoo::ArchitectureDescriptor& model);

struct GenRun {
  std::filesystem::path train_dir, test_dir;
};
GenRun run_gen(const ExperimentConfig& cfg);

struct TrainRun {
  std::vector<zoo::ModelCheckpoint> checkpoints;  // produced by this invocation
  std::vector<double> epoch_loss;                 // whole run, including resumed epochs
  zoo::ModelCheckpoint final_checkpoint;
  double test_metric = 0.0;
};
/// Refuses (ConfigError at train.resume) to resume a run whose recorded
/// config hash differs.
TrainRun run_train(const ExperimentConfig& cfg);

struct ProbeRun {
  probe::BiasReport report;
  std::vector<probe::BiasReport> series;  // one per checkpoint when probe.epoch_series
};
ProbeRun run_probe(const ExperimentConfig& cfg);

struct RemovalRow {
  interventions::RemovalPlan plan;
  double value = 0.0;
};
struct AblateRun {
  std::string layer;
  std::string metric;
  SharedFactor dominant = SharedFactor::Dynamic;
  probe::LayerBias bias;
  double baseline = 0.0;
  std::vector<RemovalRow> rows;

  /// Metric after removal for one mode, factor and percent.
  double value(interventions::RemovalMode mode, SharedFactor factor, double percent) const;
};
AblateRun run_ablate(const ExperimentConfig& cfg);

struct ShuffleRun {
  double chance = 0.0;
  double normal = 0.0;              // trained and evaluated on ordered frames
  double shuffled = 0.0;            // trained and evaluated on shuffled frames
  double normal_on_shuffled = 0.0;  // ordered-frame model on shuffled frames
  double shuffled_on_normal = 0.0;
  double drop() const { return normal - shuffled; }
};
ShuffleRun run_shuffle(const ExperimentConfig& cfg);

struct DoseRow {
  std::string condition;  // none, standard or static
  double rate = 0.0;
  double top1 = 0.0;
  double shuffled_top1 = 0.0;
  double relative_shuffled = 0.0;  // shuffled_top1 / top1 (0 when top1 is 0)
  probe::LayerBias bias;           // layer scores at the dropout layer
  probe::UnitCounts counts;
  double dynamic_ratio = 0.0;
  nlohmann::json dropout;  // policy state after training, null for none
};
struct DoseRun {
  std::string layer;
  std::vector<DoseRow> rows;
  const DoseRow& row(const std::string& condition, double rate) const;
};
DoseRun run_dose_response(const ExperimentConfig& cfg);

struct ReportRun {
  std::vector<std::pair<std::string, std::string>> files;  // relative path, schema
};
/// Indexes every report under the output directory and refuses (ConfigError
/// at output) when one carries a different config hash. Camouflage datasets
/// also get the center-bias grid of the test masks.
ReportRun run_report(const ExperimentConfig& cfg);

}  // namespace stadyn::experiments
