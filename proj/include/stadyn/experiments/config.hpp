#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "stadyn/modelzoo/train.hpp"
#include "stadyn/pairgen/pairs.hpp"
#include "stadyn/probe/metrics.hpp"

namespace stadyn::experiments {

using pairgen::SharedFactor;

enum class DropoutKind { None, Standard, Static };

std::string_view to_string(DropoutKind k);

struct DatasetSection {
  pairgen::TaskMode task_mode = pairgen::TaskMode::DynamicOnly;
  std::size_t train = 400;
  std::size_t test = 200;
  pairgen::VideoSpec spec;
  /// Directory written by `gen`; empty means regenerate from the seed.
  std::string dir;
};

struct DropoutSection {
  DropoutKind kind = DropoutKind::None;
  double rate = 0.5;
  std::string layer;  // empty: the model's final layer
  std::uint64_t period = 30;
};

struct TrainSection {
  zoo::TrainConfig config;
  DropoutSection dropout;
  bool resume = false;
};

struct ProbeSection {
  double lambda = probe::kDefaultThreshold;
  std::size_t pairs = 200;
  std::vector<std::string> layers;  // empty: every probe layer
  pairgen::PairMode pair_mode = pairgen::PairMode::FrameShuffle;
  probe::ScoreNorm norm = probe::ScoreNorm::Mean;
  /// Checkpoint file; empty uses the final checkpoint of `train`, "init" a
  /// freshly initialized network.
  std::string checkpoint;
  /// Directory holding static/, dynamic/ and optionally identical/ traces;
  /// when set, no network is run.
  std::string trace_dir;
  bool epoch_series = false;
};

struct AblateSection {
  std::vector<double> grid{0, 10, 20, 30, 40, 50};
  std::string layer;
  std::string checkpoint;
};

struct DoseSection {
  std::vector<double> rates{0.1, 0.3, 0.5, 0.7};
  double standard_rate = 0.5;
  std::string layer;
  int finetune_epochs = 0;
  double finetune_lr = 0.001;
};

/// Fully resolved experiment configuration. `doc` holds the canonical
/// document every field was read from.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output = "out";
  DatasetSection dataset;
  zoo::ArchitectureDescriptor model;
  TrainSection train;
  ProbeSection probe;
  AblateSection ablate;
  DoseSection dose;
  nlohmann::json doc;

  /// FNV-1a of the canonical document without `output`, `train.resume` and
  /// `train.epochs`, as 16 hex digits. Epoch counts are recorded per
  /// checkpoint instead, so a resumed run may extend training.
  std::string hash() const;
};

/// Every key with its default value; the schema user documents are checked
/// against.
nlohmann::json default_config();

/// Merges `user` into `base`. Unknown keys and type mismatches throw
/// ConfigError naming the dotted path.
void merge_config(nlohmann::json& base, const nlohmann::json& user, const std::string& path = "");

/// Applies one `dotted.key=value` override. The value is read as JSON when it
/// parses and as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Typed view of a complete document; semantic errors throw ConfigError.
ExperimentConfig resolve_config(const nlohmann::json& doc);

/// Defaults, then the file at `path` (if non-empty), then overrides in order.
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);

}  // namespace stadyn::experiments
