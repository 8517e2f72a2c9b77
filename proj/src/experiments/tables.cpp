#include "stadyn/experiments/tables.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "stadyn/errors.hpp"
#include "stadyn/io/binary.hpp"

namespace stadyn::experiments {

std::string CsvSchema::id() const { return std::string(name) + "/v" + std::to_string(version); }

namespace schemas {

const CsvSchema kTrainLoss{"train_loss", 1, {"epoch", "loss"}};
const CsvSchema kBiasLayers{"bias_layers",
                            1,
                            {"epoch", "layer", "channels", "s_static", "s_dynamic", "s_identical", "n_static",
                             "n_dynamic", "n_identical", "n2_static", "n2_dynamic"}};
const CsvSchema kUnitClasses{
    "unit_classes", 1, {"epoch", "layer", "channels", "lambda", "static", "dynamic", "joint", "residual",
                        "dynamic_ratio"}};
const CsvSchema kUnits{"units", 1, {"epoch", "layer", "channel", "s_static", "s_dynamic", "class"}};
const CsvSchema kEpochSeries{
    "epoch_series", 1, {"epoch", "layer", "s_static", "s_dynamic", "static", "dynamic", "joint", "residual",
                        "dynamic_ratio"}};
const CsvSchema kRemoval{"removal", 1, {"layer", "mode", "factor", "percent", "removed", "metric", "value"}};
const CsvSchema kShuffle{"shuffle", 1, {"task_mode", "train_frames", "eval_frames", "accuracy", "chance"}};
const CsvSchema kDoseResponse{"dose_response",
                              1,
                              {"condition", "rate", "top1", "shuffled_top1", "relative_shuffled", "s_static",
                               "s_dynamic", "static", "dynamic", "joint", "residual", "dynamic_ratio"}};
const CsvSchema kCenterBias{"center_bias", 1, {"y", "x", "value"}};

const std::vector<const CsvSchema*>& all() {
  static const std::vector<const CsvSchema*> list = {&kTrainLoss,  &kBiasLayers, &kUnitClasses,
                                                     &kUnits,      &kEpochSeries, &kRemoval,
                                                     &kShuffle,    &kDoseResponse, &kCenterBias};
  return list;
}

}  // namespace schemas

std::string cell(double v) {
  if (v == 0.0) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}
std::string cell(std::int64_t v) { return std::to_string(v); }
std::string cell(std::uint64_t v) { return std::to_string(v); }
std::string cell(int v) { return std::to_string(v); }

void CsvTable::add(std::vector<std::string> row) {
  if (row.size() != schema_->columns.size()) {
    throw std::invalid_argument(schema_->id() + ": row has " + std::to_string(row.size()) + " cells, expected " +
                                std::to_string(schema_->columns.size()));
  }
  rows_.push_back(std::move(row));
}

std::string CsvTable::render(const std::string& config_hash, std::uint64_t seed) const {
  std::string out = "# schema=" + schema_->id() + " config_hash=" + config_hash + " seed=" + std::to_string(seed) + "\n";
  const auto line = [&](const auto& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(schema_->columns);
  for (const auto& r : rows_) line(r);
  return out;
}

void CsvTable::write(const std::filesystem::path& path, const std::string& config_hash, std::uint64_t seed) const {
  io::write_text(path, render(config_hash, seed));
}

CsvHeader read_csv_header(const std::filesystem::path& path) {
  const std::string text = io::read_text(path);
  const std::string first = text.substr(0, text.find('\n'));
  CsvHeader h;
  std::istringstream in(first);
  std::string hash_mark, token;
  in >> hash_mark;
  if (hash_mark != "#") throw FormatError(path.string(), 0, "missing report header line");
  bool have_schema = false, have_hash = false, have_seed = false;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw FormatError(path.string(), 0, "malformed header field '" + token + "'");
    const auto key = token.substr(0, eq), value = token.substr(eq + 1);
    if (key == "schema") {
      h.schema = value;
      have_schema = true;
    } else if (key == "config_hash") {
      h.config_hash = value;
      have_hash = true;
    } else if (key == "seed") {
      try {
        std::size_t used = 0;
        h.seed = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw FormatError(path.string(), 0, "malformed seed '" + value + "'");
      }
      have_seed = true;
    }
  }
  if (!have_schema || !have_hash || !have_seed) throw FormatError(path.string(), 0, "incomplete report header");
  return h;
}

void write_json_report(const std::filesystem::path& path, std::string_view schema, nlohmann::json body,
                       const std::string& config_hash, std::uint64_t seed) {
  body["header"] = {{"schema", std::string(schema)}, {"config_hash", config_hash}, {"seed", seed}};
  io::write_text(path, body.dump(2) + "\n");
}

}  // namespace stadyn::experiments
