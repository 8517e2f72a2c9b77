#pragma once

// Report tables. Every CSV starts with one comment line
//   # schema=<name>/v<version> config_hash=<16 hex> seed=<u64>
// followed by the column header. Columns only change together with the
// version number.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace stadyn::experiments {

struct CsvSchema {
  std::string_view name;
  int version = 1;
  std::vector<std::string_view> columns;

  std::string id() const;  // "<name>/v<version>"
};

namespace schemas {
extern const CsvSchema kTrainLoss;     // epoch,loss
extern const CsvSchema kBiasLayers;    // per layer factor scores and unit counts
extern const CsvSchema kUnitClasses;   // per layer class counts at lambda
extern const CsvSchema kUnits;         // per channel scores and class
extern const CsvSchema kEpochSeries;   // unit counts per checkpoint epoch
extern const CsvSchema kRemoval;       // metric after removal, per mode and percent
extern const CsvSchema kShuffle;       // accuracy by train/eval frame order
extern const CsvSchema kDoseResponse;  // accuracy and unit ratio per dropout condition
extern const CsvSchema kCenterBias;    // y,x,value
const std::vector<const CsvSchema*>& all();
}  // namespace schemas

/// Fixed formatting for table cells: %.10g, with -0 printed as 0.
std::string cell(double v);
std::string cell(std::int64_t v);
std::string cell(std::uint64_t v);
std::string cell(int v);

class CsvTable {
 public:
  explicit CsvTable(const CsvSchema& schema) : schema_(&schema) {}

  /// Throws std::invalid_argument when the row width disagrees with the schema.
  void add(std::vector<std::string> row);
  std::size_t rows() const { return rows_.size(); }
  std::string render(const std::string& config_hash, std::uint64_t seed) const;
  void write(const std::filesystem::path& path, const std::string& config_hash, std::uint64_t seed) const;

 private:
  const CsvSchema* schema_;
  std::vector<std::vector<std::string>> rows_;
};

/// Parsed first line of a report CSV. Throws FormatError when it is missing
/// or malformed.
struct CsvHeader {
  std::string schema;
  std::string config_hash;
  std::uint64_t seed = 0;
};
CsvHeader read_csv_header(const std::filesystem::path& path);

/// Wraps `body` with {"header": {"schema", "config_hash", "seed"}} and writes
/// it as indented JSON.
void write_json_report(const std::filesystem::path& path, std::string_view schema, nlohmann::json body,
                       const std::string& config_hash, std::uint64_t seed);

}  // namespace stadyn::experiments
