#include "stadyn/pairgen/dataset_io.hpp"

#include <json.hpp>

#include "stadyn/errors.hpp"
#include "stadyn/io/binary.hpp"

namespace stadyn::pairgen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;

std::string video_file(std::size_t i) { return std::to_string(i) + ".f32"; }
std::string flow_file(std::size_t i) { return std::to_string(i) + ".flow.f32"; }
std::string mask_file(std::size_t i) { return std::to_string(i) + ".mask.f32"; }

template <typename T>
T required(const json& j, const char* key, const std::string& file) {
  if (!j.contains(key)) throw FormatError(file, 0, std::string("manifest missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(file, 0, std::string("manifest key '") + key + "': " + e.what());
  }
}

}  // namespace

std::string dataset_manifest(const Dataset& data, const std::string& config_hash) {
  const auto& spec = data.spec;
  json m;
  m["version"] = kManifestVersion;
  if (!config_hash.empty()) m["config_hash"] = config_hash;
  m["count"] = data.items.size();
  m["T"] = spec.frames;
  m["H"] = spec.height;
  m["W"] = spec.width;
  m["C"] = spec.channels;
  m["task_mode"] = std::string(to_string(data.mode));
  m["palettes"] = spec.palettes;
  m["textures"] = spec.textures;
  m["shapes"] = spec.shapes;
  m["styles"] = spec.styles;
  json labels = json::array(), factors = json::array(), files = json::array();
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    const auto& item = data.items[i];
    labels.push_back(item.label);
    const auto& f = item.factors;
    factors.push_back({{"palette", f.statics.palette},
                       {"texture", f.statics.texture},
                       {"shape", f.statics.shape},
                       {"direction", f.dynamics.direction},
                       {"speed", f.dynamics.speed},
                       {"flicker_period", f.dynamics.flicker_period}});
    json entry{{"video", video_file(i)}, {"flow", flow_file(i)}};
    if (!item.mask.empty()) entry["mask"] = mask_file(i);
    files.push_back(entry);
  }
  m["labels"] = labels;
  m["factors"] = factors;
  m["files"] = files;
  return m.dump(2) + "\n";
}

void export_dataset(const Dataset& data, const fs::path& dir, const std::string& config_hash) {
  fs::create_directories(dir);
  const auto& spec = data.spec;
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    const auto& item = data.items[i];
    if (item.video.frames.shape() != Shape{spec.frames, spec.height, spec.width, spec.channels}) {
      throw std::invalid_argument("export_dataset: video " + std::to_string(i) + " shape " +
                                  shape_to_string(item.video.frames.shape()) + " disagrees with spec");
    }
    io::write_f32_file(dir / video_file(i), item.video.frames.data());
    const Tensor<float> flow =
        item.video.has_flow() ? item.video.flow : Tensor<float>({spec.frames, spec.height, spec.width, 2});
    io::write_f32_file(dir / flow_file(i), flow.data());
    if (!item.mask.empty()) io::write_f32_file(dir / mask_file(i), item.mask.data());
  }
  io::write_text(dir / "manifest.json", dataset_manifest(data, config_hash));
}

Dataset import_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  const std::string mfile = manifest_path.string();
  const std::string text = io::read_text(manifest_path);
  json m;
  try {
    m = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(mfile, e.byte, std::string("malformed JSON: ") + e.what());
  }
  if (!m.is_object()) throw FormatError(mfile, 0, "manifest is not a JSON object");
  if (required<int>(m, "version", mfile) != kManifestVersion) {
    throw FormatError(mfile, 0, "unsupported manifest version");
  }

  Dataset data;
  auto& spec = data.spec;
  spec.frames = required<std::size_t>(m, "T", mfile);
  spec.height = required<std::size_t>(m, "H", mfile);
  spec.width = required<std::size_t>(m, "W", mfile);
  spec.channels = required<std::size_t>(m, "C", mfile);
  spec.palettes = m.value("palettes", spec.palettes);
  spec.textures = m.value("textures", spec.textures);
  spec.shapes = m.value("shapes", spec.shapes);
  spec.styles = m.value("styles", spec.styles);
  try {
    data.mode = task_mode_from_string(required<std::string>(m, "task_mode", mfile));
  } catch (const std::invalid_argument& e) {
    throw FormatError(mfile, 0, e.what());
  }
  const auto count = required<std::size_t>(m, "count", mfile);
  const auto labels = required<std::vector<int>>(m, "labels", mfile);
  const json factors = required<json>(m, "factors", mfile);
  const json files = required<json>(m, "files", mfile);
  if (labels.size() != count || !factors.is_array() || factors.size() != count || !files.is_array() ||
      files.size() != count) {
    throw FormatError(mfile, 0, "labels/factors/files arrays must all have length count");
  }

  const std::size_t frame_values = spec.frames * spec.height * spec.width;
  data.items.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& item = data.items[i];
    item.label = labels[i];
    const json& f = factors[i];
    item.factors.statics = {required<int>(f, "palette", mfile), required<int>(f, "texture", mfile),
                            required<int>(f, "shape", mfile)};
    item.factors.dynamics = {required<int>(f, "direction", mfile), required<int>(f, "speed", mfile),
                             required<int>(f, "flicker_period", mfile)};
    const json& entry = files[i];
    const auto vname = required<std::string>(entry, "video", mfile);
    item.video.frames = Tensor<float>({spec.frames, spec.height, spec.width, spec.channels},
                                      io::read_f32_file(dir / vname, frame_values * spec.channels));
    if (entry.contains("flow")) {
      item.video.flow = Tensor<float>({spec.frames, spec.height, spec.width, 2},
                                      io::read_f32_file(dir / required<std::string>(entry, "flow", mfile),
                                                        frame_values * 2));
    }
    if (entry.contains("mask")) {
      item.mask = Tensor<float>({spec.frames, spec.height, spec.width},
                                io::read_f32_file(dir / required<std::string>(entry, "mask", mfile), frame_values));
    }
  }
  return data;
}

}  // namespace stadyn::pairgen
