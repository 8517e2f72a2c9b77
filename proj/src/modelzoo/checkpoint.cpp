#include "stadyn/modelzoo/checkpoint.hpp"

#include <cstring>

#include <json.hpp>

#include "stadyn/errors.hpp"
#include "stadyn/io/binary.hpp"

namespace stadyn::zoo {

using nlohmann::json;

namespace {

constexpr std::size_t kHeaderBytes = 16;

json parameter_table(const ParameterSet<float>& p) {
  json t = json::array();
  for (const auto& e : p.entries()) t.push_back({{"name", e.name}, {"shape", e.value.shape()}});
  return t;
}

}  // namespace

Network<float> ModelCheckpoint::network() const {
  Network<float> net(descriptor, params);
  for (const auto& [layer, channels] : removed) net.remove_channels(layer, channels);
  return net;
}

std::vector<std::uint8_t> encode_checkpoint(const ModelCheckpoint& ck) {
  if (ck.velocity.size() != ck.params.size()) throw std::invalid_argument("checkpoint: velocity layout mismatch");
  json m;
  m["version"] = 1;
  m["descriptor"] = to_json(ck.descriptor);
  m["epoch"] = ck.epoch;
  m["seeds"] = {{"seed", ck.seed}, {"rng_key", ck.rng.key}, {"rng_counter", ck.rng.counter}};
  m["config_hash"] = ck.config_hash;
  m["parameters"] = parameter_table(ck.params);
  m["removed"] = ck.removed;
  const std::string manifest = m.dump();

  std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + 8);
  io::put_u64_le(out, manifest.size());
  out.insert(out.end(), manifest.begin(), manifest.end());
  for (const auto* set : {&ck.params, &ck.velocity}) {
    for (const auto& e : set->entries()) {
      const auto bytes = io::encode_f32_le(e.value.data());
      out.insert(out.end(), bytes.begin(), bytes.end());
    }
  }
  return out;
}

ModelCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& label) {
  if (bytes.size() < kHeaderBytes) throw FormatError(label, bytes.size(), "truncated checkpoint header");
  if (std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) throw FormatError(label, 0, "bad magic, expected SDCK0001");
  const std::uint64_t len = io::get_u64_le(bytes, 8);
  if (len > bytes.size() - kHeaderBytes) throw FormatError(label, kHeaderBytes, "manifest length exceeds file size");

  ModelCheckpoint ck;
  std::vector<std::pair<std::string, Shape>> table;
  try {
    const auto m = json::parse(bytes.begin() + kHeaderBytes, bytes.begin() + kHeaderBytes + static_cast<long>(len));
    if (m.at("version").get<int>() != 1) throw FormatError(label, kHeaderBytes, "unsupported checkpoint version");
    ck.descriptor = descriptor_from_json(m.at("descriptor"));
    ck.epoch = m.at("epoch").get<int>();
    const auto& s = m.at("seeds");
    ck.seed = s.at("seed").get<std::uint64_t>();
    ck.rng = {s.at("rng_key").get<std::uint64_t>(), s.at("rng_counter").get<std::uint64_t>()};
    ck.config_hash = m.at("config_hash").get<std::string>();
    ck.removed = m.at("removed").get<std::map<std::string, std::vector<std::size_t>>>();
    for (const auto& e : m.at("parameters")) table.emplace_back(e.at("name"), e.at("shape").get<Shape>());
  } catch (const json::parse_error& e) {
    throw FormatError(label, kHeaderBytes + e.byte, std::string("manifest: ") + e.what());
  } catch (const json::exception& e) {
    throw FormatError(label, kHeaderBytes, std::string("manifest: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(label, kHeaderBytes, std::string("manifest: ") + e.what());
  }

  std::size_t total = 0;
  for (const auto& [name, shape] : table) total += shape_volume(shape);
  const std::size_t blob_offset = kHeaderBytes + len;
  const auto values = io::decode_f32_le(bytes.subspan(blob_offset), 2 * total, label, blob_offset);
  std::size_t pos = 0;
  for (auto* set : {&ck.params, &ck.velocity}) {
    for (const auto& [name, shape] : table) {
      const std::size_t n = shape_volume(shape);
      set->add(name, Tensor<float>(shape, std::vector<float>(values.begin() + static_cast<long>(pos),
                                                             values.begin() + static_cast<long>(pos + n))));
      pos += n;
    }
  }
  try {
    (void)ck.network();
  } catch (const std::invalid_argument& e) {
    throw FormatError(label, kHeaderBytes, std::string("parameters do not fit descriptor: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const ModelCheckpoint& ck, const std::filesystem::path& path) {
  io::write_bytes(path, encode_checkpoint(ck));
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_bytes(path), path.string());
}

}  // namespace stadyn::zoo
