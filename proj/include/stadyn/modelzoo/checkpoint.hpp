#pragma once

// Checkpoint file layout:
//   bytes 0..7    magic "SDCK0001"
//   bytes 8..15   manifest length L, u64 little-endian
//   next L bytes  manifest JSON (descriptor, epoch, seeds, parameter table)
//   remainder     parameters then optimizer velocity, binary32 LE, each in
//                 declaration order

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stadyn/modelzoo/network.hpp"
#include "stadyn/numerics/rng.hpp"

namespace stadyn::zoo {

inline constexpr char kCheckpointMagic[] = "SDCK0001";

struct ModelCheckpoint {
  ArchitectureDescriptor descriptor;
  ParameterSet<float> params;
  ParameterSet<float> velocity;  // SGD momentum buffer, same layout as params
  int epoch = 0;
  std::uint64_t seed = 0;
  RngState rng;
  std::string config_hash;
  /// Removal masks in effect (layer -> removed channels); empty for training runs.
  std::map<std::string, std::vector<std::size_t>> removed;

  Network<float> network() const;
};

std::vector<std::uint8_t> encode_checkpoint(const ModelCheckpoint& ck);
/// `label` names the source in FormatError messages.
ModelCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& label);

void save_checkpoint(const ModelCheckpoint& ck, const std::filesystem::path& path);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace stadyn::zoo
