#pragma once

#include <filesystem>
#include <string>

#include "stadyn/pairgen/video.hpp"

namespace stadyn::pairgen {

/// Writes `manifest.json` plus, per video, `<id>.f32` (T,H,W,C) and
/// `<id>.flow.f32` (T,H,W,2) as headerless little-endian binary32; camouflage
/// datasets also get `<id>.mask.f32` (T,H,W). A non-empty `config_hash` is
/// recorded in the manifest.
void export_dataset(const Dataset& data, const std::filesystem::path& dir, const std::string& config_hash = "");

/// Inverse of export_dataset. Throws FormatError naming the offending file and
/// byte offset for malformed manifests and missing or truncated tensor files.
Dataset import_dataset(const std::filesystem::path& dir);

/// The manifest text export_dataset writes (exposed for golden tests).
std::string dataset_manifest(const Dataset& data, const std::string& config_hash = "");

}  // namespace stadyn::pairgen
