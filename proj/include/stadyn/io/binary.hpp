#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace stadyn::io {

/// Little-endian binary32 encoding, independent of host byte order.
std::vector<std::uint8_t> encode_f32_le(std::span<const float> values);

/// Decodes exactly `count` values; throws FormatError naming `label` when the
/// byte string is shorter or longer than expected.
std::vector<float> decode_f32_le(std::span<const std::uint8_t> bytes, std::size_t count,
                                 const std::string& label, std::uint64_t base_offset = 0);

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
/// Throws FormatError(path, 0, ...) when the file cannot be opened.
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

void write_f32_file(const std::filesystem::path& path, std::span<const float> values);
std::vector<float> read_f32_file(const std::filesystem::path& path, std::size_t count);

void put_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v);
std::uint64_t get_u64_le(std::span<const std::uint8_t> bytes, std::size_t offset);

}  // namespace stadyn::io
