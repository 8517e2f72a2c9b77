#include "stadyn/io/binary.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "stadyn/errors.hpp"

namespace stadyn::io {

std::vector<std::uint8_t> encode_f32_le(std::span<const float> values) {
  std::vector<std::uint8_t> out;
  out.reserve(values.size() * 4);
  for (float v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
  return out;
}

std::vector<float> decode_f32_le(std::span<const std::uint8_t> bytes, std::size_t count,
                                 const std::string& label, std::uint64_t base_offset) {
  if (bytes.size() < count * 4) {
    throw FormatError(label, base_offset + bytes.size(),
                      "truncated: expected " + std::to_string(count * 4) + " bytes of binary32 data, found " +
                          std::to_string(bytes.size()));
  }
  if (bytes.size() > count * 4) {
    throw FormatError(label, base_offset + count * 4,
                      "unexpected trailing bytes (" + std::to_string(bytes.size() - count * 4) + ")");
  }
  std::vector<float> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError(path.string(), 0, "cannot open for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw FormatError(path.string(), 0, "write failed");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError(path.string(), 0, "missing or unreadable file");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_f32_file(const std::filesystem::path& path, std::span<const float> values) {
  write_bytes(path, encode_f32_le(values));
}

std::vector<float> read_f32_file(const std::filesystem::path& path, std::size_t count) {
  const auto bytes = read_bytes(path);
  return decode_f32_le(bytes, count, path.string());
}

void put_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint64_t get_u64_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes[offset + b]) << (8 * b);
  return v;
}

}  // namespace stadyn::io
