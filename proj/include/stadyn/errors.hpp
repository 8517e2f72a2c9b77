#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace stadyn {

/// Malformed or truncated on-disk artifact (dataset, trace, checkpoint).
/// The message always names the file and, when known, the byte offset.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string file, std::uint64_t offset, const std::string& what)
      : std::runtime_error(file + " @" + std::to_string(offset) + ": " + what),
        file_(std::move(file)),
        offset_(offset) {}

  const std::string& file() const noexcept { return file_; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::string file_;
  std::uint64_t offset_;
};

/// Non-finite loss or activation during training.
class NumericError : public std::runtime_error {
 public:
  NumericError(std::int64_t batch_id, const std::string& what)
      : std::runtime_error("batch " + std::to_string(batch_id) + ": " + what),
        batch_id_(batch_id) {}

  std::int64_t batch_id() const noexcept { return batch_id_; }

 private:
  std::int64_t batch_id_;
};

/// Invalid experiment configuration; `path` is the dotted key path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace stadyn
