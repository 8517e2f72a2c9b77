#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace stadyn {

/// Serializable position of an Rng stream.
struct RngState {
  std::uint64_t key = 0;
  std::uint64_t counter = 0;
};

/// Counter-based generator: output i of a stream is a bijective mix of
/// (key, i). Substreams derive new keys from a label or index, so any draw
/// is replayable from the root seed without sharing mutable state.
///
/// All sampling helpers are implemented here rather than with <random>
/// distributions, whose outputs are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  static Rng from_state(RngState state);

  Rng derive(std::string_view label) const;
  Rng derive(std::uint64_t index) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform in [0, n); n > 0. Lemire's multiply-shift with rejection.
  std::uint64_t uniform_int(std::uint64_t n);
  /// Standard normal via Box-Muller (one output per call).
  double normal();

  std::vector<std::size_t> permutation(std::size_t n);
  /// Uniform over the n! - 1 permutations that are not the identity; n >= 2.
  std::vector<std::size_t> non_identity_permutation(std::size_t n);

  RngState state() const { return {key_, counter_}; }

 private:
  Rng(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace stadyn
