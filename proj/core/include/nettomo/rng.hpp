#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>

namespace nettomo {

/// Identifies one independent random stream inside an experiment.
struct StreamKey {
  std::uint64_t scenario = 0;
  std::uint64_t run = 0;
  std::uint64_t policy = 0;
};

/// Counter-based generator: draw i is a keyed hash of (key, i), so a stream
/// is fully determined by its key and position and never shares state.
/// Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed);
  RngStream(std::uint64_t master_seed, StreamKey key);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  bool bernoulli(double p);
  /// Uniform on {0, ..., n-1}; n must be positive.
  std::size_t uniform_index(std::size_t n);

  std::uint64_t position() const noexcept { return counter_; }
  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// SplitMix64 finaliser; exposed for seed derivation.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace nettomo
