#pragma once

#include <cstdint>
#include <limits>

namespace rpz {

// Mixes two 64-bit words into a stream key.
std::uint64_t mix_key(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_key(std::uint64_t a, std::uint64_t b, std::uint64_t c);

// Counter-based generator: output i is a bijective hash of (key, i).
// Streams are addressed by key, so a (seed, particle, step) triple names a
// reproducible stream regardless of which worker thread consumes it.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace rpz
