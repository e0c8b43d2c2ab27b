#include "rpz/rng.hpp"

namespace rpz {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
  return finalize(finalize(a + kGolden) ^ (b * 0xD6E8FEB86659FD93ULL + 0x632BE59BD9B4E019ULL));
}

std::uint64_t mix_key(std::uint64_t a, std::uint64_t b, std::uint64_t c) { return mix_key(mix_key(a, b), c); }

Rng::result_type Rng::operator()() {
  ++counter_;
  return finalize(key_ + counter_ * kGolden);
}

double Rng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

}  // namespace rpz
