#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace dpm {

// xoshiro256++ engine. Satisfies UniformRandomBitGenerator so it can drive
// the <random> distributions. Substreams are derived by hashing a master
// seed together with a list of counters (period, particle, ...), which lets
// data-parallel loops give every work item its own reproducible stream
// regardless of how the items are split across threads.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0x9E3779B97F4A7C15ULL) { reseed(seed); }

  static Rng substream(std::uint64_t seed,
                       std::initializer_list<std::uint64_t> counters) {
    std::uint64_t h = splitmix(seed ^ 0x6A09E667F3BCC909ULL);
    for (std::uint64_t c : counters) {
      h = splitmix(h ^ splitmix(c + 0xBB67AE8584CAA73BULL));
    }
    return Rng(h);
  }

  void reseed(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) {
      x += 0x9E3779B97F4A7C15ULL;
      s = mix(x);
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 bits of randomness.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  static constexpr std::uint64_t splitmix(std::uint64_t x) {
    return mix(x + 0x9E3779B97F4A7C15ULL);
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace dpm
