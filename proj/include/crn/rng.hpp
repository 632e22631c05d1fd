#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace crn {

// Every random draw in the library goes through this generator so that
// results are bit-reproducible across compilers and standard libraries
// (std:: distributions are implementation-defined).
//
// Stream-splitting rule: an independent substream is identified by a list
// of 64-bit words (seed, stream tag, indices...). The words are folded with
// `mix_words` and the result seeds a SplitMix64 sequence.
inline constexpr std::string_view kRngName = "splitmix64/v1";

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix_words(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6A09E667F3BCC908ULL;
  for (std::uint64_t w : words) {
    h = splitmix64_mix(h + 0x9E3779B97F4A7C15ULL + w);
  }
  return h;
}

// Stream tags. Changing any of these changes every generated result.
enum class Stream : std::uint64_t {
  kPositions = 1,
  kGains = 2,
  kInitialAssociation = 3,
  kTieBreak = 4,
  kInitialPower = 5,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng substream(std::uint64_t seed, Stream tag, std::uint64_t index = 0) {
    return Rng(mix_words({seed, static_cast<std::uint64_t>(tag), index}));
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return splitmix64_mix(state_);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential(double mean) { return -std::log(uniform_open()) * mean; }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = -n % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t x = next_u64();
      if (x >= limit) return x % n;
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace crn
