#pragma once

#include <cstdint>
#include <limits>

namespace tc {

// SplitMix64 used as a counter-based generator: the i-th output of a stream
// is mix(start + i * kGamma). A stream is identified by (seed, stream index);
// its starting counter is mix(seed) ^ mix(kStreamSalt + stream * kGamma).
// Replica r of an experiment seeded with s always uses stream (s, r), so
// results do not depend on how replicas are scheduled across threads.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kStreamSalt = 0xD1B54A32D192ED03ULL;

  explicit SplitMix64(std::uint64_t seed, std::uint64_t stream = 0)
      : counter_(mix(seed) ^ mix(kStreamSalt + stream * kGamma)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    counter_ += kGamma;
    return mix(counter_);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(operator()() >> 11) * 0x1.0p-53; }

  static constexpr std::uint64_t mix(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

 private:
  std::uint64_t counter_;
};

}  // namespace tc
