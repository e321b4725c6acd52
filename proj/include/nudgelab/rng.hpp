#pragma once

// Counter-based random numbers (Philox4x32-10) for reproducible ensembles.
// A draw is a pure function of (key, counter), so members and time steps can be
// sampled in any order or on any thread and still produce the same stream.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace nudgelab {

namespace detail {

inline void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace detail

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) {
  constexpr std::uint32_t kMulA = 0xD2511F53u;
  constexpr std::uint32_t kMulB = 0xCD9E8D57u;
  constexpr std::uint32_t kWeylA = 0x9E3779B9u;
  constexpr std::uint32_t kWeylB = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    detail::mulhilo32(kMulA, ctr[0], hi0, lo0);
    detail::mulhilo32(kMulB, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeylA;
    key[1] += kWeylB;
  }
  return ctr;
}

/// SplitMix64 finalizer; used to derive keys and per-member seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed recorded for ensemble member `member` of a run with `master_seed`.
inline std::uint64_t derive_member_seed(std::uint64_t master_seed, std::uint64_t member) {
  return splitmix64(splitmix64(master_seed) ^ (member * 0xD1B54A32D192ED03ull));
}

/// Stream tags keep independent uses of one seed apart.
enum class Stream : std::uint32_t { noise = 0, initial = 1, probe = 2 };

/// Stateless normal generator: normal(step, index) is a fixed function of the
/// seed, the stream tag and the two indices.
class CounterNormal {
 public:
  CounterNormal(std::uint64_t seed, Stream stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(static_cast<std::uint32_t>(stream)) {}

  double normal(std::uint64_t step, std::uint32_t index) const {
    const PhiloxCounter out = philox4x32(
        {index, static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32), stream_}, key_);
    const std::uint64_t a = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    const std::uint64_t b = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
    // (0, 1] and [0, 1) with 53 random bits each.
    const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double uniform(std::uint64_t step, std::uint32_t index) const {
    const PhiloxCounter out = philox4x32(
        {index, static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32), stream_ ^ 0x80000000u},
        key_);
    const std::uint64_t a = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    return static_cast<double>(a >> 11) * 0x1.0p-53;
  }

 private:
  PhiloxKey key_;
  std::uint32_t stream_;
};

}  // namespace nudgelab
