#pragma once

// Counter-based random streams. A stream is a (key, counter) pair; every draw
// hashes the pair, so item N of a dataset can be regenerated without touching
// items 0..N-1 and results never depend on thread scheduling.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace synshadow {

namespace detail {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a + kGolden + mix64(b));
}

// FNV-1a, used to turn purpose labels into stream domains.
constexpr std::uint64_t hash_label(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace detail

class RandomStream {
 public:
  constexpr RandomStream() = default;
  constexpr explicit RandomStream(std::uint64_t key) : key_(key) {}

  /// Stream for one work item of one purpose under a run seed.
  static constexpr RandomStream for_item(std::uint64_t seed, std::string_view purpose,
                                         std::uint64_t item) {
    return RandomStream(detail::combine(detail::combine(seed, detail::hash_label(purpose)), item));
  }

  /// Independent child stream; does not advance this one.
  constexpr RandomStream fork(std::uint64_t index) const {
    return RandomStream(detail::combine(key_ ^ 0xA5A5A5A5A5A5A5A5ULL, index));
  }

  constexpr std::uint64_t key() const { return key_; }
  constexpr std::uint64_t counter() const { return counter_; }

  constexpr std::uint64_t next_u64() {
    return detail::mix64(key_ + detail::kGolden * ++counter_);
  }

  /// Uniform in [0,1) with 53 random bits.
  constexpr double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  constexpr double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Lemire-style multiply, bias below 2^-64·n.
  constexpr std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Standard normal via Box-Muller; consumes exactly two draws.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0,1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace synshadow
