#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace msqss {

inline constexpr double kPi = 3.14159265358979323846;

// Deterministic, splittable random stream built on the SplitMix64 finalizer.
//
// Streams form a tree: child(k) derives a new stream from the *construction*
// seed and the key k, independent of how much of this stream has been
// consumed. That makes any node in the tree (trial k, receiver i, role r)
// reproducible in isolation from the master seed alone:
//
//   trial_k   = SplitRng(master).child(k)
//   receiver  = trial_k.child(i)
//   role      = receiver.child(role_id)
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : origin_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return finalize(state_);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool next_bool() { return (next_u64() >> 63) != 0; }

  // Uniform in [0, bound), rejection-sampled so every bound is unbiased.
  int next_below(int bound) {
    if (bound <= 0) throw std::invalid_argument("SplitRng::next_below: bound must be positive");
    const std::uint64_t b = static_cast<std::uint64_t>(bound);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % b;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return static_cast<int>(r % b);
  }

  // Standard normal via Box-Muller; consumes two words per call.
  double next_gaussian() {
    double u1;
    do {
      u1 = next_unit();
    } while (u1 <= 0.0);
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  // Index sampled from a probability vector by inverse CDF. The vector is
  // assumed to sum to ~1; accumulated rounding is absorbed by returning the
  // last index with positive mass when the draw lands past the final bin.
  std::size_t sample(std::span<const double> probabilities) {
    if (probabilities.empty()) throw std::invalid_argument("SplitRng::sample: empty distribution");
    const double u = next_unit();
    double acc = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
      acc += probabilities[i];
      if (u < acc) return i;
    }
    for (std::size_t i = probabilities.size(); i-- > 0;) {
      if (probabilities[i] > 0.0) return i;
    }
    return probabilities.size() - 1;
  }

  SplitRng child(std::uint64_t key) const { return SplitRng(derive(origin_, key)); }

  std::uint64_t seed() const { return origin_; }

 private:
  static std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t key) {
    // Two finalize rounds keep sibling streams decorrelated even for
    // consecutive keys.
    return finalize(finalize(seed + 0x9e3779b97f4a7c15ull * (key + 1)) ^ 0xd1b54a32d192ed03ull);
  }

  std::uint64_t origin_;
  std::uint64_t state_;
};

}  // namespace msqss
