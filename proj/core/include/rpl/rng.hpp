#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace rpl {

// splitmix64 finalizer; maps (master, stream) to an independent sub-seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Well-known sub-seed streams fanned out from one master seed.
namespace seed_stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kShuffle = 2;
inline constexpr std::uint64_t kAudit = 3;
inline constexpr std::uint64_t kData = 4;
inline constexpr std::uint64_t kLift = 5;
}  // namespace seed_stream

// Deterministic generator. Uniform and normal draws are computed from raw
// mt19937_64 output, so sequences do not depend on the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, bound), rejection sampled.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rpl
