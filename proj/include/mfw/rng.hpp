#pragma once

#include <cstdint>
#include <random>

namespace mfw {

/// Reproducible random stream keyed by (seed, iteration, replication).
/// Distinct keys are decorrelated through splitmix64 before seeding the
/// engine. Not thread-safe; one stream per caller.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t iteration = 0, std::uint64_t replication = 0);

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(engine_); }
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) noexcept;

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace mfw
