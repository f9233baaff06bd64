#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace toolforge {

/// Mixes a 64-bit value (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent stream seed from (master, purpose tag, index).
///
/// Every random quantity in the project is drawn from a stream keyed this way,
/// so results never depend on call order across unrelated subsystems or on
/// how work is split over threads.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index = 0);

/// Thin wrapper around std::mt19937_64 with the handful of draws we need.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    if (stddev == 0.0) {
      // keep the draw count independent of the magnitude
      std::normal_distribution<double>(0.0, 1.0)(engine_);
      return mean;
    }
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  bool bernoulli(double p) { return uniform() < p; }
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }

  engine_type& engine() { return engine_; }

 private:
  engine_type engine_;
};

}  // namespace toolforge
