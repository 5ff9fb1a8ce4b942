#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace odr {

// Reproducible generator: std::mt19937_64 (fully specified by the standard)
// keyed by SplitMix64(seed, stream). Variates are produced here rather than
// through <random> distributions, whose output is implementation-defined.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view stream);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace odr
