#pragma once

#include <cstdint>
#include <random>

namespace glue {

/// Seeded generator with portable uniform draws, so reports are reproducible
/// across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform in the open interval (lo, hi).
  double open_uniform(double lo, double hi) {
    double u;
    do u = uniform(); while (u == 0.0);
    return lo + (hi - lo) * u;
  }
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }
  bool coin(double p = 0.5) { return uniform() < p; }

private:
  std::mt19937_64 engine_;
};

} // namespace glue
