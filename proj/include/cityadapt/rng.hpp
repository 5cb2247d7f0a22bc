#pragma once

#include <cstdint>
#include <random>

namespace cityadapt {

// Deterministic uniform sampling on top of std::mt19937_64. The raw engine
// output is specified bit-exactly by the standard; std::uniform_real_distribution
// is not, so draws are mapped to doubles by hand to keep sequences identical
// across standard libraries.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cityadapt
