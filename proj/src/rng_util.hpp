#pragma once

#include <cmath>
#include <random>

namespace rbrom::detail {

// Uniform double in [0,1) from the top 53 bits; stdlib distributions are
// implementation-defined, so draws are hand-rolled for reproducibility.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller standard normals, deterministic for a fixed engine state.
class NormalGen {
 public:
  explicit NormalGen(std::mt19937_64& rng) : rng_(rng) {}
  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform01(rng_);
    } while (u1 <= 0.0);
    const double u2 = uniform01(rng_);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64& rng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  return rng() % n;
}

}  // namespace rbrom::detail
