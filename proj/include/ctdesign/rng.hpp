#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace ctdesign {

//! 64-bit finalizer used for seed derivation and counter-based streams.
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

//! Derive an independent stream seed from a root seed and a tag path.
//! Same (seed, tags) always yields the same value; results are order
//! sensitive so (a, b) and (b, a) differ.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = mix64(seed + kGolden);
  for (std::uint64_t t : tags) h = mix64(h ^ (t + kGolden));
  return h;
}

//! Inverse standard normal CDF (Wichura's PPND16 rational approximations,
//! accurate to ~1e-15 over (0, 1)).
double norm_quantile(double p);

//! Counter-based uniform generator: output k is a pure function of
//! (seed, k), so any draw can be regenerated independently of the others.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  //! Uniform draw strictly inside (0, 1).
  double next_unit() {
    return ((next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_normal() { return norm_quantile(next_unit()); }

  double next_exponential(double rate) {
    return -std::log(next_unit()) / rate;
  }

  //! Poisson draw; Knuth multiplication for small means, additive
  //! splitting (Poisson sums are Poisson) for large ones.
  long next_poisson(double mean) {
    long total = 0;
    while (mean > 30.0) {
      total += poisson_knuth(30.0);
      mean -= 30.0;
    }
    return total + poisson_knuth(mean);
  }

 private:
  long poisson_knuth(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    long k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= next_unit();
    } while (p > limit);
    return k - 1;
  }

  std::uint64_t state_;
};

}  // namespace ctdesign
