#pragma once

#include <cstdint>
#include <vector>

namespace flowrl::nn {

// Deterministic random source with explicit samplers, so results do not
// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t raw();
  double uniform();                 // [0, 1), 53-bit resolution
  double uniform(double lo, double hi);
  double normal();                  // Box-Muller, pair-cached
  double gamma(double shape);       // Marsaglia-Tsang, scale 1, shape > 0
  double beta(double alpha, double beta);  // in (0,1), endpoints clamped
  std::uint32_t below(std::uint32_t n);    // uniform in [0, n)
  void shuffle(std::vector<int>& v);       // Fisher-Yates

 private:
  std::uint64_t state_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

// Stable per-stream seed derivation (SplitMix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace flowrl::nn
