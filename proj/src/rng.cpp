#include "flowrl/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace flowrl::nn {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ (0x6A09E667F3BCC909ull + stream * 0x9E3779B97F4A7C15ull);
  return splitmix64(x);
}

Rng::Rng(std::uint64_t seed) : state_(seed) {
  // Warm up so small seeds decorrelate.
  splitmix64(state_);
}

std::uint64_t Rng::raw() { return splitmix64(state_); }

double Rng::uniform() {
  return static_cast<double>(raw() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  cached_normal_ = r * std::sin(kTwoPi * u2);
  has_cached_normal_ = true;
  return r * std::cos(kTwoPi * u2);
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be > 0");
  if (shape < 1.0) {
    // Boost: gamma(a) = gamma(a+1) * U^(1/a)
    const double u = std::max(uniform(), 1e-300);
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(std::max(u, 1e-300)) <
        0.5 * x * x + d * (1.0 - v + std::log(v)))
      return d * v;
  }
}

double Rng::beta(double alpha, double beta_) {
  const double x = gamma(alpha);
  const double y = gamma(beta_);
  const double s = x + y;
  double b = (s > 0.0) ? x / s : 0.5;
  const double eps = 1e-9;
  if (b < eps) b = eps;
  if (b > 1.0 - eps) b = 1.0 - eps;
  return b;
}

std::uint32_t Rng::below(std::uint32_t n) {
  if (n == 0) throw std::invalid_argument("below: n must be > 0");
  return static_cast<std::uint32_t>(
      (static_cast<unsigned __int128>(raw()) * n) >> 64);
}

void Rng::shuffle(std::vector<int>& v) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[below(static_cast<std::uint32_t>(i))]);
}

}  // namespace flowrl::nn
