#include "flowrl/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace flowrl::thermo {

std::string_view component_name(ComponentId id) {
  switch (id) {
    case ComponentId::HOAc:  return "HOAc";
    case ComponentId::MeOH:  return "MeOH";
    case ComponentId::MeOAc: return "MeOAc";
    case ComponentId::H2O:   return "H2O";
  }
  return "?";
}

ComponentTable ComponentTable::defaults() {
  ComponentTable t;
  // Boiling points are literature values; volatilities, heat capacities and
  // prices are calibration constants (see docs/config.md).
  t[ComponentId::HOAc]  = {ComponentId::HOAc, 0.06005, 391.05, 123.1, 1.0, 0.5};
  t[ComponentId::MeOH]  = {ComponentId::MeOH, 0.03204, 337.85, 81.1, 3.5, 0.4};
  t[ComponentId::MeOAc] = {ComponentId::MeOAc, 0.07408, 330.05, 140.2, 5.0, 0.9};
  t[ComponentId::H2O]   = {ComponentId::H2O, 0.01802, 373.15, 75.3, 1.8, 0.0};
  return t;
}

void ComponentTable::validate() const {
  for (std::size_t i = 0; i < kNumComponents; ++i) {
    const Component& c = components[i];
    if (static_cast<std::size_t>(c.id) != i)
      throw std::invalid_argument("component table: slot " + std::to_string(i) +
                                  " holds wrong id");
    if (!(c.molar_mass > 0.0) || !std::isfinite(c.molar_mass))
      throw std::invalid_argument("component table: non-positive molar mass");
    if (!(c.normal_boiling_point > 0.0))
      throw std::invalid_argument("component table: non-positive boiling point");
    if (!(c.relative_volatility > 0.0))
      throw std::invalid_argument("component table: non-positive volatility");
    if (!std::isfinite(c.price))
      throw std::invalid_argument("component table: non-finite price");
  }
  const auto bp = [&](ComponentId id) {
    return (*this)[id].normal_boiling_point;
  };
  if (!(bp(ComponentId::MeOAc) < bp(ComponentId::MeOH) &&
        bp(ComponentId::MeOH) < bp(ComponentId::H2O) &&
        bp(ComponentId::H2O) < bp(ComponentId::HOAc)))
    throw std::invalid_argument(
        "component table: boiling points must order MeOAc < MeOH < H2O < HOAc");

  auto order = bubble_point_order(*this);
  double prev = std::numeric_limits<double>::infinity();
  for (ComponentId id : order) {
    double vol = (*this)[id].relative_volatility;
    if (!(vol < prev))
      throw std::invalid_argument(
          "component table: relative volatility must strictly decrease with "
          "boiling point");
    prev = vol;
  }
  if ((*this)[order.back()].relative_volatility != 1.0)
    throw std::invalid_argument(
        "component table: heaviest component must have volatility 1");
}

bool Stream::valid() const {
  if (!std::isfinite(temperature) || temperature <= 0.0) return false;
  if (!std::isfinite(pressure) || pressure <= 0.0) return false;
  for (double f : molar_flows)
    if (!std::isfinite(f) || f < 0.0) return false;
  return true;
}

double KineticsParams::rate_constant(double temperature) const {
  return pre_exponential *
         std::exp(-activation_energy / (kGasConstant * temperature));
}

double KineticsParams::equilibrium_constant(double temperature) const {
  return std::exp(keq_a + keq_b / temperature);
}

double reaction_rate(const std::array<double, kNumComponents>& concentrations,
                     double temperature, const KineticsParams& params) {
  for (double c : concentrations) {
    if (!std::isfinite(c))
      throw std::invalid_argument("reaction_rate: non-finite concentration");
    if (c < 0.0)
      throw std::invalid_argument("reaction_rate: negative concentration");
  }
  if (!std::isfinite(temperature) || temperature <= 0.0)
    throw std::invalid_argument("reaction_rate: temperature must be positive");

  const double k = params.rate_constant(temperature);
  const double keq = params.equilibrium_constant(temperature);
  const double forward = concentrations[static_cast<int>(ComponentId::HOAc)] *
                         concentrations[static_cast<int>(ComponentId::MeOH)];
  const double reverse = concentrations[static_cast<int>(ComponentId::MeOAc)] *
                         concentrations[static_cast<int>(ComponentId::H2O)];
  return k * (forward - reverse / keq);
}

namespace {

// Residual g(xi) = (C+xi)(D+xi) - K (A-xi)(B-xi); strictly increasing on the
// admissible interval, with g(lo) <= 0 <= g(hi).
double extent_residual(double xi, double a, double b, double c, double d,
                       double keq) {
  return (c + xi) * (d + xi) - keq * (a - xi) * (b - xi);
}

}  // namespace

double equilibrium_extent(const Stream& feed, double temperature,
                          const KineticsParams& params) {
  const double a = feed.flow(ComponentId::HOAc);
  const double b = feed.flow(ComponentId::MeOH);
  const double c = feed.flow(ComponentId::MeOAc);
  const double d = feed.flow(ComponentId::H2O);
  const double keq = params.equilibrium_constant(temperature);

  const double lo = -std::min(c, d);
  const double hi = std::min(a, b);
  if (lo == 0.0 && hi == 0.0) return 0.0;

  // (1-K) xi^2 + (C+D+K(A+B)) xi + (CD - KAB) = 0
  const double qa = 1.0 - keq;
  const double qb = c + d + keq * (a + b);
  const double qc = c * d - keq * a * b;

  double xi;
  if (std::abs(qa) < 1e-14 * std::max(1.0, qb)) {
    xi = (qb > 0.0) ? -qc / qb : 0.0;
  } else {
    const double disc = std::max(0.0, qb * qb - 4.0 * qa * qc);
    const double sq = std::sqrt(disc);
    // Stable split: q has the sign that avoids cancellation.
    const double q = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
    const double r1 = q / qa;
    const double r2 = (q != 0.0) ? qc / q : r1;
    const double pad = 1e-9 * (1.0 + std::abs(lo) + std::abs(hi));
    const bool r1_in = (r1 >= lo - pad && r1 <= hi + pad);
    const bool r2_in = (r2 >= lo - pad && r2 <= hi + pad);
    if (r1_in && r2_in)
      xi = (std::abs(r1) <= std::abs(r2)) ? r1 : r2;
    else if (r1_in)
      xi = r1;
    else if (r2_in)
      xi = r2;
    else
      xi = 0.5 * (lo + hi);  // fall through to Newton polish
  }
  xi = std::clamp(xi, lo, hi);

  // Newton polish; derivative is positive on the interval.
  for (int it = 0; it < 3; ++it) {
    const double g = extent_residual(xi, a, b, c, d, keq);
    const double gp = (c + xi) + (d + xi) + keq * ((a - xi) + (b - xi));
    if (gp <= 0.0) break;
    xi = std::clamp(xi - g / gp, lo, hi);
  }
  return xi;
}

std::array<ComponentId, kNumComponents> bubble_point_order(
    const ComponentTable& table) {
  std::array<ComponentId, kNumComponents> order = {
      ComponentId::HOAc, ComponentId::MeOH, ComponentId::MeOAc,
      ComponentId::H2O};
  std::sort(order.begin(), order.end(), [&](ComponentId x, ComponentId y) {
    return table[x].normal_boiling_point < table[y].normal_boiling_point;
  });
  return order;
}

}  // namespace flowrl::thermo
