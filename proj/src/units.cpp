#include "flowrl/units.hpp"

#include <algorithm>
#include <cmath>

namespace flowrl::units {

using thermo::ComponentId;
using thermo::Stream;

std::string_view to_string(Fidelity f) {
  return f == Fidelity::Shortcut ? "shortcut" : "rigorous";
}

double pfr_length_from_raw(double raw) {
  return kPfrLengthMin + (kPfrLengthMax - kPfrLengthMin) * raw;
}
double column_dtf_from_raw(double raw) {
  return kColumnDtfMin + (kColumnDtfMax - kColumnDtfMin) * raw;
}
double heater_t_out_from_raw(double raw) {
  return kHeaterTOutMin + (kHeaterTOutMax - kHeaterTOutMin) * raw;
}
double recycle_fraction_from_raw(double raw) {
  return kRecycleFractionMin + (kRecycleFractionMax - kRecycleFractionMin) * raw;
}

namespace {

UnitResult infeasible(std::string why) {
  UnitResult r;
  r.feasible = false;
  r.detail = std::move(why);
  return r;
}

// Apply a signed extent to the inlet flows: HOAc/MeOH consumed, MeOAc/H2O
// produced. Total flow is conserved exactly.
Stream apply_extent(const Stream& in, double xi) {
  Stream out = in;
  out.flow(ComponentId::HOAc) = std::max(0.0, in.flow(ComponentId::HOAc) - xi);
  out.flow(ComponentId::MeOH) = std::max(0.0, in.flow(ComponentId::MeOH) - xi);
  out.flow(ComponentId::MeOAc) = std::max(0.0, in.flow(ComponentId::MeOAc) + xi);
  out.flow(ComponentId::H2O) = std::max(0.0, in.flow(ComponentId::H2O) + xi);
  return out;
}

double admissible_extent_lo(const Stream& s) {
  return -std::min(s.flow(ComponentId::MeOAc), s.flow(ComponentId::H2O));
}
double admissible_extent_hi(const Stream& s) {
  return std::min(s.flow(ComponentId::HOAc), s.flow(ComponentId::MeOH));
}

}  // namespace

UnitResult pfr(const Stream& in, double length_m, Fidelity fidelity,
               const thermo::KineticsParams& kinetics, const UnitParams& params) {
  if (!(length_m >= kPfrLengthMin && length_m <= kPfrLengthMax))
    return infeasible("pfr length out of [3,10] m");
  const double n_in = in.total_flow();
  if (!(n_in > 0.0)) return infeasible("pfr inlet has no flow");

  const double area = n_in / 10.0;           // m^2
  const double volume = area * length_m;     // m^3
  const double t = in.temperature;

  UnitResult res;
  res.size_metric = volume;

  if (fidelity == Fidelity::Shortcut) {
    const double xi_star = thermo::equilibrium_extent(in, t, kinetics);
    const double approach = 1.0 - std::exp(-length_m / params.pfr_shortcut_l_half);
    res.outlets.push_back(apply_extent(in, xi_star * approach));
    return res;
  }

  // Rigorous: RK4 on the scalar extent xi(V), dxi/dV = r(F0 + nu*xi, T).
  // Volumetric flow is constant (mole-neutral reaction, constant density).
  const double vdot = n_in / params.molar_density;  // m^3/s
  const double lo = admissible_extent_lo(in);
  const double hi = admissible_extent_hi(in);
  const int steps = std::max(1, params.pfr_rk_steps);
  const double h = volume / steps;

  auto rate_at = [&](double xi) {
    std::array<double, 4> conc;
    const Stream s = apply_extent(in, xi);
    for (int i = 0; i < 4; ++i) conc[i] = s.molar_flows[i] / vdot;
    return thermo::reaction_rate(conc, t, kinetics);
  };

  double xi = 0.0;
  for (int s = 0; s < steps; ++s) {
    const double k1 = rate_at(xi);
    const double k2 = rate_at(xi + 0.5 * h * k1);
    const double k3 = rate_at(xi + 0.5 * h * k2);
    const double k4 = rate_at(xi + h * k3);
    xi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(xi)) return infeasible("pfr integration diverged");
    xi = std::clamp(xi, lo, hi);
  }
  res.outlets.push_back(apply_extent(in, xi));
  return res;
}

double kremser_recovery(double factor, int stages) {
  // r(S) = (S^(N+1) - S) / (S^(N+1) - 1) = S expm1(N ln S) / expm1((N+1) ln S),
  // continuous through S = 1 where it equals N/(N+1).
  if (factor <= 0.0) return 0.0;
  const double ls = std::log(factor);
  const double n = static_cast<double>(stages);
  if (std::abs(ls) < 1e-300) return n / (n + 1.0);
  const double num = std::expm1(n * ls);
  const double den = std::expm1((n + 1.0) * ls);
  if (!std::isfinite(num) || !std::isfinite(den)) {
    // Overflow only happens for large S where the ratio is ~ S^-1 away from 1.
    return 1.0 - (std::exp(-ls) - std::exp(-(n + 1.0) * ls));
  }
  return factor * num / den;
}

namespace {

// Distribute the distillate subject to the MeOAc purity cap while keeping the
// distillate total exactly D: MeOAc above the cap is returned to the bottoms
// and replaced by the next most volatile components with material left. The
// cap relaxes when the other components cannot cover the difference.
void apply_azeotrope_cap(const Stream& feed,
                         std::array<double, 4>& distillate, double d_total,
                         const thermo::ComponentTable& table, double cap) {
  const int m = static_cast<int>(ComponentId::MeOAc);
  double others_available = 0.0;
  for (int i = 0; i < 4; ++i)
    if (i != m) others_available += feed.molar_flows[i] - distillate[i];
  const double allowed =
      std::max(cap * d_total, d_total - (others_available +
                                         [&] {
                                           double cur = 0.0;
                                           for (int i = 0; i < 4; ++i)
                                             if (i != m) cur += distillate[i];
                                           return cur;
                                         }()));
  if (distillate[m] <= allowed) return;
  double excess = distillate[m] - allowed;
  distillate[m] = allowed;
  for (ComponentId id : thermo::bubble_point_order(table)) {
    int i = static_cast<int>(id);
    if (i == m || excess <= 0.0) continue;
    const double room = feed.molar_flows[i] - distillate[i];
    const double take = std::min(room, excess);
    distillate[i] += take;
    excess -= take;
  }
  // Any remainder means the cap was binding against an all-MeOAc feed; put it
  // back so the distillate total stays exact.
  distillate[m] += std::max(0.0, excess);
}

}  // namespace

UnitResult column(const Stream& in, double dtf, Fidelity fidelity,
                  const thermo::ComponentTable& table, const UnitParams& params) {
  if (!(dtf >= kColumnDtfMin && dtf <= kColumnDtfMax))
    return infeasible("column D/F out of [0.4,0.6]");
  const double f_total = in.total_flow();
  if (!(f_total > 0.0)) return infeasible("column inlet has no flow");

  const double d_total = dtf * f_total;
  std::array<double, 4> dist{};

  if (fidelity == Fidelity::Shortcut) {
    double remaining = d_total;
    for (ComponentId id : thermo::bubble_point_order(table)) {
      int i = static_cast<int>(id);
      const double take = std::min(in.molar_flows[i], remaining);
      dist[i] = take;
      remaining -= take;
      if (remaining <= 0.0) break;
    }
  } else {
    // Kremser recoveries with S_i = alpha_i * (R/(R+1)) * theta; theta bisected
    // so that sum r_i F_i = D.
    const double rr = params.column_reflux / (params.column_reflux + 1.0);
    auto dist_total = [&](double theta) {
      double sum = 0.0;
      for (int i = 0; i < 4; ++i) {
        const double s = table.components[i].relative_volatility * rr * theta;
        sum += kremser_recovery(s, params.column_stages) * in.molar_flows[i];
      }
      return sum;
    };
    double lo = 1e-9, hi = 1e9;
    // d(lo) ~ 0, d(hi) ~ F > D; bisect on the monotone residual.
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (dist_total(mid) < d_total)
        lo = mid;
      else
        hi = mid;
      if (std::abs(dist_total(0.5 * (lo + hi)) - d_total) < 1e-12 * f_total)
        break;
    }
    const double theta = 0.5 * (lo + hi);
    double partial = 0.0;
    int heaviest = static_cast<int>(thermo::bubble_point_order(table).back());
    for (int i = 0; i < 4; ++i) {
      if (i == heaviest) continue;
      const double s = table.components[i].relative_volatility * rr * theta;
      dist[i] = std::min(in.molar_flows[i],
                         kremser_recovery(s, params.column_stages) * in.molar_flows[i]);
      partial += dist[i];
    }
    // Assign the heaviest component by difference so the total is exact.
    dist[heaviest] =
        std::clamp(d_total - partial, 0.0, in.molar_flows[heaviest]);
    // If the heaviest cannot absorb the residual (rounding at the brackets),
    // spread it over the others.
    double short_by = d_total - (partial + dist[heaviest]);
    for (ComponentId id : thermo::bubble_point_order(table)) {
      int i = static_cast<int>(id);
      if (short_by <= 0.0) break;
      const double room = in.molar_flows[i] - dist[i];
      const double take = std::min(room, short_by);
      dist[i] += take;
      short_by -= take;
    }
  }

  apply_azeotrope_cap(in, dist, d_total, table, params.azeotrope_meoac_cap);

  Stream distillate = in, bottoms = in;
  for (int i = 0; i < 4; ++i) {
    dist[i] = std::clamp(dist[i], 0.0, in.molar_flows[i]);
    distillate.molar_flows[i] = dist[i];
    bottoms.molar_flows[i] = in.molar_flows[i] - dist[i];
  }

  UnitResult res;
  res.outlets.push_back(distillate);
  res.outlets.push_back(bottoms);
  res.size_metric = d_total * (params.column_reflux + 1.0);  // vapor proxy mol/s
  res.duty_w = res.size_metric;  // scaled by latent heat in economics
  return res;
}

UnitResult heater(const Stream& in, double t_out_k,
                  const thermo::ComponentTable& table) {
  if (!(t_out_k >= kHeaterTOutMin && t_out_k <= kHeaterTOutMax))
    return infeasible("heater outlet temperature out of [278.15,330.05] K");
  UnitResult res;
  Stream out = in;
  out.temperature = t_out_k;
  double q = 0.0;
  for (int i = 0; i < 4; ++i)
    q += in.molar_flows[i] * table.components[i].liquid_heat_capacity *
         (t_out_k - in.temperature);
  res.outlets.push_back(out);
  res.duty_w = q;
  res.size_metric = std::abs(q);
  return res;
}

std::pair<Stream, Stream> split_stream(const Stream& in, double psi) {
  if (!(psi >= kRecycleFractionMin && psi <= kRecycleFractionMax))
    throw std::invalid_argument("split fraction out of [0.1,0.9]");
  Stream recycle = in, purge = in;
  for (int i = 0; i < 4; ++i) {
    recycle.molar_flows[i] = psi * in.molar_flows[i];
    purge.molar_flows[i] = in.molar_flows[i] - recycle.molar_flows[i];
  }
  return {recycle, purge};
}

Stream mix(const Stream& a, const Stream& b) {
  Stream out = a;
  const double ta = a.total_flow(), tb = b.total_flow();
  for (int i = 0; i < 4; ++i)
    out.molar_flows[i] = a.molar_flows[i] + b.molar_flows[i];
  if (ta + tb > 0.0)
    out.temperature = (ta * a.temperature + tb * b.temperature) / (ta + tb);
  return out;
}

}  // namespace flowrl::units
