#pragma once

#include <string>
#include <utility>
#include <vector>

#include "flowrl/thermo.hpp"

namespace flowrl::units {

enum class Fidelity { Shortcut, Rigorous };

std::string_view to_string(Fidelity f);

// Design-variable bounds (scaled units).
inline constexpr double kPfrLengthMin = 3.0;     // m
inline constexpr double kPfrLengthMax = 10.0;    // m
inline constexpr double kColumnDtfMin = 0.4;
inline constexpr double kColumnDtfMax = 0.6;
inline constexpr double kHeaterTOutMin = 278.15;  // K
inline constexpr double kHeaterTOutMax = 330.05;  // K, MeOAc boiling point
inline constexpr double kRecycleFractionMin = 0.1;
inline constexpr double kRecycleFractionMax = 0.9;

// raw in [0,1] -> physical design value
double pfr_length_from_raw(double raw);
double column_dtf_from_raw(double raw);
double heater_t_out_from_raw(double raw);
double recycle_fraction_from_raw(double raw);

struct UnitParams {
  double molar_density = 20000.0;      // mol/m^3, closes concentration = F/vdot
  int pfr_rk_steps = 200;
  double pfr_shortcut_l_half = 3.0;    // m, approach-to-equilibrium length scale
  int column_stages = 35;
  double column_reflux = 1.5;
  double azeotrope_meoac_cap = 0.95;   // max MeOAc mole fraction in a distillate
};

struct UnitResult {
  std::vector<thermo::Stream> outlets;  // 1, or 2 for column (distillate, bottoms)
  double size_metric = 0.0;  // PFR: volume m^3; column: vapor proxy mol/s; heater: |Q| W
  double duty_w = 0.0;       // heater: signed duty; column: condenser+reboiler proxy
  bool feasible = true;
  std::string detail;        // infeasibility reason
};

// Isothermal plug flow reactor. Cross-section A = N_in/10 m^2, volume = A*L.
// Rigorous: fixed-step RK4 on the molar reaction extent along the volume.
// Shortcut: extent = equilibrium extent * (1 - exp(-L / l_half)).
UnitResult pfr(const thermo::Stream& in, double length_m, Fidelity fidelity,
               const thermo::KineticsParams& kinetics, const UnitParams& params);

// Distillation column with fixed stages and reflux. D = dtf * F.
// Shortcut: spill components into the distillate in volatility order.
// Rigorous: Kremser group-method recoveries, bisected so the distillate total
// is exactly D. Both apply the MeOAc purity cap (see docs).
UnitResult column(const thermo::Stream& in, double dtf, Fidelity fidelity,
                  const thermo::ComponentTable& table, const UnitParams& params);

// Outlet at t_out_k, duty Q = sum_i F_i Cp_i (T_out - T_in) (signed W).
UnitResult heater(const thermo::Stream& in, double t_out_k,
                  const thermo::ComponentTable& table);

// (recycle, purge) = (psi * in, (1-psi) * in), both at inlet temperature.
std::pair<thermo::Stream, thermo::Stream> split_stream(const thermo::Stream& in,
                                                       double psi);

// Component-wise flow sum; temperature is the flow-weighted average.
thermo::Stream mix(const thermo::Stream& a, const thermo::Stream& b);

// Kremser recovery fraction to the distillate for one component, given its
// separation factor and the stage count. Monotone increasing in the factor.
double kremser_recovery(double factor, int stages);

}  // namespace flowrl::units
