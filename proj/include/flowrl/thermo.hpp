#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace flowrl::thermo {

inline constexpr std::size_t kNumComponents = 4;
inline constexpr double kGasConstant = 8.31446261815324;  // J/(mol K)
inline constexpr double kStandardPressure = 101325.0;     // Pa

// Index order is fixed; molar-flow arrays use it everywhere.
enum class ComponentId : int { HOAc = 0, MeOH = 1, MeOAc = 2, H2O = 3 };

std::string_view component_name(ComponentId id);

struct Component {
  ComponentId id = ComponentId::HOAc;
  double molar_mass = 0.0;            // kg/mol
  double normal_boiling_point = 0.0;  // K
  double liquid_heat_capacity = 0.0;  // J/(mol K)
  double relative_volatility = 1.0;   // vs heaviest component
  double price = 0.0;                 // EUR/kg
};

// The HOAc/MeOH/MeOAc/H2O quaternary. Property values other than the
// boiling-point ordering are config inputs; defaults() ships calibration
// constants, not literature ground truth.
struct ComponentTable {
  std::array<Component, kNumComponents> components{};

  static ComponentTable defaults();

  const Component& operator[](ComponentId id) const {
    return components[static_cast<std::size_t>(id)];
  }
  Component& operator[](ComponentId id) {
    return components[static_cast<std::size_t>(id)];
  }

  // Enforces: boiling-point order MeOAc < MeOH < H2O < HOAc, volatility
  // strictly decreasing with boiling point, heaviest volatility == 1.
  // Throws std::invalid_argument on violation.
  void validate() const;
};

struct Stream {
  double temperature = 298.15;                      // K
  double pressure = kStandardPressure;              // Pa
  std::array<double, kNumComponents> molar_flows{}; // mol/s

  double total_flow() const {
    return molar_flows[0] + molar_flows[1] + molar_flows[2] + molar_flows[3];
  }
  double flow(ComponentId id) const {
    return molar_flows[static_cast<std::size_t>(id)];
  }
  double& flow(ComponentId id) {
    return molar_flows[static_cast<std::size_t>(id)];
  }
  bool valid() const;  // finite, T > 0, P > 0, flows >= 0
};

// HOAc + MeOH <=> MeOAc + H2O, second order both directions.
// k(T) = pre_exponential * exp(-activation_energy / (R T))
// Keq(T) = exp(keq_a + keq_b / T)
struct KineticsParams {
  double pre_exponential = 2.2;        // m^3/(mol s)
  double activation_energy = 50000.0;  // J/mol
  double keq_a = 0.9224;
  double keq_b = 500.0;                // K

  double rate_constant(double temperature) const;
  double equilibrium_constant(double temperature) const;
};

// Net volumetric rate r = k(T) (c_HOAc c_MeOH - c_MeOAc c_H2O / Keq(T)),
// mol/(m^3 s). Positive means net forward reaction.
// Throws std::invalid_argument on non-finite or negative concentrations,
// or non-positive temperature.
double reaction_rate(const std::array<double, kNumComponents>& concentrations,
                     double temperature, const KineticsParams& params);

// Molar extent xi* (mol/s) such that the outlet
//   (F_MeOAc+xi)(F_H2O+xi) = Keq(T) (F_HOAc-xi)(F_MeOH-xi)
// with all outlet flows >= 0. Unique in the admissible interval.
double equilibrium_extent(const Stream& feed, double temperature,
                          const KineticsParams& params);

// Components sorted most to least volatile (ascending boiling point).
std::array<ComponentId, kNumComponents> bubble_point_order(
    const ComponentTable& table);

}  // namespace flowrl::thermo
