#pragma once

#include <array>
#include <string>
#include <vector>

#include "flowrl/simulate.hpp"

namespace flowrl::econ {

struct CapitalCorrelation {
  double base_cost_eur = 0.0;  // cost at the reference size
  double ref_size = 1.0;       // in the unit's size-metric units
  double exponent = 0.6;       // in (0,1]
};

// Prices and correlations are calibration constants; the defaults below are
// documented in docs/config.md and are never used as test oracles.
struct CostModel {
  std::array<double, thermo::kNumComponents> prices_eur_per_kg = {0.5, 0.4, 0.9, 0.0};
  double utility_eur_per_kwh = 0.06;
  double operating_hours = 8000.0;        // h/yr
  double latent_heat_j_per_mol = 32000.0; // converts column vapor proxy to W
  double capital_recovery_factor = 0.15;
  CapitalCorrelation pfr_capex{500000.0, 10.0, 0.6};      // ref 10 m^3
  CapitalCorrelation column_capex{1000000.0, 25.0, 0.6};  // ref 25 mol/s vapor
  CapitalCorrelation heater_capex{100000.0, 100000.0, 0.6};  // ref 100 kW
  double infeasible_penalty_meur = 10.0;
  // Whether the -10 MEUR infeasibility penalty is itself divided by the
  // negative-reward reduction factor. Default keeps the penalty verbatim.
  bool scale_infeasible_penalty = false;
  double negative_reward_reduction = 10.0;

  void validate() const;  // throws std::invalid_argument
};

struct UnitCost {
  int node_id = -1;
  flowsheet::UnitKind kind = flowsheet::UnitKind::Feed;
  double opex_meur_per_yr = 0.0;
  double capex_meur = 0.0;  // installed capital, charged at the recovery factor
};

struct Ledger {
  double revenue_meur_per_yr = 0.0;   // product sink streams
  double feed_cost_meur_per_yr = 0.0;
  std::vector<UnitCost> units;

  double total_opex() const;
  double total_capex() const;
  // revenue - feed - sum(opex + crf * capex), MEUR/yr
  double net_reward(double capital_recovery_factor) const;
};

// Itemized Eq.-2 decomposition. Throws std::logic_error unless Converged.
Ledger flowsheet_economics(const sim::SimulationOutcome& outcome,
                           const CostModel& cost,
                           const thermo::ComponentTable& table);

// Three-branch reward protocol (MEUR/yr):
//   incomplete & converged -> 0
//   not converged          -> -penalty
//   complete & converged   -> Eq.-2 net reward, divided by the reduction
//                             factor when negative
double step_reward(const sim::SimulationOutcome& outcome, bool complete,
                   const CostModel& cost, const thermo::ComponentTable& table);

// The reward handed out for failed simulations (and exhausted step budgets).
double infeasibility_penalty(const CostModel& cost);

}  // namespace flowrl::econ
