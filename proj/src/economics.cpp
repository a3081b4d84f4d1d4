#include "flowrl/economics.hpp"

#include <cmath>
#include <stdexcept>

namespace flowrl::econ {

using flowsheet::UnitKind;
using thermo::Stream;

void CostModel::validate() const {
  for (double p : prices_eur_per_kg)
    if (!std::isfinite(p) || p < 0.0)
      throw std::invalid_argument("cost model: prices must be >= 0");
  if (!(operating_hours > 0.0))
    throw std::invalid_argument("cost model: operating hours must be positive");
  if (!(utility_eur_per_kwh >= 0.0))
    throw std::invalid_argument("cost model: utility price must be >= 0");
  for (const CapitalCorrelation* c : {&pfr_capex, &column_capex, &heater_capex}) {
    if (!(c->exponent > 0.0 && c->exponent <= 1.0))
      throw std::invalid_argument("cost model: capex exponent must be in (0,1]");
    if (!(c->ref_size > 0.0))
      throw std::invalid_argument("cost model: capex reference size must be > 0");
    if (!(c->base_cost_eur >= 0.0))
      throw std::invalid_argument("cost model: capex base cost must be >= 0");
  }
  if (!(capital_recovery_factor >= 0.0))
    throw std::invalid_argument("cost model: capital recovery factor must be >= 0");
  if (!(negative_reward_reduction > 0.0))
    throw std::invalid_argument("cost model: reduction factor must be positive");
}

double Ledger::total_opex() const {
  double sum = 0.0;
  for (const auto& u : units) sum += u.opex_meur_per_yr;
  return sum;
}

double Ledger::total_capex() const {
  double sum = 0.0;
  for (const auto& u : units) sum += u.capex_meur;
  return sum;
}

double Ledger::net_reward(double crf) const {
  double cost = 0.0;
  for (const auto& u : units) cost += u.opex_meur_per_yr + crf * u.capex_meur;
  return revenue_meur_per_yr - feed_cost_meur_per_yr - cost;
}

namespace {

// EUR/s for a stream at the component prices.
double stream_value_eur_per_s(const Stream& s, const CostModel& cost,
                              const thermo::ComponentTable& table) {
  double v = 0.0;
  for (int i = 0; i < 4; ++i)
    v += s.molar_flows[i] * table.components[i].molar_mass *
         cost.prices_eur_per_kg[i];
  return v;
}

double capex_eur(const CapitalCorrelation& c, double size) {
  if (size <= 0.0) return 0.0;
  return c.base_cost_eur * std::pow(size / c.ref_size, c.exponent);
}

}  // namespace

Ledger flowsheet_economics(const sim::SimulationOutcome& outcome,
                           const CostModel& cost,
                           const thermo::ComponentTable& table) {
  if (outcome.status != sim::Status::Converged)
    throw std::logic_error("flowsheet_economics requires a converged outcome");

  const auto& g = outcome.graph;
  const double seconds_per_year = 3600.0 * cost.operating_hours;
  const double to_meur = 1e-6;

  Ledger ledger;
  for (int eid : outcome.product_edges)
    ledger.revenue_meur_per_yr += stream_value_eur_per_s(*g.edge(eid).payload,
                                                         cost, table) *
                                  seconds_per_year * to_meur;
  for (int eid : g.outlet_edges(g.feed_node()))
    ledger.feed_cost_meur_per_yr += stream_value_eur_per_s(*g.edge(eid).payload,
                                                           cost, table) *
                                    seconds_per_year * to_meur;

  for (const auto& rep : outcome.unit_reports) {
    UnitCost u;
    u.node_id = rep.node_id;
    u.kind = rep.kind;
    switch (rep.kind) {
      case UnitKind::PFR:
        u.capex_meur = capex_eur(cost.pfr_capex, rep.size_metric) * to_meur;
        break;
      case UnitKind::Column: {
        // Condenser + reboiler duty ~ 2x the vapor proxy times the latent heat.
        const double duty_w = 2.0 * rep.size_metric * cost.latent_heat_j_per_mol;
        u.opex_meur_per_yr = duty_w / 1000.0 * cost.operating_hours *
                             cost.utility_eur_per_kwh * to_meur;
        u.capex_meur = capex_eur(cost.column_capex, rep.size_metric) * to_meur;
        break;
      }
      case UnitKind::Heater:
        u.opex_meur_per_yr = std::abs(rep.duty_w) / 1000.0 *
                             cost.operating_hours * cost.utility_eur_per_kwh *
                             to_meur;
        u.capex_meur = capex_eur(cost.heater_capex, rep.size_metric) * to_meur;
        break;
      default:
        break;  // splitters, mixers and sinks are free
    }
    ledger.units.push_back(u);
  }
  return ledger;
}

double infeasibility_penalty(const CostModel& cost) {
  const double penalty = -cost.infeasible_penalty_meur;
  return cost.scale_infeasible_penalty
             ? penalty / cost.negative_reward_reduction
             : penalty;
}

double step_reward(const sim::SimulationOutcome& outcome, bool complete,
                   const CostModel& cost, const thermo::ComponentTable& table) {
  if (outcome.status != sim::Status::Converged)
    return infeasibility_penalty(cost);
  if (!complete) return 0.0;
  const Ledger ledger = flowsheet_economics(outcome, cost, table);
  const double r = ledger.net_reward(cost.capital_recovery_factor);
  return r < 0.0 ? r / cost.negative_reward_reduction : r;
}

}  // namespace flowrl::econ
