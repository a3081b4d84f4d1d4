#pragma once

#include "flowrl/config.hpp"
#include "flowrl/env.hpp"

namespace flowrl::testing {

inline thermo::Stream default_feed() {
  thermo::Stream s;
  s.temperature = 298.15;
  s.molar_flows = {5.0, 5.0, 0.0, 0.0};
  return s;
}

// Raw level-3 values that scale to the published design values.
inline double raw_for_pfr_length(double l) { return (l - 3.0) / 7.0; }
inline double raw_for_dtf(double d) { return (d - 0.4) / 0.2; }
inline double raw_for_heater_t(double t) { return (t - 278.15) / (330.05 - 278.15); }
inline double raw_for_recycle(double psi) { return (psi - 0.1) / 0.8; }

// The best-flowsheet regression topology: three reactors in series, a first
// column whose distillate is heated into product P1, a second column making
// product P2 overhead, and 90% of its bottoms recycled to the feed (purge
// declared as P3). Design values: L = 9.42 / 9.25 / 8.38 m, D/F = 0.58 / 0.4,
// heater 315 K, recycle ratio 0.9.
inline flowsheet::FlowsheetGraph best_flowsheet_fixture(
    const thermo::Stream& feed = default_feed()) {
  using flowsheet::UnitKind;
  auto g = flowsheet::FlowsheetGraph::fresh(feed);

  auto r1 = g.attach_unit(g.open_streams()[0], UnitKind::PFR,
                          raw_for_pfr_length(9.42));
  auto r2 = g.attach_unit(r1.new_open_edges[0], UnitKind::PFR,
                          raw_for_pfr_length(9.25));
  auto r3 = g.attach_unit(r2.new_open_edges[0], UnitKind::PFR,
                          raw_for_pfr_length(8.38));
  auto c1 = g.attach_unit(r3.new_open_edges[0], UnitKind::Column,
                          raw_for_dtf(0.58));
  auto hex1 = g.attach_unit(c1.new_open_edges[0], UnitKind::Heater,
                            raw_for_heater_t(315.0));
  g.attach_unit(hex1.new_open_edges[0], UnitKind::ProductSink, std::nullopt);  // P1
  auto c2 = g.attach_unit(c1.new_open_edges[1], UnitKind::Column,
                          raw_for_dtf(0.4));
  g.attach_unit(c2.new_open_edges[0], UnitKind::ProductSink, std::nullopt);  // P2
  auto rec = g.attach_recycle(c2.new_open_edges[1], raw_for_recycle(0.9));
  g.attach_unit(rec.purge_edge, UnitKind::ProductSink, std::nullopt);  // P3
  return g;
}

inline rlenv::EnvConfig default_env_config(
    units::Fidelity fidelity = units::Fidelity::Shortcut) {
  config::FullConfig cfg = config::defaults();
  cfg.env.fidelity = fidelity;
  return cfg.env;
}

}  // namespace flowrl::testing
