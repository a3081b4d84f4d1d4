#pragma once

#include <string>
#include <vector>

#include "flowrl/flowsheet.hpp"
#include "flowrl/units.hpp"

namespace flowrl::sim {

enum class Status { Converged, TearDiverged, UnitInfeasible, Malformed };

std::string_view to_string(Status s);

struct UnitReport {
  int node_id = -1;
  flowsheet::UnitKind kind = flowsheet::UnitKind::Feed;
  double size_metric = 0.0;
  double duty_w = 0.0;
};

struct SimulationOutcome {
  Status status = Status::Malformed;
  flowsheet::FlowsheetGraph graph;   // payloads populated when Converged
  int iteration_count = 0;           // tear iterations (0 when acyclic)
  std::vector<UnitReport> unit_reports;  // ascending node id
  std::vector<int> product_edges;        // inlets of ProductSink nodes
  std::string detail;                    // failure description
};

struct SimParams {
  thermo::ComponentTable components = thermo::ComponentTable::defaults();
  thermo::KineticsParams kinetics{};
  units::UnitParams unit_params{};
  double tear_tolerance = 1e-6;   // relative, per component flow
  int tear_max_iterations = 200;
  double wegstein_q_min = -5.0;   // acceleration factor bounds
  double wegstein_q_max = 0.0;
};

// Sequential-modular evaluation. Open streams are treated as terminal; every
// recycle edge is a tear stream solved by successive substitution with
// bounded Wegstein acceleration. Never throws: failures land in status.
SimulationOutcome evaluate(const flowsheet::FlowsheetGraph& g,
                           units::Fidelity fidelity, const SimParams& params);

// Max relative imbalance between the feed and all terminal streams over the
// reaction invariants (total moles, F_HOAc+F_MeOAc, F_MeOH+F_MeOAc).
// Throws std::logic_error unless outcome.status == Converged.
double audit_balance(const SimulationOutcome& outcome);

}  // namespace flowrl::sim
