#include "flowrl/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace flowrl::sim {

using flowsheet::FlowsheetGraph;
using flowsheet::UnitKind;
using thermo::Stream;

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Converged:      return "Converged";
    case Status::TearDiverged:   return "TearDiverged";
    case Status::UnitInfeasible: return "UnitInfeasible";
    case Status::Malformed:      return "Malformed";
  }
  return "?";
}

namespace {

struct PassResult {
  bool ok = true;
  std::string detail;
  std::map<int, Stream> edge_values;
  std::map<int, Stream> tear_values;  // freshly computed recycle streams
  std::vector<UnitReport> reports;
  std::vector<int> product_edges;
};

// One sequential-modular sweep with the given tear guesses.
PassResult run_pass(const FlowsheetGraph& g, const std::vector<int>& topo,
                    const std::map<int, Stream>& tear_guess,
                    units::Fidelity fidelity, const SimParams& p) {
  PassResult out;
  out.edge_values = tear_guess;

  auto inlet_value = [&](int node_id, int* missing) -> Stream {
    Stream acc;
    acc.molar_flows = {0, 0, 0, 0};
    bool first = true;
    for (int eid : g.inlet_edges(node_id)) {
      auto it = out.edge_values.find(eid);
      if (it == out.edge_values.end()) {
        *missing = eid;
        return acc;
      }
      acc = first ? it->second : units::mix(acc, it->second);
      first = false;
    }
    return acc;
  };

  for (int nid : topo) {
    const flowsheet::UnitNode& node = g.node(nid);
    if (node.kind == UnitKind::Feed) {
      for (int eid : g.outlet_edges(nid)) {
        const auto& e = g.edge(eid);
        if (!e.payload) {
          out.ok = false;
          out.detail = "feed edge has no payload";
          return out;
        }
        out.edge_values[eid] = *e.payload;
      }
      continue;
    }

    int missing = -1;
    Stream in = inlet_value(nid, &missing);
    if (missing >= 0) {
      out.ok = false;
      out.detail = "edge " + std::to_string(missing) + " evaluated before source";
      return out;
    }

    auto outlets = g.outlet_edges(nid);
    switch (node.kind) {
      case UnitKind::PFR: {
        auto r = units::pfr(in, units::pfr_length_from_raw(*node.design_value),
                            fidelity, p.kinetics, p.unit_params);
        if (!r.feasible) {
          out.ok = false;
          out.detail = r.detail;
          return out;
        }
        out.edge_values[outlets[0]] = r.outlets[0];
        out.reports.push_back({nid, node.kind, r.size_metric, r.duty_w});
        break;
      }
      case UnitKind::Column: {
        auto r = units::column(in, units::column_dtf_from_raw(*node.design_value),
                               fidelity, p.components, p.unit_params);
        if (!r.feasible) {
          out.ok = false;
          out.detail = r.detail;
          return out;
        }
        // Smaller edge id is the distillate.
        out.edge_values[outlets[0]] = r.outlets[0];
        out.edge_values[outlets[1]] = r.outlets[1];
        out.reports.push_back({nid, node.kind, r.size_metric, r.duty_w});
        break;
      }
      case UnitKind::Heater: {
        auto r = units::heater(in, units::heater_t_out_from_raw(*node.design_value),
                               p.components);
        if (!r.feasible) {
          out.ok = false;
          out.detail = r.detail;
          return out;
        }
        out.edge_values[outlets[0]] = r.outlets[0];
        out.reports.push_back({nid, node.kind, r.size_metric, r.duty_w});
        break;
      }
      case UnitKind::Splitter: {
        int recycle_eid = -1, purge_eid = -1;
        for (int eid : outlets) {
          if (g.recycle_edges().count(eid))
            recycle_eid = eid;
          else
            purge_eid = eid;
        }
        if (recycle_eid < 0 || purge_eid < 0 || outlets.size() != 2) {
          out.ok = false;
          out.detail = "splitter " + std::to_string(nid) +
                       " lacks a marked recycle outlet";
          return out;
        }
        const double psi = units::recycle_fraction_from_raw(*node.design_value);
        if (!(psi >= units::kRecycleFractionMin &&
              psi <= units::kRecycleFractionMax)) {
          out.ok = false;
          out.detail = "split fraction out of [0.1,0.9]";
          return out;
        }
        auto [recycle, purge] = units::split_stream(in, psi);
        out.tear_values[recycle_eid] = recycle;
        out.edge_values[purge_eid] = purge;
        break;
      }
      case UnitKind::Mixer: {
        out.edge_values[outlets[0]] = in;
        break;
      }
      case UnitKind::ProductSink: {
        auto inlets = g.inlet_edges(nid);
        out.product_edges.insert(out.product_edges.end(), inlets.begin(),
                                 inlets.end());
        break;
      }
      case UnitKind::Feed:
        break;
    }
  }
  return out;
}

bool stream_finite(const Stream& s) {
  if (!std::isfinite(s.temperature)) return false;
  for (double f : s.molar_flows)
    if (!std::isfinite(f)) return false;
  return true;
}

}  // namespace

SimulationOutcome evaluate(const FlowsheetGraph& g, units::Fidelity fidelity,
                           const SimParams& p) {
  SimulationOutcome out;
  out.graph = g;

  if (auto problem = flowsheet::audit(g)) {
    out.status = Status::Malformed;
    out.detail = *problem;
    return out;
  }
  for (const auto& [nid, node] : g.nodes()) {
    const bool needs_design = node.kind == UnitKind::PFR ||
                              node.kind == UnitKind::Column ||
                              node.kind == UnitKind::Heater ||
                              node.kind == UnitKind::Splitter;
    if (needs_design && !node.design_value) {
      out.status = Status::Malformed;
      out.detail = "node " + std::to_string(nid) + " lacks a design value";
      return out;
    }
  }

  // Topological order with tear edges removed. Every cycle must contain a
  // marked recycle edge; otherwise the graph cannot be sequenced.
  std::map<int, int> indegree;
  for (const auto& [nid, node] : g.nodes()) indegree[nid] = 0;
  for (const auto& [eid, e] : g.edges()) {
    if (!e.to_node || g.recycle_edges().count(eid)) continue;
    ++indegree[*e.to_node];
  }
  std::set<int> ready;
  for (const auto& [nid, deg] : indegree)
    if (deg == 0) ready.insert(nid);
  std::vector<int> topo;
  while (!ready.empty()) {
    int nid = *ready.begin();
    ready.erase(ready.begin());
    topo.push_back(nid);
    for (int eid : g.outlet_edges(nid)) {
      const auto& e = g.edge(eid);
      if (!e.to_node || g.recycle_edges().count(eid)) continue;
      if (--indegree[*e.to_node] == 0) ready.insert(*e.to_node);
    }
  }
  if (topo.size() != g.nodes().size()) {
    out.status = Status::Malformed;
    out.detail = "cycle without a recycle tear";
    return out;
  }

  const auto feed_outlets = g.outlet_edges(g.feed_node());
  if (feed_outlets.empty() || !g.edge(feed_outlets[0]).payload) {
    out.status = Status::Malformed;
    out.detail = "feed edge has no payload";
    return out;
  }
  const Stream feed = *g.edge(feed_outlets[0]).payload;

  std::vector<int> tears(g.recycle_edges().begin(), g.recycle_edges().end());
  PassResult final_pass;

  if (tears.empty()) {
    final_pass = run_pass(g, topo, {}, fidelity, p);
    if (!final_pass.ok) {
      out.status = Status::UnitInfeasible;
      out.detail = final_pass.detail;
      return out;
    }
    out.iteration_count = 0;
  } else {
    // Wegstein-accelerated successive substitution on every tear scalar
    // (temperature + four component flows per tear stream).
    Stream start;
    start.temperature = feed.temperature;
    start.molar_flows = {0, 0, 0, 0};
    std::map<int, Stream> guess, prev_guess, prev_value;
    for (int eid : tears) guess[eid] = start;

    bool converged = false;
    int iter = 0;
    for (; iter < p.tear_max_iterations; ++iter) {
      PassResult pass = run_pass(g, topo, guess, fidelity, p);
      if (!pass.ok) {
        out.status = Status::UnitInfeasible;
        out.detail = pass.detail;
        out.iteration_count = iter + 1;
        return out;
      }
      bool finite = true, within = true;
      for (int eid : tears) {
        const Stream& f = pass.tear_values.at(eid);
        const Stream& x = guess.at(eid);
        if (!stream_finite(f)) {
          finite = false;
          break;
        }
        for (int c = 0; c < 4; ++c) {
          const double df = std::abs(f.molar_flows[c] - x.molar_flows[c]);
          const double scale = std::max(std::abs(f.molar_flows[c]),
                                        std::abs(x.molar_flows[c]));
          if (df > p.tear_tolerance * scale + 1e-12) within = false;
        }
        const double dt = std::abs(f.temperature - x.temperature);
        if (dt > p.tear_tolerance * std::max(f.temperature, x.temperature) + 1e-12)
          within = false;
      }
      if (!finite) {
        out.status = Status::TearDiverged;
        out.detail = "non-finite tear stream";
        out.iteration_count = iter + 1;
        return out;
      }
      if (within) {
        final_pass = std::move(pass);
        converged = true;
        ++iter;
        break;
      }

      std::map<int, Stream> next;
      for (int eid : tears) {
        const Stream& f = pass.tear_values.at(eid);
        const Stream& x = guess.at(eid);
        Stream n = f;  // direct substitution by default
        if (iter > 0) {
          const Stream& xp = prev_guess.at(eid);
          const Stream& fp = prev_value.at(eid);
          auto accelerate = [&](double xk, double fk, double xk1, double fk1) {
            const double dx = xk - xk1;
            if (std::abs(dx) < 1e-300) return fk;
            const double s = (fk - fk1) / dx;
            double q = (std::abs(s - 1.0) < 1e-12) ? p.wegstein_q_min
                                                   : s / (s - 1.0);
            q = std::clamp(q, p.wegstein_q_min, p.wegstein_q_max);
            return q * xk + (1.0 - q) * fk;
          };
          for (int c = 0; c < 4; ++c)
            n.molar_flows[c] = std::max(
                0.0, accelerate(x.molar_flows[c], f.molar_flows[c],
                                xp.molar_flows[c], fp.molar_flows[c]));
          n.temperature = std::clamp(
              accelerate(x.temperature, f.temperature, xp.temperature,
                         fp.temperature),
              200.0, 500.0);
        }
        next[eid] = n;
      }
      prev_guess = std::move(guess);
      prev_value = pass.tear_values;
      guess = std::move(next);
    }
    if (!converged) {
      out.status = Status::TearDiverged;
      out.detail = "tear streams did not converge within " +
                   std::to_string(p.tear_max_iterations) + " iterations";
      out.iteration_count = iter;
      return out;
    }
    out.iteration_count = iter;
    // Final pass values include the converged tears.
    for (int eid : tears) final_pass.edge_values[eid] = final_pass.tear_values[eid];
  }

  for (const auto& [eid, s] : final_pass.edge_values) out.graph.set_payload(eid, s);
  std::sort(final_pass.reports.begin(), final_pass.reports.end(),
            [](const UnitReport& a, const UnitReport& b) {
              return a.node_id < b.node_id;
            });
  std::sort(final_pass.product_edges.begin(), final_pass.product_edges.end());
  out.unit_reports = std::move(final_pass.reports);
  out.product_edges = std::move(final_pass.product_edges);
  out.status = Status::Converged;
  return out;
}

double audit_balance(const SimulationOutcome& outcome) {
  if (outcome.status != Status::Converged)
    throw std::logic_error("audit_balance requires a converged outcome");
  const FlowsheetGraph& g = outcome.graph;

  auto invariants = [](const Stream& s) {
    return std::array<double, 3>{
        s.total_flow(),
        s.flow(thermo::ComponentId::HOAc) + s.flow(thermo::ComponentId::MeOAc),
        s.flow(thermo::ComponentId::MeOH) + s.flow(thermo::ComponentId::MeOAc)};
  };

  std::array<double, 3> in{}, out{};
  for (int eid : g.outlet_edges(g.feed_node())) {
    auto v = invariants(*g.edge(eid).payload);
    for (int k = 0; k < 3; ++k) in[k] += v[k];
  }
  for (int eid : g.open_streams()) {
    auto v = invariants(*g.edge(eid).payload);
    for (int k = 0; k < 3; ++k) out[k] += v[k];
  }
  for (int eid : outcome.product_edges) {
    auto v = invariants(*g.edge(eid).payload);
    for (int k = 0; k < 3; ++k) out[k] += v[k];
  }

  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double scale = std::max(std::abs(in[k]), 1e-30);
    worst = std::max(worst, std::abs(in[k] - out[k]) / scale);
  }
  return worst;
}

}  // namespace flowrl::sim
