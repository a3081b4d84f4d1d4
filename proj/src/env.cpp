#include "flowrl/env.hpp"

#include <cmath>
#include <stdexcept>

namespace flowrl::rlenv {

using flowsheet::FlowsheetGraph;
using flowsheet::UnitKind;

std::string_view to_string(ActionKind a) {
  switch (a) {
    case ActionKind::AddPFR:         return "AddPFR";
    case ActionKind::AddColumn:      return "AddColumn";
    case ActionKind::AddHeater:      return "AddHeater";
    case ActionKind::AddRecycle:     return "AddRecycle";
    case ActionKind::DeclareProduct: return "DeclareProduct";
  }
  return "?";
}

flowsheet::FeatureScale EnvConfig::feature_scale() const {
  flowsheet::FeatureScale s;
  s.feed_total = std::max(feed.total_flow(), 1e-12);
  return s;
}

void EnvConfig::validate() const {
  if (!feed.valid())
    throw std::invalid_argument("env config: invalid feed stream");
  const double reactants = feed.flow(thermo::ComponentId::HOAc) +
                           feed.flow(thermo::ComponentId::MeOH);
  if (!(reactants > 0.0))
    throw std::invalid_argument("env config: feed needs at least one reactant");
  if (max_steps < 1)
    throw std::invalid_argument("env config: max_steps must be >= 1");
  sim.components.validate();
  cost.validate();
}

bool ActionMask::allows(const HierarchicalAction& a) const {
  if (a.level1 < 0 || a.level1 >= static_cast<int>(level1.size())) return false;
  if (!level1[a.level1]) return false;
  const int k = static_cast<int>(a.level2);
  if (k < 0 || k >= kActionKindCount) return false;
  if (!level2[a.level1][k]) return false;
  if (a.level2 != ActionKind::DeclareProduct &&
      (!std::isfinite(a.level3) || a.level3 < 0.0 || a.level3 > 1.0))
    return false;
  return true;
}

ActionMask action_mask(const FlowsheetGraph& g) {
  ActionMask m;
  const auto& open = g.open_streams();
  m.level1.assign(open.size(), 1);
  m.level2.resize(open.size());
  for (std::size_t i = 0; i < open.size(); ++i) {
    m.level2[i] = {1, 1, 1, 1, 1};
    if (g.is_untouched_feed_edge(open[i]))
      m.level2[i][static_cast<int>(ActionKind::AddRecycle)] = 0;
  }
  return m;
}

Environment::Environment(EnvConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
}

const FlowsheetGraph& Environment::reset() {
  state_ = FlowsheetGraph::fresh(cfg_.feed);
  steps_ = 0;
  terminal_ = false;
  return state_;
}

StepResult Environment::step(const HierarchicalAction& action) {
  if (terminal_)
    throw std::invalid_argument("step: episode is terminal; call reset()");
  const ActionMask mask = action_mask(state_);
  if (!mask.allows(action))
    throw std::invalid_argument("step: action violates the action mask");

  const int edge_id = state_.open_streams()[action.level1];
  FlowsheetGraph next = state_;
  switch (action.level2) {
    case ActionKind::AddPFR:
      next.attach_unit(edge_id, UnitKind::PFR, action.level3);
      break;
    case ActionKind::AddColumn:
      next.attach_unit(edge_id, UnitKind::Column, action.level3);
      break;
    case ActionKind::AddHeater:
      next.attach_unit(edge_id, UnitKind::Heater, action.level3);
      break;
    case ActionKind::AddRecycle:
      next.attach_recycle(edge_id, action.level3);
      break;
    case ActionKind::DeclareProduct:
      next.attach_unit(edge_id, UnitKind::ProductSink, std::nullopt);
      break;
  }

  sim::SimulationOutcome outcome =
      sim::evaluate(next, cfg_.fidelity, cfg_.sim);
  const bool complete = next.complete();
  double reward =
      econ::step_reward(outcome, complete, cfg_.cost, cfg_.sim.components);

  if (outcome.status == sim::Status::Converged) {
    next = outcome.graph;  // keep simulated payloads in the visible state
  }

  StepResult res;
  res.step_index = steps_;
  ++steps_;
  bool terminal = complete || outcome.status != sim::Status::Converged;
  if (!terminal && steps_ >= cfg_.max_steps) {
    // Budget exhausted with open streams: treated as a failed design.
    terminal = true;
    reward = econ::infeasibility_penalty(cfg_.cost);
  }
  res.state = next;
  res.reward = reward;
  res.terminal = terminal;
  res.status = outcome.status;
  state_ = std::move(next);
  terminal_ = terminal;
  return res;
}

}  // namespace flowrl::rlenv
