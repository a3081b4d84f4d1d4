#pragma once

#include <array>
#include <vector>

#include "flowrl/economics.hpp"
#include "flowrl/simulate.hpp"

namespace flowrl::rlenv {

enum class ActionKind : int {
  AddPFR = 0,
  AddColumn,
  AddHeater,
  AddRecycle,
  DeclareProduct,
};
inline constexpr int kActionKindCount = 5;

std::string_view to_string(ActionKind a);

struct HierarchicalAction {
  int level1 = 0;                           // index into open_streams
  ActionKind level2 = ActionKind::AddPFR;
  double level3 = 0.0;                      // raw [0,1]; ignored for DeclareProduct
};

struct EnvConfig {
  thermo::Stream feed;                  // validated at reset
  units::Fidelity fidelity = units::Fidelity::Shortcut;
  int max_steps = 12;
  sim::SimParams sim;
  econ::CostModel cost;

  flowsheet::FeatureScale feature_scale() const;
  void validate() const;  // throws std::invalid_argument
};

struct ActionMask {
  std::vector<char> level1;                          // per open stream
  std::vector<std::array<char, kActionKindCount>> level2;  // per open stream

  bool allows(const HierarchicalAction& a) const;
  bool empty() const { return level1.empty(); }
};

// Level-1 admits every open stream; level-2 forbids AddRecycle on the
// untouched feed edge. A complete flowsheet has empty masks.
ActionMask action_mask(const flowsheet::FlowsheetGraph& g);

struct StepResult {
  flowsheet::FlowsheetGraph state;
  double reward = 0.0;        // MEUR/yr
  bool terminal = false;
  sim::Status status = sim::Status::Converged;
  int step_index = 0;         // index of the step just taken (0-based)
};

// Episode lifecycle around the flowsheet MDP. Deterministic: transitions
// carry no randomness.
class Environment {
 public:
  explicit Environment(EnvConfig cfg);

  const flowsheet::FlowsheetGraph& reset();
  // Throws std::invalid_argument when the action violates the current mask
  // or the episode is already terminal.
  StepResult step(const HierarchicalAction& action);

  const flowsheet::FlowsheetGraph& state() const { return state_; }
  const EnvConfig& config() const { return cfg_; }
  int steps_taken() const { return steps_; }
  bool terminal() const { return terminal_; }

 private:
  EnvConfig cfg_;
  flowsheet::FlowsheetGraph state_;
  int steps_ = 0;
  bool terminal_ = true;  // must reset() first
};

}  // namespace flowrl::rlenv
