#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowrl/adam.hpp"
#include "flowrl/checkpoint.hpp"
#include "flowrl/env.hpp"
#include "flowrl/heads.hpp"
#include "flowrl/nn.hpp"

namespace flowrl::agent {

struct EncoderConfig {
  int hidden = 64;
  int rounds = 2;
};

struct TrainConfig {
  int episodes = 2000;
  int update_every = 10;   // episodes per PPO update
  int epochs = 4;
  int minibatch = 64;      // steps
  double clip = 0.2;
  double gamma = 1.0;      // episodes are short and all reward is terminal
  double gae_lambda = 0.95;
  double value_coeff = 0.5;
  double entropy_coeff = 0.01;  // shared across the three heads
  double lr = 3e-4;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // episodes; 0 disables periodic checkpoints
  int workers = 1;

  void validate() const;  // throws std::invalid_argument
};

// GAE: delta_t = r_t + gamma V_{t+1} (1-done_t) - V_t,
//      A_t = delta_t + gamma lambda (1-done_t) A_{t+1}, returns = A + V.
void gae(std::span<const double> rewards, std::span<const double> values,
         std::span<const char> dones, double gamma, double lambda,
         std::vector<double>& advantages, std::vector<double>& returns);

struct StepRecord {
  flowsheet::FlowsheetGraph state;  // before the action
  rlenv::ActionMask mask;
  rlenv::HierarchicalAction action;
  double lp1 = 0.0, lp2 = 0.0, lp3 = 0.0;
  bool has_level3 = false;
  double value = 0.0;
  double reward = 0.0;
  bool done = false;
  double advantage = 0.0;
  double ret = 0.0;
};

class TrajectoryBuffer {
 public:
  void push(StepRecord rec) { steps_.push_back(std::move(rec)); }
  void compute_gae(double gamma, double lambda);
  void clear() { steps_.clear(); }
  std::size_t size() const { return steps_.size(); }
  bool empty() const { return steps_.empty(); }
  std::vector<StepRecord>& steps() { return steps_; }
  const std::vector<StepRecord>& steps() const { return steps_; }

 private:
  std::vector<StepRecord> steps_;
};

struct ActResult {
  rlenv::HierarchicalAction action;
  double lp1 = 0.0, lp2 = 0.0, lp3 = 0.0;
  bool has_level3 = false;
  double joint_log_prob = 0.0;
  double value = 0.0;
};

struct UpdateDiagnostics {
  double policy_loss = 0.0;  // means over minibatches
  double value_loss = 0.0;
  double entropy = 0.0;
  int minibatches = 0;
  int adam_skips = 0;
  bool aborted = false;      // non-finite loss encountered
  std::string detail;
};

// Hierarchical actor-critic over flowsheet graphs:
//   level 1: categorical over open streams, scored from stream embeddings
//   level 2: categorical over the five action kinds, on [fingerprint, stream]
//   level 3: Beta on [fingerprint, stream, one-hot(kind)]
//   critic:  value head on the fingerprint
class PpoAgent {
 public:
  PpoAgent(EncoderConfig cfg, flowsheet::FeatureScale scale, std::uint64_t seed);

  ActResult act(const flowsheet::FlowsheetGraph& g, const rlenv::ActionMask& mask,
                nn::Rng* rng, nn::SampleMode mode = nn::SampleMode::Sample) const;

  // Differentiable re-evaluation of a stored action under current parameters.
  struct EvalVars {
    nn::Var lp1, lp2, lp3;  // lp3 invalid when the action skips level 3
    bool has_level3 = false;
    nn::Var value;
    nn::Var entropy_sum;
  };
  EvalVars evaluate_action(nn::Tape& t, const flowsheet::FlowsheetGraph& g,
                           const rlenv::ActionMask& mask,
                           const rlenv::HierarchicalAction& action) const;

  // Level-2 distribution at a state (diagnostics / tests).
  std::vector<double> level2_probabilities(const flowsheet::FlowsheetGraph& g,
                                           const rlenv::ActionMask& mask,
                                           int level1_index) const;

  UpdateDiagnostics update(TrajectoryBuffer& buffer, const TrainConfig& cfg,
                           nn::Rng& rng);

  void save(const std::string& path) const;
  void load(const std::string& path);  // signature-checked
  std::string signature() const;

  nn::ParamRegistry& params() { return registry_; }
  const nn::ParamRegistry& params() const { return registry_; }
  const flowsheet::FeatureScale& feature_scale() const { return scale_; }
  const EncoderConfig& encoder_config() const { return cfg_; }

 private:
  struct Forward;
  Forward forward_policy(nn::Tape& t, const flowsheet::FlowsheetGraph& g,
                         const rlenv::ActionMask& mask, nn::Rng* rng,
                         nn::SampleMode mode,
                         const rlenv::HierarchicalAction* forced) const;
  void ensure_optimizer(double lr);

  EncoderConfig cfg_;
  flowsheet::FeatureScale scale_;
  nn::ParamRegistry registry_;
  std::unique_ptr<nn::GraphEncoder> encoder_;
  nn::Mlp level1_score_, level2_head_, level3_head_, critic_;
  std::unique_ptr<nn::Adam> optimizer_;
};

struct EpisodeStats {
  int episode = 0;
  double reward = 0.0;       // sum of step rewards
  int length = 0;
  sim::Status final_status = sim::Status::Converged;
  bool complete = false;
};

struct LearningCurve {
  std::vector<EpisodeStats> episodes;
  std::vector<double> moving_avg;  // over the last min(100, n) episodes

  // First episode (1-based) whose moving average reaches the threshold, or -1.
  int episodes_to_threshold(double threshold) const;
};

using CheckpointSink = std::function<void(int episodes_done)>;
using ProgressHook = std::function<void(int episode, const EpisodeStats&,
                                        const UpdateDiagnostics*)>;

// PPO training against the flowsheet environment. Deterministic for a fixed
// (agent seed, cfg.seed, env_cfg, workers do not matter): every episode draws
// from its own derived RNG stream.
LearningCurve train(PpoAgent& agent, const rlenv::EnvConfig& env_cfg,
                    const TrainConfig& cfg,
                    const CheckpointSink& checkpoint_sink = {},
                    const ProgressHook& progress = {});

// Loads the checkpoint into a fresh agent (signature-checked) and trains it.
LearningCurve transfer(PpoAgent& agent, const std::string& checkpoint_path,
                       const rlenv::EnvConfig& env_cfg, const TrainConfig& cfg,
                       const CheckpointSink& checkpoint_sink = {},
                       const ProgressHook& progress = {});

}  // namespace flowrl::agent
