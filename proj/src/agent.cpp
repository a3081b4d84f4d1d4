#include "flowrl/agent.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace flowrl::agent {

using flowsheet::FlowsheetGraph;
using nn::Rng;
using nn::SampleMode;
using nn::Tape;
using nn::Var;
using rlenv::ActionKind;
using rlenv::ActionMask;
using rlenv::HierarchicalAction;

void TrainConfig::validate() const {
  if (episodes < 0) throw std::invalid_argument("train config: episodes < 0");
  if (update_every < 1)
    throw std::invalid_argument("train config: update_every must be >= 1");
  if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (minibatch < 1)
    throw std::invalid_argument("train config: minibatch must be >= 1");
  if (!(clip > 0.0 && clip < 1.0))
    throw std::invalid_argument("train config: clip must lie in (0,1)");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("train config: gamma must lie in [0,1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
    throw std::invalid_argument("train config: lambda must lie in [0,1]");
  if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be > 0");
  if (workers < 1) throw std::invalid_argument("train config: workers must be >= 1");
}

void gae(std::span<const double> rewards, std::span<const double> values,
         std::span<const char> dones, double gamma, double lambda,
         std::vector<double>& advantages, std::vector<double>& returns) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n)
    throw std::invalid_argument("gae: input spans must share a length");
  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
  double next_adv = 0.0;
  double next_value = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double not_done = dones[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * next_value * not_done - values[i];
    next_adv = delta + gamma * lambda * not_done * next_adv;
    advantages[i] = next_adv;
    returns[i] = next_adv + values[i];
    next_value = values[i];
  }
}

void TrajectoryBuffer::compute_gae(double gamma, double lambda) {
  std::vector<double> rewards, values, adv, ret;
  std::vector<char> dones;
  rewards.reserve(steps_.size());
  for (const StepRecord& r : steps_) {
    rewards.push_back(r.reward);
    values.push_back(r.value);
    dones.push_back(r.done ? 1 : 0);
  }
  gae(rewards, values, dones, gamma, lambda, adv, ret);
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    steps_[i].advantage = adv[i];
    steps_[i].ret = ret[i];
  }
}

int LearningCurve::episodes_to_threshold(double threshold) const {
  for (std::size_t i = 0; i < moving_avg.size(); ++i)
    if (moving_avg[i] >= threshold) return static_cast<int>(i) + 1;
  return -1;
}

PpoAgent::PpoAgent(EncoderConfig cfg, flowsheet::FeatureScale scale,
                   std::uint64_t seed)
    : cfg_(cfg), scale_(scale) {
  if (cfg.hidden < 1 || cfg.rounds < 1)
    throw std::invalid_argument("agent: hidden and rounds must be >= 1");
  Rng init(nn::derive_seed(seed, 0x1217));
  const long h = cfg.hidden;
  encoder_ = std::make_unique<nn::GraphEncoder>(
      flowsheet::kNodeFeatureSize, flowsheet::kEdgeFeatureSize, cfg.hidden,
      cfg.rounds, registry_, init);
  level1_score_ = nn::Mlp::make(registry_, "head.l1", {h, h, 1}, false, init);
  level2_head_ = nn::Mlp::make(registry_, "head.l2",
                               {2 * h, h, rlenv::kActionKindCount}, false, init);
  level3_head_ = nn::Mlp::make(
      registry_, "head.l3", {2 * h + rlenv::kActionKindCount, h, 2}, false, init);
  critic_ = nn::Mlp::make(registry_, "head.value", {h, h, 1}, false, init);
}

namespace {

// Flowsheet graph -> encoder input; nodes indexed in ascending node-id order,
// edges in ascending edge-id order.
struct GraphView {
  nn::GraphEncoder::Input input;
  std::vector<int> open_edge_positions;  // into input.edges, open-stream order
};

GraphView build_view(const FlowsheetGraph& g, const flowsheet::FeatureScale& scale) {
  GraphView view;
  std::map<int, int> node_index;
  for (const auto& [nid, node] : g.nodes()) {
    node_index[nid] = static_cast<int>(view.input.node_features.size());
    auto f = flowsheet::node_features(g, nid);
    view.input.node_features.push_back(
        Eigen::Map<const Eigen::VectorXd>(f.data(), f.size()));
  }
  std::map<int, int> edge_position;
  for (const auto& [eid, e] : g.edges()) {
    nn::GraphEncoder::Edge edge;
    edge.src = node_index.at(e.from_node);
    edge.dst = e.to_node ? node_index.at(*e.to_node) : -1;
    auto f = flowsheet::edge_features(g, eid, scale);
    edge.features = Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
    edge_position[eid] = static_cast<int>(view.input.edges.size());
    view.input.edges.push_back(std::move(edge));
  }
  for (int eid : g.open_streams())
    view.open_edge_positions.push_back(edge_position.at(eid));
  return view;
}

}  // namespace

struct PpoAgent::Forward {
  HierarchicalAction action;
  Var lp1, lp2, lp3;
  bool has_level3 = false;
  Var value;
  Var ent1, ent2, ent3;
};

PpoAgent::Forward PpoAgent::forward_policy(
    Tape& t, const FlowsheetGraph& g, const ActionMask& mask, Rng* rng,
    SampleMode mode, const HierarchicalAction* forced) const {
  const auto& open = g.open_streams();
  if (open.empty())
    throw std::invalid_argument("act: flowsheet has no open streams");
  if (mask.level1.size() != open.size() || mask.level2.size() != open.size())
    throw std::invalid_argument("act: mask does not match the open streams");

  GraphView view = build_view(g, scale_);
  auto enc = encoder_->forward(t, view.input);

  std::vector<Var> stream_embeds;
  std::vector<Var> scores;
  stream_embeds.reserve(open.size());
  for (int pos : view.open_edge_positions) {
    Var z = encoder_->stream_embedding(t, enc, view.input.edges[pos]);
    stream_embeds.push_back(z);
    scores.push_back(level1_score_.forward(t, z));
  }

  Forward out;

  Var l1_logits = t.concat_rows(scores);
  std::optional<int> forced1 =
      forced ? std::optional<int>(forced->level1) : std::nullopt;
  auto cat1 = nn::categorical_head(t, l1_logits, mask.level1, rng, mode, forced1);
  out.action.level1 = cat1.index;
  out.lp1 = cat1.log_prob;
  out.ent1 = cat1.entropy;

  Var z = stream_embeds[cat1.index];
  Var l2_input = t.concat_rows({enc.fingerprint, z});
  Var l2_logits = level2_head_.forward(t, l2_input);
  std::vector<char> mask2(mask.level2[cat1.index].begin(),
                          mask.level2[cat1.index].end());
  std::optional<int> forced2 =
      forced ? std::optional<int>(static_cast<int>(forced->level2)) : std::nullopt;
  auto cat2 = nn::categorical_head(t, l2_logits, mask2, rng, mode, forced2);
  out.action.level2 = static_cast<ActionKind>(cat2.index);
  out.lp2 = cat2.log_prob;
  out.ent2 = cat2.entropy;

  if (out.action.level2 != ActionKind::DeclareProduct) {
    Eigen::VectorXd onehot = Eigen::VectorXd::Zero(rlenv::kActionKindCount);
    onehot(cat2.index) = 1.0;
    Var l3_input = t.concat_rows({enc.fingerprint, z, t.constant(onehot)});
    Var raw = level3_head_.forward(t, l3_input);
    std::optional<double> forced3 =
        forced ? std::optional<double>(forced->level3) : std::nullopt;
    auto beta = nn::beta_head(t, raw, rng, mode, forced3);
    out.action.level3 = beta.sample;
    out.lp3 = beta.log_prob;
    out.ent3 = beta.entropy;
    out.has_level3 = true;
  } else {
    out.action.level3 = 0.0;
  }

  out.value = critic_.forward(t, enc.fingerprint);
  return out;
}

ActResult PpoAgent::act(const FlowsheetGraph& g, const ActionMask& mask,
                        Rng* rng, SampleMode mode) const {
  Tape t;
  Forward f = forward_policy(t, g, mask, rng, mode, nullptr);
  ActResult res;
  res.action = f.action;
  res.lp1 = t.scalar_value(f.lp1);
  res.lp2 = t.scalar_value(f.lp2);
  res.has_level3 = f.has_level3;
  res.lp3 = f.has_level3 ? t.scalar_value(f.lp3) : 0.0;
  res.joint_log_prob = res.lp1 + res.lp2 + res.lp3;
  res.value = t.scalar_value(f.value);
  return res;
}

PpoAgent::EvalVars PpoAgent::evaluate_action(
    Tape& t, const FlowsheetGraph& g, const ActionMask& mask,
    const HierarchicalAction& action) const {
  Forward f = forward_policy(t, g, mask, nullptr, SampleMode::Greedy, &action);
  EvalVars ev;
  ev.lp1 = f.lp1;
  ev.lp2 = f.lp2;
  ev.lp3 = f.lp3;
  ev.has_level3 = f.has_level3;
  ev.value = f.value;
  Var ent = t.add(f.ent1, f.ent2);
  if (f.has_level3) ent = t.add(ent, f.ent3);
  ev.entropy_sum = ent;
  return ev;
}

std::vector<double> PpoAgent::level2_probabilities(const FlowsheetGraph& g,
                                                   const ActionMask& mask,
                                                   int level1_index) const {
  Tape t;
  GraphView view = build_view(g, scale_);
  auto enc = encoder_->forward(t, view.input);
  Var z = encoder_->stream_embedding(
      t, enc, view.input.edges[view.open_edge_positions.at(level1_index)]);
  Var logits = level2_head_.forward(t, t.concat_rows({enc.fingerprint, z}));
  const auto& lv = t.value(logits);
  std::vector<double> probs(rlenv::kActionKindCount, 0.0);
  double max_legal = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < rlenv::kActionKindCount; ++k)
    if (mask.level2[level1_index][k]) max_legal = std::max(max_legal, lv(k, 0));
  double denom = 0.0;
  for (int k = 0; k < rlenv::kActionKindCount; ++k)
    if (mask.level2[level1_index][k]) denom += std::exp(lv(k, 0) - max_legal);
  for (int k = 0; k < rlenv::kActionKindCount; ++k)
    if (mask.level2[level1_index][k])
      probs[k] = std::exp(lv(k, 0) - max_legal) / denom;
  return probs;
}

void PpoAgent::ensure_optimizer(double lr) {
  if (!optimizer_) optimizer_ = std::make_unique<nn::Adam>(registry_.all(), lr);
}

UpdateDiagnostics PpoAgent::update(TrajectoryBuffer& buffer,
                                   const TrainConfig& cfg, Rng& rng) {
  UpdateDiagnostics diag;
  if (buffer.empty())
    throw std::invalid_argument("ppo update: buffer is empty");
  ensure_optimizer(cfg.lr);

  auto& steps = buffer.steps();
  const std::size_t n = steps.size();

  // Normalize advantages to zero mean / unit variance across the update.
  double mean = 0.0;
  for (const auto& s : steps) mean += s.advantage;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const auto& s : steps) var += (s.advantage - mean) * (s.advantage - mean);
  var /= static_cast<double>(n);
  const double denom = std::sqrt(var) + 1e-8;
  std::vector<double> adv(n);
  for (std::size_t i = 0; i < n; ++i) adv[i] = (steps[i].advantage - mean) / denom;

  std::vector<int> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);

  double policy_acc = 0.0, value_acc = 0.0, entropy_acc = 0.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t at = 0; at < n; at += cfg.minibatch) {
      const std::size_t stop = std::min(n, at + cfg.minibatch);
      const double inv = 1.0 / static_cast<double>(stop - at);

      Tape t;
      Var loss = t.scalar(0.0);
      double mb_policy = 0.0, mb_value = 0.0, mb_entropy = 0.0;
      for (std::size_t k = at; k < stop; ++k) {
        const StepRecord& rec = steps[order[k]];
        const double a = adv[order[k]];
        EvalVars ev = evaluate_action(t, rec.state, rec.mask, rec.action);

        auto clipped_term = [&](Var lp_new, double lp_old) {
          Var ratio = t.exp(t.add_const(lp_new, -lp_old));
          Var unclipped = t.scale(ratio, a);
          Var clipped = t.scale(t.clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip), a);
          return t.neg(t.min(unclipped, clipped));
        };
        Var policy = t.add(clipped_term(ev.lp1, rec.lp1),
                           clipped_term(ev.lp2, rec.lp2));
        if (ev.has_level3)
          policy = t.add(policy, clipped_term(ev.lp3, rec.lp3));
        Var verr = t.square(t.add_const(ev.value, -rec.ret));
        Var sample = t.add(policy, t.sub(t.scale(verr, cfg.value_coeff),
                                         t.scale(ev.entropy_sum, cfg.entropy_coeff)));
        loss = t.add(loss, sample);

        mb_policy += t.scalar_value(policy);
        mb_value += t.scalar_value(verr);
        mb_entropy += t.scalar_value(ev.entropy_sum);
      }
      loss = t.scale(loss, inv);

      if (!std::isfinite(t.scalar_value(loss))) {
        diag.aborted = true;
        diag.detail = "non-finite loss; update aborted";
        registry_.zero_grads();
        return diag;
      }

      optimizer_->zero_grad();
      t.backward(loss);
      optimizer_->step();

      policy_acc += mb_policy * inv;
      value_acc += mb_value * inv;
      entropy_acc += mb_entropy * inv;
      ++diag.minibatches;
    }
  }

  if (diag.minibatches > 0) {
    diag.policy_loss = policy_acc / diag.minibatches;
    diag.value_loss = value_acc / diag.minibatches;
    diag.entropy = entropy_acc / diag.minibatches;
  }
  diag.adam_skips = optimizer_->skipped_updates();
  return diag;
}

std::string PpoAgent::signature() const {
  return "flowrl-policy-v1;hidden=" + std::to_string(cfg_.hidden) +
         ";rounds=" + std::to_string(cfg_.rounds) +
         ";node_feat=" + std::to_string(flowsheet::kNodeFeatureSize) +
         ";edge_feat=" + std::to_string(flowsheet::kEdgeFeatureSize) +
         ";actions=" + std::to_string(rlenv::kActionKindCount);
}

void PpoAgent::save(const std::string& path) const {
  nn::save_checkpoint(path, signature(), registry_.all());
}

void PpoAgent::load(const std::string& path) {
  nn::load_checkpoint(path, signature(), registry_.all());
  optimizer_.reset();  // fresh moments for the new phase
}

namespace {

struct EpisodeOutput {
  std::vector<StepRecord> records;
  EpisodeStats stats;
};

EpisodeOutput rollout_episode(const PpoAgent& agent, rlenv::Environment& env,
                              std::uint64_t episode_seed, int episode_index) {
  Rng rng(episode_seed);
  EpisodeOutput out;
  out.stats.episode = episode_index;
  env.reset();
  while (!env.terminal()) {
    const FlowsheetGraph state = env.state();
    const ActionMask mask = rlenv::action_mask(state);
    ActResult act = agent.act(state, mask, &rng);
    rlenv::StepResult step = env.step(act.action);

    StepRecord rec;
    rec.state = state;
    rec.mask = mask;
    rec.action = act.action;
    rec.lp1 = act.lp1;
    rec.lp2 = act.lp2;
    rec.lp3 = act.lp3;
    rec.has_level3 = act.has_level3;
    rec.value = act.value;
    rec.reward = step.reward;
    rec.done = step.terminal;
    out.records.push_back(std::move(rec));

    out.stats.reward += step.reward;
    out.stats.length += 1;
    out.stats.final_status = step.status;
    if (step.terminal) out.stats.complete = step.state.complete();
  }
  return out;
}

}  // namespace

LearningCurve train(PpoAgent& agent, const rlenv::EnvConfig& env_cfg,
                    const TrainConfig& cfg, const CheckpointSink& checkpoint_sink,
                    const ProgressHook& progress) {
  cfg.validate();
  { [[maybe_unused]] rlenv::Environment probe(env_cfg); }  // env config check

  LearningCurve curve;
  if (cfg.episodes == 0) return curve;

  TrajectoryBuffer buffer;
  Rng update_rng(nn::derive_seed(cfg.seed, 0xFFFF0001ull));

  std::vector<double> window;  // episode rewards, for the moving average

  int episode = 0;
  while (episode < cfg.episodes) {
    const int batch = std::min(cfg.update_every, cfg.episodes - episode);
    std::vector<EpisodeOutput> slots(batch);

    if (cfg.workers <= 1) {
      rlenv::Environment env(env_cfg);
      for (int b = 0; b < batch; ++b)
        slots[b] = rollout_episode(
            agent, env, nn::derive_seed(cfg.seed, episode + b), episode + b);
    } else {
      std::atomic<int> next{0};
      auto work = [&]() {
        rlenv::Environment env(env_cfg);
        for (;;) {
          const int b = next.fetch_add(1);
          if (b >= batch) break;
          slots[b] = rollout_episode(
              agent, env, nn::derive_seed(cfg.seed, episode + b), episode + b);
        }
      };
      std::vector<std::thread> pool;
      const int n_threads = std::min(cfg.workers, batch);
      pool.reserve(n_threads);
      for (int w = 0; w < n_threads; ++w) pool.emplace_back(work);
      for (auto& th : pool) th.join();
    }

    for (int b = 0; b < batch; ++b) {
      EpisodeOutput& out = slots[b];
      for (StepRecord& rec : out.records) buffer.push(std::move(rec));

      window.push_back(out.stats.reward);
      const std::size_t span = std::min<std::size_t>(window.size(), 100);
      double avg = 0.0;
      for (std::size_t i = window.size() - span; i < window.size(); ++i)
        avg += window[i];
      avg /= static_cast<double>(span);

      curve.episodes.push_back(out.stats);
      curve.moving_avg.push_back(avg);
    }
    episode += batch;

    buffer.compute_gae(cfg.gamma, cfg.gae_lambda);
    UpdateDiagnostics diag = agent.update(buffer, cfg, update_rng);
    buffer.clear();

    if (progress)
      progress(episode, curve.episodes.back(), &diag);
    if (checkpoint_sink && cfg.checkpoint_every > 0 &&
        episode % cfg.checkpoint_every == 0 && episode < cfg.episodes)
      checkpoint_sink(episode);
  }
  if (checkpoint_sink) checkpoint_sink(cfg.episodes);
  return curve;
}

LearningCurve transfer(PpoAgent& agent, const std::string& checkpoint_path,
                       const rlenv::EnvConfig& env_cfg, const TrainConfig& cfg,
                       const CheckpointSink& checkpoint_sink,
                       const ProgressHook& progress) {
  agent.load(checkpoint_path);
  return train(agent, env_cfg, cfg, checkpoint_sink, progress);
}

}  // namespace flowrl::agent
