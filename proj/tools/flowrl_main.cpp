#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "flowrl/agent.hpp"
#include "flowrl/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace flowrl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&tt));
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

struct ManifestWriter {
  json j;
  fs::path dir;
  bool enabled = false;

  ManifestWriter(const std::string& command, const std::string& out_dir,
                 const config::FullConfig& cfg, std::uint64_t seed) {
    if (out_dir.empty()) return;
    enabled = true;
    dir = out_dir;
    fs::create_directories(dir);
    const std::string resolved = config::to_json(cfg);
    j["command"] = command;
    j["seed"] = seed;
    j["resolved_config"] = json::parse(resolved);
    j["config_sha1"] = config::sha1_hex(resolved);
    j["started_at"] = iso_now();
    j["outputs"] = json::array();
  }

  void add_output(const fs::path& p) {
    if (enabled) j["outputs"].push_back(p.filename().string());
  }

  void finish(int exit_code) {
    if (!enabled) return;
    j["finished_at"] = iso_now();
    j["exit_code"] = exit_code;
    write_text_file(dir / "manifest.json", j.dump(2) + "\n");
  }
};

std::string streams_csv(const sim::SimulationOutcome& outcome) {
  std::ostringstream out;
  out << "edge_id,temperature_k,hoac_mol_s,meoh_mol_s,meoac_mol_s,h2o_mol_s\n";
  for (const auto& [eid, e] : outcome.graph.edges()) {
    out << eid;
    if (e.payload) {
      out << "," << fmt17(e.payload->temperature);
      for (double f : e.payload->molar_flows) out << "," << fmt17(f);
    } else {
      out << ",,,,,";
    }
    out << "\n";
  }
  return out.str();
}

std::string ledger_csv(const econ::Ledger& ledger, const econ::CostModel& cost,
                       bool complete, double reward) {
  std::ostringstream out;
  out << "item,value_meur_per_yr\n";
  out << "revenue," << fmt17(ledger.revenue_meur_per_yr) << "\n";
  out << "feed_cost," << fmt17(ledger.feed_cost_meur_per_yr) << "\n";
  for (const auto& u : ledger.units) {
    const std::string tag =
        std::string(flowsheet::to_string(u.kind)) + ":" + std::to_string(u.node_id);
    out << "opex:" << tag << "," << fmt17(u.opex_meur_per_yr) << "\n";
    out << "capex_charge:" << tag << ","
        << fmt17(cost.capital_recovery_factor * u.capex_meur) << "\n";
  }
  out << "total_opex," << fmt17(ledger.total_opex()) << "\n";
  out << "total_capex_charge,"
      << fmt17(cost.capital_recovery_factor * ledger.total_capex()) << "\n";
  out << "eq2_net," << fmt17(ledger.net_reward(cost.capital_recovery_factor))
      << "\n";
  out << "complete," << (complete ? 1 : 0) << "\n";
  out << "reward," << fmt17(reward) << "\n";
  return out.str();
}

std::string curve_csv(const agent::LearningCurve& curve) {
  std::ostringstream out;
  out << "episode,reward,moving_avg_100\n";
  for (std::size_t i = 0; i < curve.episodes.size(); ++i)
    out << (i + 1) << "," << fmt17(curve.episodes[i].reward) << ","
        << fmt17(curve.moving_avg[i]) << "\n";
  return out.str();
}

config::FullConfig resolve_config(const std::string& config_path) {
  config::FullConfig cfg = config::defaults();
  if (!config_path.empty()) cfg = config::load_file(cfg, config_path);
  return cfg;
}

struct TrainCliOpts {
  std::string config_path, out_dir, env_fidelity;
  int episodes = -1;
  std::int64_t seed = -1;
  int workers = -1;
  int checkpoint_every = -1;
};

void apply_train_overrides(config::FullConfig& cfg, const TrainCliOpts& o) {
  if (!o.env_fidelity.empty())
    cfg.env.fidelity = (o.env_fidelity == "rigorous") ? units::Fidelity::Rigorous
                                                      : units::Fidelity::Shortcut;
  if (o.episodes >= 0) cfg.train.episodes = o.episodes;
  if (o.seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(o.seed);
  if (o.workers >= 1) cfg.train.workers = o.workers;
  if (o.checkpoint_every >= 0) cfg.train.checkpoint_every = o.checkpoint_every;
}

int run_training(const std::string& command, const config::FullConfig& cfg,
                 const std::string& out_dir, const std::string& from_checkpoint) {
  cfg.validate();
  ManifestWriter manifest(command, out_dir, cfg, cfg.train.seed);

  agent::PpoAgent ag(cfg.encoder, cfg.env.feature_scale(), cfg.train.seed);
  if (!from_checkpoint.empty()) ag.load(from_checkpoint);

  const fs::path out(out_dir);
  const fs::path ckpt_dir = out / "checkpoints";
  fs::create_directories(ckpt_dir);

  auto sink = [&](int episodes_done) {
    char name[64];
    std::snprintf(name, sizeof(name), "ckpt_ep%06d.bin", episodes_done);
    ag.save((ckpt_dir / name).string());
  };
  auto progress = [&](int episode, const agent::EpisodeStats&,
                      const agent::UpdateDiagnostics* diag) {
    if (episode % 500 == 0 || (diag && diag->aborted)) {
      std::cerr << command << ": episode " << episode;
      if (diag)
        std::cerr << " policy_loss=" << diag->policy_loss
                  << " value_loss=" << diag->value_loss
                  << " entropy=" << diag->entropy
                  << (diag->aborted ? " [update aborted]" : "");
      std::cerr << "\n";
    }
  };

  agent::LearningCurve curve = agent::train(ag, cfg.env, cfg.train, sink, progress);

  ag.save((ckpt_dir / "final.bin").string());
  write_text_file(out / "curves.csv", curve_csv(curve));
  manifest.add_output(out / "curves.csv");
  manifest.add_output(ckpt_dir / "final.bin");
  manifest.finish(kExitOk);

  if (!curve.moving_avg.empty())
    std::cout << "final moving average (100 ep): "
              << curve.moving_avg.back() << " MEUR/yr over "
              << curve.episodes.size() << " episodes\n";
  else
    std::cout << "no episodes run\n";
  return kExitOk;
}

int cmd_simulate(const std::string& flowsheet_path, const std::string& fidelity,
                 const std::string& config_path, const std::string& out_dir) {
  config::FullConfig cfg = resolve_config(config_path);
  if (!fidelity.empty())
    cfg.env.fidelity = (fidelity == "rigorous") ? units::Fidelity::Rigorous
                                                : units::Fidelity::Shortcut;

  flowsheet::FlowsheetGraph g;
  try {
    g = flowsheet::deserialize(read_text_file(flowsheet_path));
  } catch (const flowsheet::ParseError& e) {
    std::cerr << "parse error in " << flowsheet_path << ": " << e.what() << "\n";
    return kExitUsage;
  }

  ManifestWriter manifest("simulate", out_dir, cfg, cfg.train.seed);
  sim::SimulationOutcome outcome = sim::evaluate(g, cfg.env.fidelity, cfg.env.sim);

  const std::string streams = streams_csv(outcome);
  std::string ledger_text;
  double reward = 0.0;
  const bool complete = g.complete();
  if (outcome.status == sim::Status::Converged) {
    const econ::Ledger ledger =
        econ::flowsheet_economics(outcome, cfg.env.cost, cfg.env.sim.components);
    reward = econ::step_reward(outcome, complete, cfg.env.cost,
                               cfg.env.sim.components);
    ledger_text = ledger_csv(ledger, cfg.env.cost, complete, reward);
  }

  if (!out_dir.empty()) {
    const fs::path out(out_dir);
    write_text_file(out / "streams.csv", streams);
    manifest.add_output(out / "streams.csv");
    if (!ledger_text.empty()) {
      write_text_file(out / "ledger.csv", ledger_text);
      manifest.add_output(out / "ledger.csv");
    }
  } else {
    std::cout << streams;
    if (!ledger_text.empty()) std::cout << ledger_text;
  }

  std::cout << "status: " << sim::to_string(outcome.status);
  if (outcome.status == sim::Status::Converged)
    std::cout << " reward: " << reward << " MEUR/yr"
              << (complete ? "" : " (incomplete flowsheet)");
  else
    std::cout << " (" << outcome.detail << ")";
  std::cout << "\n";

  const int code =
      outcome.status == sim::Status::Converged ? kExitOk : kExitInfeasible;
  manifest.finish(code);
  return code;
}

int cmd_eval(const std::string& checkpoint, int episodes, bool greedy,
             std::int64_t seed_opt, const std::string& fidelity,
             const std::string& config_path, const std::string& out_dir) {
  config::FullConfig cfg = resolve_config(config_path);
  if (!fidelity.empty())
    cfg.env.fidelity = (fidelity == "rigorous") ? units::Fidelity::Rigorous
                                                : units::Fidelity::Shortcut;
  if (seed_opt >= 0) cfg.train.seed = static_cast<std::uint64_t>(seed_opt);
  cfg.validate();

  agent::PpoAgent ag(cfg.encoder, cfg.env.feature_scale(), cfg.train.seed);
  ag.load(checkpoint);

  ManifestWriter manifest("eval", out_dir, cfg, cfg.train.seed);
  rlenv::Environment env(cfg.env);

  double best_reward = -std::numeric_limits<double>::infinity();
  flowsheet::FlowsheetGraph best_graph;
  std::ostringstream summary;
  summary << "episode,reward,length,status,complete\n";

  for (int ep = 0; ep < episodes; ++ep) {
    nn::Rng rng(nn::derive_seed(cfg.train.seed, ep));
    env.reset();
    double total = 0.0;
    int len = 0;
    sim::Status status = sim::Status::Converged;
    while (!env.terminal()) {
      const auto mask = rlenv::action_mask(env.state());
      const auto act = ag.act(env.state(), mask, &rng,
                              greedy ? nn::SampleMode::Greedy
                                     : nn::SampleMode::Sample);
      const auto step = env.step(act.action);
      total += step.reward;
      status = step.status;
      ++len;
    }
    const bool complete = env.state().complete();
    summary << (ep + 1) << "," << fmt17(total) << "," << len << ","
            << sim::to_string(status) << "," << (complete ? 1 : 0) << "\n";
    if (total > best_reward) {
      best_reward = total;
      best_graph = env.state();
    }
  }

  const std::string best_text = flowsheet::serialize(best_graph);
  if (!out_dir.empty()) {
    const fs::path out(out_dir);
    write_text_file(out / "best_flowsheet.fs", best_text);
    write_text_file(out / "eval_summary.csv", summary.str());
    manifest.add_output(out / "best_flowsheet.fs");
    manifest.add_output(out / "eval_summary.csv");
  } else {
    std::cout << best_text;
  }
  std::cout << "best reward over " << episodes
            << (greedy ? " greedy" : " sampled") << " episodes: " << best_reward
            << " MEUR/yr\n";
  manifest.finish(kExitOk);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowsheet-synthesis reinforcement learning toolkit"};
  app.require_subcommand(1);

  // simulate
  std::string sim_file, sim_fidelity, sim_config, sim_out;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "evaluate a flowsheet file and export streams + economics");
  simulate->add_option("flowsheet", sim_file, "flowsheet .fs file")->required();
  simulate->add_option("--fidelity", sim_fidelity, "shortcut|rigorous")
      ->check(CLI::IsMember({"shortcut", "rigorous"}));
  simulate->add_option("--config", sim_config, "JSON config file");
  simulate->add_option("--out", sim_out, "output directory");

  // train / transfer share options
  TrainCliOpts train_opts, transfer_opts;
  std::string transfer_from;

  CLI::App* train = app.add_subcommand("train", "train an agent with PPO");
  train->add_option("--env", train_opts.env_fidelity, "shortcut|rigorous")
      ->check(CLI::IsMember({"shortcut", "rigorous"}));
  train->add_option("--episodes", train_opts.episodes, "episode count");
  train->add_option("--seed", train_opts.seed, "RNG seed");
  train->add_option("--config", train_opts.config_path, "JSON config file");
  train->add_option("--out", train_opts.out_dir, "run directory")->required();
  train->add_option("--workers", train_opts.workers, "rollout workers");
  train->add_option("--checkpoint-every", train_opts.checkpoint_every,
                    "checkpoint cadence in episodes (0 = final only)");

  CLI::App* transfer = app.add_subcommand(
      "transfer", "fine-tune starting from a pre-trained checkpoint");
  transfer->add_option("--from", transfer_from, "checkpoint to start from")
      ->required();
  transfer->add_option("--env", transfer_opts.env_fidelity, "shortcut|rigorous")
      ->check(CLI::IsMember({"shortcut", "rigorous"}));
  transfer->add_option("--episodes", transfer_opts.episodes, "episode count");
  transfer->add_option("--seed", transfer_opts.seed, "RNG seed");
  transfer->add_option("--config", transfer_opts.config_path, "JSON config file");
  transfer->add_option("--out", transfer_opts.out_dir, "run directory")->required();
  transfer->add_option("--workers", transfer_opts.workers, "rollout workers");
  transfer->add_option("--checkpoint-every", transfer_opts.checkpoint_every,
                       "checkpoint cadence in episodes (0 = final only)");

  // eval
  std::string eval_ckpt, eval_fidelity, eval_config, eval_out;
  int eval_episodes = 1;
  bool eval_greedy = false;
  std::int64_t eval_seed = -1;
  CLI::App* eval = app.add_subcommand(
      "eval", "replay a checkpoint and export the best flowsheet");
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--episodes", eval_episodes, "episodes to replay");
  eval->add_flag("--greedy", eval_greedy, "argmax actions (deterministic)");
  eval->add_option("--seed", eval_seed, "RNG seed for sampled replay");
  eval->add_option("--env", eval_fidelity, "shortcut|rigorous")
      ->check(CLI::IsMember({"shortcut", "rigorous"}));
  eval->add_option("--config", eval_config, "JSON config file");
  eval->add_option("--out", eval_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed())
      return cmd_simulate(sim_file, sim_fidelity, sim_config, sim_out);
    if (train->parsed()) {
      config::FullConfig cfg = resolve_config(train_opts.config_path);
      apply_train_overrides(cfg, train_opts);
      return run_training("train", cfg, train_opts.out_dir, "");
    }
    if (transfer->parsed()) {
      config::FullConfig cfg = resolve_config(transfer_opts.config_path);
      apply_train_overrides(cfg, transfer_opts);
      if (!fs::exists(transfer_from)) {
        std::cerr << "transfer: checkpoint not found: " << transfer_from << "\n";
        return kExitUsage;
      }
      return run_training("transfer", cfg, transfer_opts.out_dir, transfer_from);
    }
    if (eval->parsed())
      return cmd_eval(eval_ckpt, eval_episodes, eval_greedy, eval_seed,
                      eval_fidelity, eval_config, eval_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
