#include "flowrl/config.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace flowrl::config {

using nlohmann::json;

namespace {

const char* kComponentKeys[4] = {"HOAc", "MeOH", "MeOAc", "H2O"};

json component_to_json(const thermo::Component& c) {
  return json{{"molar_mass_kg_per_mol", c.molar_mass},
              {"boiling_point_k", c.normal_boiling_point},
              {"heat_capacity_j_per_mol_k", c.liquid_heat_capacity},
              {"relative_volatility", c.relative_volatility},
              {"price_eur_per_kg", c.price}};
}

json capex_to_json(const econ::CapitalCorrelation& c) {
  return json{{"base_cost_eur", c.base_cost_eur},
              {"ref_size", c.ref_size},
              {"exponent", c.exponent}};
}

// Pulls a value if the key exists; missing keys keep the default.
template <typename T>
void maybe(const json& j, const char* key, T& out, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::runtime_error("config: bad value at " + path + "." + key + ": " +
                             e.what());
  }
}

void component_from_json(const json& j, thermo::Component& c,
                         const std::string& path) {
  maybe(j, "molar_mass_kg_per_mol", c.molar_mass, path);
  maybe(j, "boiling_point_k", c.normal_boiling_point, path);
  maybe(j, "heat_capacity_j_per_mol_k", c.liquid_heat_capacity, path);
  maybe(j, "relative_volatility", c.relative_volatility, path);
  maybe(j, "price_eur_per_kg", c.price, path);
}

void capex_from_json(const json& j, econ::CapitalCorrelation& c,
                     const std::string& path) {
  maybe(j, "base_cost_eur", c.base_cost_eur, path);
  maybe(j, "ref_size", c.ref_size, path);
  maybe(j, "exponent", c.exponent, path);
}

}  // namespace

FullConfig defaults() {
  FullConfig cfg;
  cfg.env.feed.temperature = 298.15;
  cfg.env.feed.pressure = thermo::kStandardPressure;
  cfg.env.feed.molar_flows = {5.0, 5.0, 0.0, 0.0};  // equimolar HOAc/MeOH
  cfg.env.fidelity = units::Fidelity::Shortcut;
  cfg.env.max_steps = 12;
  return cfg;
}

void FullConfig::validate() const {
  env.validate();
  train.validate();
  if (encoder.hidden < 1 || encoder.rounds < 1)
    throw std::invalid_argument("config: encoder dims must be >= 1");
}

FullConfig overlay_json(const FullConfig& base, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("config: parse error: ") + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("config: top level must be an object");

  FullConfig cfg = base;

  if (j.contains("components")) {
    const json& c = j.at("components");
    for (int i = 0; i < 4; ++i)
      if (c.contains(kComponentKeys[i]))
        component_from_json(c.at(kComponentKeys[i]),
                            cfg.env.sim.components.components[i],
                            std::string("components.") + kComponentKeys[i]);
  }
  if (j.contains("kinetics")) {
    const json& k = j.at("kinetics");
    maybe(k, "pre_exponential", cfg.env.sim.kinetics.pre_exponential, "kinetics");
    maybe(k, "activation_energy_j_per_mol", cfg.env.sim.kinetics.activation_energy,
          "kinetics");
    maybe(k, "keq_a", cfg.env.sim.kinetics.keq_a, "kinetics");
    maybe(k, "keq_b_k", cfg.env.sim.kinetics.keq_b, "kinetics");
  }
  if (j.contains("units")) {
    const json& u = j.at("units");
    maybe(u, "molar_density_mol_per_m3", cfg.env.sim.unit_params.molar_density,
          "units");
    maybe(u, "pfr_rk_steps", cfg.env.sim.unit_params.pfr_rk_steps, "units");
    maybe(u, "pfr_shortcut_l_half_m", cfg.env.sim.unit_params.pfr_shortcut_l_half,
          "units");
    maybe(u, "column_stages", cfg.env.sim.unit_params.column_stages, "units");
    maybe(u, "column_reflux", cfg.env.sim.unit_params.column_reflux, "units");
    maybe(u, "azeotrope_meoac_cap", cfg.env.sim.unit_params.azeotrope_meoac_cap,
          "units");
  }
  if (j.contains("simulation")) {
    const json& s = j.at("simulation");
    maybe(s, "tear_tolerance", cfg.env.sim.tear_tolerance, "simulation");
    maybe(s, "tear_max_iterations", cfg.env.sim.tear_max_iterations, "simulation");
    maybe(s, "wegstein_q_min", cfg.env.sim.wegstein_q_min, "simulation");
    maybe(s, "wegstein_q_max", cfg.env.sim.wegstein_q_max, "simulation");
  }
  if (j.contains("economics")) {
    const json& e = j.at("economics");
    if (e.contains("prices_eur_per_kg")) {
      const json& p = e.at("prices_eur_per_kg");
      for (int i = 0; i < 4; ++i)
        maybe(p, kComponentKeys[i], cfg.env.cost.prices_eur_per_kg[i],
              "economics.prices_eur_per_kg");
    }
    maybe(e, "utility_eur_per_kwh", cfg.env.cost.utility_eur_per_kwh, "economics");
    maybe(e, "operating_hours", cfg.env.cost.operating_hours, "economics");
    maybe(e, "latent_heat_j_per_mol", cfg.env.cost.latent_heat_j_per_mol,
          "economics");
    maybe(e, "capital_recovery_factor", cfg.env.cost.capital_recovery_factor,
          "economics");
    maybe(e, "infeasible_penalty_meur", cfg.env.cost.infeasible_penalty_meur,
          "economics");
    maybe(e, "scale_infeasible_penalty", cfg.env.cost.scale_infeasible_penalty,
          "economics");
    maybe(e, "negative_reward_reduction", cfg.env.cost.negative_reward_reduction,
          "economics");
    if (e.contains("capex")) {
      const json& cx = e.at("capex");
      if (cx.contains("pfr"))
        capex_from_json(cx.at("pfr"), cfg.env.cost.pfr_capex, "economics.capex.pfr");
      if (cx.contains("column"))
        capex_from_json(cx.at("column"), cfg.env.cost.column_capex,
                        "economics.capex.column");
      if (cx.contains("heater"))
        capex_from_json(cx.at("heater"), cfg.env.cost.heater_capex,
                        "economics.capex.heater");
    }
  }
  if (j.contains("env")) {
    const json& e = j.at("env");
    if (e.contains("feed")) {
      const json& f = e.at("feed");
      maybe(f, "temperature_k", cfg.env.feed.temperature, "env.feed");
      maybe(f, "pressure_pa", cfg.env.feed.pressure, "env.feed");
      if (f.contains("molar_flows_mol_per_s")) {
        const json& fl = f.at("molar_flows_mol_per_s");
        for (int i = 0; i < 4; ++i)
          maybe(fl, kComponentKeys[i], cfg.env.feed.molar_flows[i],
                "env.feed.molar_flows_mol_per_s");
      }
    }
    maybe(e, "max_steps", cfg.env.max_steps, "env");
    if (e.contains("fidelity")) {
      const std::string fid = e.at("fidelity").get<std::string>();
      if (fid == "shortcut")
        cfg.env.fidelity = units::Fidelity::Shortcut;
      else if (fid == "rigorous")
        cfg.env.fidelity = units::Fidelity::Rigorous;
      else
        throw std::runtime_error("config: env.fidelity must be shortcut|rigorous");
    }
  }
  if (j.contains("agent")) {
    const json& a = j.at("agent");
    maybe(a, "hidden", cfg.encoder.hidden, "agent");
    maybe(a, "rounds", cfg.encoder.rounds, "agent");
    maybe(a, "episodes", cfg.train.episodes, "agent");
    maybe(a, "update_every", cfg.train.update_every, "agent");
    maybe(a, "epochs", cfg.train.epochs, "agent");
    maybe(a, "minibatch", cfg.train.minibatch, "agent");
    maybe(a, "clip", cfg.train.clip, "agent");
    maybe(a, "gamma", cfg.train.gamma, "agent");
    maybe(a, "gae_lambda", cfg.train.gae_lambda, "agent");
    maybe(a, "value_coeff", cfg.train.value_coeff, "agent");
    maybe(a, "entropy_coeff", cfg.train.entropy_coeff, "agent");
    maybe(a, "lr", cfg.train.lr, "agent");
    maybe(a, "seed", cfg.train.seed, "agent");
    maybe(a, "checkpoint_every", cfg.train.checkpoint_every, "agent");
    maybe(a, "workers", cfg.train.workers, "agent");
  }
  return cfg;
}

FullConfig load_file(const FullConfig& base, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return overlay_json(base, text);
}

std::string to_json(const FullConfig& cfg) {
  json components;
  for (int i = 0; i < 4; ++i)
    components[kComponentKeys[i]] =
        component_to_json(cfg.env.sim.components.components[i]);

  json prices;
  for (int i = 0; i < 4; ++i)
    prices[kComponentKeys[i]] = cfg.env.cost.prices_eur_per_kg[i];

  json flows;
  for (int i = 0; i < 4; ++i)
    flows[kComponentKeys[i]] = cfg.env.feed.molar_flows[i];

  json j{
      {"components", components},
      {"kinetics",
       {{"pre_exponential", cfg.env.sim.kinetics.pre_exponential},
        {"activation_energy_j_per_mol", cfg.env.sim.kinetics.activation_energy},
        {"keq_a", cfg.env.sim.kinetics.keq_a},
        {"keq_b_k", cfg.env.sim.kinetics.keq_b}}},
      {"units",
       {{"molar_density_mol_per_m3", cfg.env.sim.unit_params.molar_density},
        {"pfr_rk_steps", cfg.env.sim.unit_params.pfr_rk_steps},
        {"pfr_shortcut_l_half_m", cfg.env.sim.unit_params.pfr_shortcut_l_half},
        {"column_stages", cfg.env.sim.unit_params.column_stages},
        {"column_reflux", cfg.env.sim.unit_params.column_reflux},
        {"azeotrope_meoac_cap", cfg.env.sim.unit_params.azeotrope_meoac_cap}}},
      {"simulation",
       {{"tear_tolerance", cfg.env.sim.tear_tolerance},
        {"tear_max_iterations", cfg.env.sim.tear_max_iterations},
        {"wegstein_q_min", cfg.env.sim.wegstein_q_min},
        {"wegstein_q_max", cfg.env.sim.wegstein_q_max}}},
      {"economics",
       {{"prices_eur_per_kg", prices},
        {"utility_eur_per_kwh", cfg.env.cost.utility_eur_per_kwh},
        {"operating_hours", cfg.env.cost.operating_hours},
        {"latent_heat_j_per_mol", cfg.env.cost.latent_heat_j_per_mol},
        {"capital_recovery_factor", cfg.env.cost.capital_recovery_factor},
        {"infeasible_penalty_meur", cfg.env.cost.infeasible_penalty_meur},
        {"scale_infeasible_penalty", cfg.env.cost.scale_infeasible_penalty},
        {"negative_reward_reduction", cfg.env.cost.negative_reward_reduction},
        {"capex",
         {{"pfr", capex_to_json(cfg.env.cost.pfr_capex)},
          {"column", capex_to_json(cfg.env.cost.column_capex)},
          {"heater", capex_to_json(cfg.env.cost.heater_capex)}}}}},
      {"env",
       {{"feed",
         {{"temperature_k", cfg.env.feed.temperature},
          {"pressure_pa", cfg.env.feed.pressure},
          {"molar_flows_mol_per_s", flows}}},
        {"max_steps", cfg.env.max_steps},
        {"fidelity", std::string(units::to_string(cfg.env.fidelity))}}},
      {"agent",
       {{"hidden", cfg.encoder.hidden},
        {"rounds", cfg.encoder.rounds},
        {"episodes", cfg.train.episodes},
        {"update_every", cfg.train.update_every},
        {"epochs", cfg.train.epochs},
        {"minibatch", cfg.train.minibatch},
        {"clip", cfg.train.clip},
        {"gamma", cfg.train.gamma},
        {"gae_lambda", cfg.train.gae_lambda},
        {"value_coeff", cfg.train.value_coeff},
        {"entropy_coeff", cfg.train.entropy_coeff},
        {"lr", cfg.train.lr},
        {"seed", cfg.train.seed},
        {"checkpoint_every", cfg.train.checkpoint_every},
        {"workers", cfg.train.workers}}},
  };
  return j.dump(2);
}

std::string sha1_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha1(), nullptr) != 1)
    throw std::runtime_error("sha1: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

}  // namespace flowrl::config
