#pragma once

#include <string>

#include "flowrl/agent.hpp"
#include "flowrl/env.hpp"

namespace flowrl::config {

// Everything an experiment needs, resolved from defaults plus an optional
// JSON config file plus command-line overrides. Schema in docs/config.md.
struct FullConfig {
  rlenv::EnvConfig env;
  agent::TrainConfig train;
  agent::EncoderConfig encoder;

  void validate() const;
};

FullConfig defaults();

// Parses JSON text and overlays it onto `base` (absent keys keep base values).
// Throws std::runtime_error with a key path on malformed input.
FullConfig overlay_json(const FullConfig& base, const std::string& json_text);

FullConfig load_file(const FullConfig& base, const std::string& path);

// Canonical resolved form (sorted keys, full precision); the manifest embeds
// this and its hash.
std::string to_json(const FullConfig& cfg);

// SHA-1 hex digest of a blob (config identity in manifests).
std::string sha1_hex(const std::string& data);

}  // namespace flowrl::config
