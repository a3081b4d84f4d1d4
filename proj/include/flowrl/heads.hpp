#pragma once

#include <optional>
#include <vector>

#include "flowrl/rng.hpp"
#include "flowrl/tape.hpp"

namespace flowrl::nn {

enum class SampleMode { Sample, Greedy };

struct CategoricalResult {
  int index = -1;   // in the original logit indexing
  Var log_prob;     // of the chosen index, differentiable
  Var entropy;      // of the masked distribution
};

// Masked softmax head. mask[i] != 0 marks a legal index; throws
// std::invalid_argument when nothing is legal or a forced index is illegal.
// forced overrides sampling (used when re-evaluating stored actions).
CategoricalResult categorical_head(Tape& t, Var logits,
                                   const std::vector<char>& mask, Rng* rng,
                                   SampleMode mode = SampleMode::Sample,
                                   std::optional<int> forced = std::nullopt);

struct BetaResult {
  double sample = 0.5;  // in (0,1)
  Var log_prob;         // density at the sample, differentiable in (alpha,beta)
  Var entropy;
  double alpha = 1.0, beta = 1.0;  // forward values, for diagnostics
};

// Beta head over (0,1) with alpha = 1 + softplus(raw0), beta = 1 + softplus(raw1),
// so the density stays bounded and unimodal. raw2 must be a 2x1 variable.
// Greedy mode returns the distribution mode ((a-1)/(a+b-2), or 0.5 when flat).
BetaResult beta_head(Tape& t, Var raw2, Rng* rng,
                     SampleMode mode = SampleMode::Sample,
                     std::optional<double> forced = std::nullopt);

}  // namespace flowrl::nn
