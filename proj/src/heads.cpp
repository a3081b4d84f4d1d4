#include "flowrl/heads.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flowrl::nn {

CategoricalResult categorical_head(Tape& t, Var logits,
                                   const std::vector<char>& mask, Rng* rng,
                                   SampleMode mode, std::optional<int> forced) {
  const auto& lv = t.value(logits);
  if (lv.cols() != 1)
    throw std::invalid_argument("categorical_head: logits must be a column");
  if (static_cast<long>(mask.size()) != lv.rows())
    throw std::invalid_argument("categorical_head: mask size mismatch");

  std::vector<int> legal;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) legal.push_back(static_cast<int>(i));
  if (legal.empty())
    throw std::invalid_argument("categorical_head: all indices masked");

  Var sub = t.gather_rows(logits, legal);
  Var log_probs = t.sub_broadcast(sub, t.logsumexp(sub));

  int pos;
  if (forced) {
    auto it = std::find(legal.begin(), legal.end(), *forced);
    if (it == legal.end())
      throw std::invalid_argument("categorical_head: forced index is masked");
    pos = static_cast<int>(it - legal.begin());
  } else if (mode == SampleMode::Greedy) {
    long best = 0;
    t.value(log_probs).col(0).maxCoeff(&best);
    pos = static_cast<int>(best);
  } else {
    if (!rng)
      throw std::invalid_argument("categorical_head: sampling needs an rng");
    const double u = rng->uniform();
    double cum = 0.0;
    pos = static_cast<int>(legal.size()) - 1;
    const auto& lp = t.value(log_probs);
    for (std::size_t i = 0; i < legal.size(); ++i) {
      cum += std::exp(lp(static_cast<long>(i), 0));
      if (u < cum) {
        pos = static_cast<int>(i);
        break;
      }
    }
  }

  CategoricalResult res;
  res.index = legal[pos];
  res.log_prob = t.row(log_probs, pos);
  res.entropy = t.neg(t.sum(t.mul(t.exp(log_probs), log_probs)));
  return res;
}

BetaResult beta_head(Tape& t, Var raw2, Rng* rng, SampleMode mode,
                     std::optional<double> forced) {
  const auto& rv = t.value(raw2);
  if (rv.rows() != 2 || rv.cols() != 1)
    throw std::invalid_argument("beta_head: raw input must be 2x1");

  Var alpha = t.add_const(t.softplus(t.row(raw2, 0)), 1.0);
  Var beta = t.add_const(t.softplus(t.row(raw2, 1)), 1.0);
  const double a = t.scalar_value(alpha);
  const double b = t.scalar_value(beta);

  double x;
  const double eps = 1e-9;
  if (forced) {
    x = std::clamp(*forced, eps, 1.0 - eps);
  } else if (mode == SampleMode::Greedy) {
    // Mode of Beta(a,b); flat when a = b = 1.
    const double denom = a + b - 2.0;
    x = (denom > 1e-12) ? std::clamp((a - 1.0) / denom, eps, 1.0 - eps) : 0.5;
  } else {
    if (!rng) throw std::invalid_argument("beta_head: sampling needs an rng");
    x = rng->beta(a, b);
  }

  // log B(a,b) = lgamma(a) + lgamma(b) - lgamma(a+b)
  Var log_beta_fn =
      t.sub(t.add(t.lgamma(alpha), t.lgamma(beta)), t.lgamma(t.add(alpha, beta)));
  Var lp = t.sub(t.add(t.scale(t.add_const(alpha, -1.0), std::log(x)),
                       t.scale(t.add_const(beta, -1.0), std::log1p(-x))),
                 log_beta_fn);

  // H = ln B - (a-1) psi(a) - (b-1) psi(b) + (a+b-2) psi(a+b)
  Var ab = t.add(alpha, beta);
  Var entropy = t.add(
      t.sub(log_beta_fn,
            t.add(t.mul(t.add_const(alpha, -1.0), t.digamma(alpha)),
                  t.mul(t.add_const(beta, -1.0), t.digamma(beta)))),
      t.mul(t.add_const(ab, -2.0), t.digamma(ab)));

  BetaResult res;
  res.sample = x;
  res.log_prob = lp;
  res.entropy = entropy;
  res.alpha = a;
  res.beta = b;
  return res;
}

}  // namespace flowrl::nn
