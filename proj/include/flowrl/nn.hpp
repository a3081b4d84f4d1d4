#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "flowrl/rng.hpp"
#include "flowrl/tape.hpp"

namespace flowrl::nn {

// Owns learnable tensors; iteration order is creation order, which fixes the
// checkpoint layout and the initialization RNG stream.
class ParamRegistry {
 public:
  // Xavier-uniform initialization over fan-in/fan-out.
  ParamTensor& create(const std::string& name, long rows, long cols, Rng& rng);
  ParamTensor& create_zeros(const std::string& name, long rows, long cols);

  ParamTensor* find(const std::string& name);
  const std::vector<ParamTensor*>& all() const { return order_; }
  long total_size() const;
  void zero_grads();

 private:
  std::vector<std::unique_ptr<ParamTensor>> owned_;
  std::vector<ParamTensor*> order_;
  std::map<std::string, ParamTensor*> by_name_;
};

// Dense stack with tanh between layers; final activation optional.
struct Mlp {
  std::vector<ParamTensor*> weights;
  std::vector<ParamTensor*> biases;
  bool output_tanh = false;

  static Mlp make(ParamRegistry& reg, const std::string& prefix,
                  const std::vector<long>& dims, bool output_tanh, Rng& rng);
  Var forward(Tape& t, Var x) const;
};

// Message-passing graph encoder:
//   h0_v   = tanh(W_in x_v + b_in)
//   m_e    = MLP_l([h_src, e])            (per round l, closed edges only)
//   h'_v   = tanh(W_l [h_v, sum_in m_e] + b_l)
//   fingerprint = mean_v h_v
// Node ordering is irrelevant to the fingerprint (sum/mean aggregation).
class GraphEncoder {
 public:
  struct Edge {
    int src = -1;
    int dst = -1;  // -1 marks an open stream (no message target)
    Eigen::VectorXd features;
  };
  struct Input {
    std::vector<Eigen::VectorXd> node_features;
    std::vector<Edge> edges;
  };
  struct Output {
    std::vector<Var> node_embeddings;
    Var fingerprint;
  };

  GraphEncoder(int node_feat_dim, int edge_feat_dim, int hidden, int rounds,
               ParamRegistry& reg, Rng& rng);

  Output forward(Tape& t, const Input& in) const;
  // Embedding of one stream: MLP over [h_src, edge features]. Works for open
  // and closed edges; this is what the action heads condition on.
  Var stream_embedding(Tape& t, const Output& out, const Edge& e) const;

  int hidden() const { return hidden_; }
  int rounds() const { return rounds_; }
  int node_feat_dim() const { return node_feat_dim_; }
  int edge_feat_dim() const { return edge_feat_dim_; }

 private:
  int node_feat_dim_, edge_feat_dim_, hidden_, rounds_;
  ParamTensor* w_in_;
  ParamTensor* b_in_;
  std::vector<Mlp> round_message_;   // per round
  std::vector<ParamTensor*> w_update_;
  std::vector<ParamTensor*> b_update_;
  Mlp stream_mlp_;
};

}  // namespace flowrl::nn
