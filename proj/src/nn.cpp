#include "flowrl/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace flowrl::nn {

ParamTensor& ParamRegistry::create(const std::string& name, long rows,
                                   long cols, Rng& rng) {
  if (by_name_.count(name))
    throw std::invalid_argument("duplicate parameter name " + name);
  const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd v(rows, cols);
  for (long c = 0; c < cols; ++c)
    for (long r = 0; r < rows; ++r) v(r, c) = rng.uniform(-s, s);
  owned_.push_back(std::make_unique<ParamTensor>(name, std::move(v)));
  ParamTensor* p = owned_.back().get();
  order_.push_back(p);
  by_name_[name] = p;
  return *p;
}

ParamTensor& ParamRegistry::create_zeros(const std::string& name, long rows,
                                         long cols) {
  if (by_name_.count(name))
    throw std::invalid_argument("duplicate parameter name " + name);
  owned_.push_back(std::make_unique<ParamTensor>(
      name, Eigen::MatrixXd::Zero(rows, cols)));
  ParamTensor* p = owned_.back().get();
  order_.push_back(p);
  by_name_[name] = p;
  return *p;
}

ParamTensor* ParamRegistry::find(const std::string& name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

long ParamRegistry::total_size() const {
  long n = 0;
  for (const ParamTensor* p : order_) n += p->size();
  return n;
}

void ParamRegistry::zero_grads() {
  for (ParamTensor* p : order_) p->zero_grad();
}

Mlp Mlp::make(ParamRegistry& reg, const std::string& prefix,
              const std::vector<long>& dims, bool output_tanh, Rng& rng) {
  if (dims.size() < 2)
    throw std::invalid_argument("mlp needs at least input and output dims");
  Mlp m;
  m.output_tanh = output_tanh;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::string tag = prefix + ".l" + std::to_string(l);
    m.weights.push_back(&reg.create(tag + ".w", dims[l + 1], dims[l], rng));
    m.biases.push_back(&reg.create_zeros(tag + ".b", dims[l + 1], 1));
  }
  return m;
}

Var Mlp::forward(Tape& t, Var x) const {
  Var h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    h = t.add(t.matmul(t.param(*weights[l]), h), t.param(*biases[l]));
    if (l + 1 < weights.size() || output_tanh) h = t.tanh(h);
  }
  return h;
}

GraphEncoder::GraphEncoder(int node_feat_dim, int edge_feat_dim, int hidden,
                           int rounds, ParamRegistry& reg, Rng& rng)
    : node_feat_dim_(node_feat_dim),
      edge_feat_dim_(edge_feat_dim),
      hidden_(hidden),
      rounds_(rounds) {
  if (hidden < 1 || rounds < 1)
    throw std::invalid_argument("encoder needs hidden >= 1 and rounds >= 1");
  w_in_ = &reg.create("enc.embed.w", hidden, node_feat_dim, rng);
  b_in_ = &reg.create_zeros("enc.embed.b", hidden, 1);
  for (int l = 0; l < rounds; ++l) {
    round_message_.push_back(Mlp::make(
        reg, "enc.r" + std::to_string(l) + ".msg",
        {hidden + edge_feat_dim, hidden, hidden}, true, rng));
    w_update_.push_back(
        &reg.create("enc.r" + std::to_string(l) + ".upd.w", hidden, 2 * hidden, rng));
    b_update_.push_back(
        &reg.create_zeros("enc.r" + std::to_string(l) + ".upd.b", hidden, 1));
  }
  stream_mlp_ = Mlp::make(reg, "enc.stream",
                          {hidden + edge_feat_dim, hidden, hidden}, true, rng);
}

GraphEncoder::Output GraphEncoder::forward(Tape& t, const Input& in) const {
  const int n = static_cast<int>(in.node_features.size());
  if (n == 0) throw std::invalid_argument("encoder: graph has no nodes");
  for (const auto& f : in.node_features)
    if (f.size() != node_feat_dim_)
      throw std::invalid_argument("encoder: node feature dimension mismatch");
  for (const auto& e : in.edges) {
    if (e.features.size() != edge_feat_dim_)
      throw std::invalid_argument("encoder: edge feature dimension mismatch");
    if (e.src < 0 || e.src >= n || e.dst >= n)
      throw std::invalid_argument("encoder: edge endpoint out of range");
  }

  Output out;
  out.node_embeddings.reserve(n);
  for (int v = 0; v < n; ++v)
    out.node_embeddings.push_back(t.tanh(
        t.add(t.matmul(t.param(*w_in_), t.constant(in.node_features[v])),
              t.param(*b_in_))));

  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(hidden_, 1);
  for (int l = 0; l < rounds_; ++l) {
    // Messages over closed edges, accumulated per target node.
    std::vector<std::vector<Var>> incoming(n);
    for (const auto& e : in.edges) {
      if (e.dst < 0) continue;
      Var input = t.concat_rows(
          {out.node_embeddings[e.src], t.constant(e.features)});
      incoming[e.dst].push_back(round_message_[l].forward(t, input));
    }
    std::vector<Var> next;
    next.reserve(n);
    for (int v = 0; v < n; ++v) {
      Var agg;
      if (incoming[v].empty()) {
        agg = t.constant(zero);
      } else {
        agg = incoming[v][0];
        for (std::size_t i = 1; i < incoming[v].size(); ++i)
          agg = t.add(agg, incoming[v][i]);
      }
      Var input = t.concat_rows({out.node_embeddings[v], agg});
      next.push_back(t.tanh(t.add(t.matmul(t.param(*w_update_[l]), input),
                                  t.param(*b_update_[l]))));
    }
    out.node_embeddings = std::move(next);
  }

  out.fingerprint = t.mean(out.node_embeddings);
  return out;
}

Var GraphEncoder::stream_embedding(Tape& t, const Output& out,
                                   const Edge& e) const {
  Var input =
      t.concat_rows({out.node_embeddings.at(e.src), t.constant(e.features)});
  return stream_mlp_.forward(t, input);
}

}  // namespace flowrl::nn
