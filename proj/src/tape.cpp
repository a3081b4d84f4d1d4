#include "flowrl/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace flowrl::nn {

double digamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("digamma: x must be > 0");
  double acc = 0.0;
  while (x < 6.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // ln x - 1/(2x) - sum B_2n / (2n x^2n)
  return acc + std::log(x) - 0.5 * inv -
         inv2 * (1.0 / 12.0 -
                 inv2 * (1.0 / 120.0 -
                         inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0))));
}

double trigamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("trigamma: x must be > 0");
  double acc = 0.0;
  while (x < 6.0) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return acc +
         inv * (1.0 +
                inv * (0.5 +
                       inv * (1.0 / 6.0 -
                              inv2 * (1.0 / 30.0 -
                                      inv2 * (1.0 / 42.0 - inv2 / 30.0)))));
}

void Tape::check(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("tape: variable from another tape or invalid");
}

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Eigen::MatrixXd& Tape::grad_of(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0)
    n.grad = Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::constant(Eigen::MatrixXd v) {
  Node n;
  n.value = std::move(v);
  n.op = Op::Constant;
  return {push(std::move(n))};
}

Var Tape::scalar(double v) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

Var Tape::param(ParamTensor& p) {
  for (const auto& [tensor, id] : param_leaves_)
    if (tensor == &p) return {id};
  Node n;
  n.value = p.value;
  n.op = Op::Param;
  n.param = &p;
  int id = push(std::move(n));
  param_leaves_.emplace_back(&p, id);
  return {id};
}

Var Tape::add(Var a, Var b) {
  check(a); check(b);
  Node n;
  n.value = nodes_[a.id].value + nodes_[b.id].value;
  n.op = Op::Add;
  n.in0 = a.id;
  n.in1 = b.id;
  return {push(std::move(n))};
}

Var Tape::sub(Var a, Var b) {
  check(a); check(b);
  Node n;
  n.value = nodes_[a.id].value - nodes_[b.id].value;
  n.op = Op::Sub;
  n.in0 = a.id;
  n.in1 = b.id;
  return {push(std::move(n))};
}

Var Tape::mul(Var a, Var b) {
  check(a); check(b);
  Node n;
  n.value = nodes_[a.id].value.cwiseProduct(nodes_[b.id].value);
  n.op = Op::Mul;
  n.in0 = a.id;
  n.in1 = b.id;
  return {push(std::move(n))};
}

Var Tape::matmul(Var a, Var b) {
  check(a); check(b);
  Node n;
  n.value = nodes_[a.id].value * nodes_[b.id].value;
  n.op = Op::MatMul;
  n.in0 = a.id;
  n.in1 = b.id;
  return {push(std::move(n))};
}

Var Tape::scale(Var a, double s) {
  check(a);
  Node n;
  n.value = s * nodes_[a.id].value;
  n.op = Op::Scale;
  n.in0 = a.id;
  n.s0 = s;
  return {push(std::move(n))};
}

Var Tape::add_const(Var a, double s) {
  check(a);
  Node n;
  n.value = nodes_[a.id].value.array() + s;
  n.op = Op::AddConst;
  n.in0 = a.id;
  n.s0 = s;
  return {push(std::move(n))};
}

Var Tape::neg(Var a) { return scale(a, -1.0); }

Var Tape::tanh(Var a) {
  check(a);
  Node n;
  n.value = nodes_[a.id].value.array().tanh();
  n.op = Op::Tanh;
  n.in0 = a.id;
  return {push(std::move(n))};
}

Var Tape::exp(Var a) {
  check(a);
  Node n;
  n.value = nodes_[a.id].value.array().exp();
  n.op = Op::Exp;
  n.in0 = a.id;
  return {push(std::move(n))};
}

Var Tape::log(Var a) {
  check(a);
  Node n;
  n.value = nodes_[a.id].value.array().log();
  n.op = Op::Log;
  n.in0 = a.id;
  return {push(std::move(n))};
}

Var Tape::softplus(Var a) {
  check(a);
  Node n;
  n.value = nodes_[a.id].value.unaryExpr([](double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
  });
  n.op = Op::Softplus;
  n.in0 = a.id;
  return {push(std::move(n))};
}

Var Tape::lgamma(Var a) {
  check(a);
  Node n;
  n.value = nodes_[a.id].value.unaryExpr([](double x) { return std::lgamma(x); });
  n.op = Op::LGamma;
  n.in0 = a.id;
  return {push(std::move(n))};
}

Var Tape::digamma(Var a) {
  check(a);
  Node n;
  n.value = nodes_[a.id].value.unaryExpr(
      [](double x) { return flowrl::nn::digamma(x); });
  n.op = Op::Digamma;
  n.in0 = a.id;
  return {push(std::move(n))};
}

Var Tape::square(Var a) {
  check(a);
  Node n;
  n.value = nodes_[a.id].value.array().square();
  n.op = Op::Square;
  n.in0 = a.id;
  return {push(std::move(n))};
}

Var Tape::min(Var a, Var b) {
  check(a); check(b);
  Node n;
  n.value = nodes_[a.id].value.cwiseMin(nodes_[b.id].value);
  n.op = Op::Min;
  n.in0 = a.id;
  n.in1 = b.id;
  return {push(std::move(n))};
}

Var Tape::clamp(Var a, double lo, double hi) {
  check(a);
  Node n;
  n.value = nodes_[a.id].value.cwiseMax(lo).cwiseMin(hi);
  n.op = Op::Clamp;
  n.in0 = a.id;
  n.s0 = lo;
  n.s1 = hi;
  return {push(std::move(n))};
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty())
    throw std::invalid_argument("concat_rows: need at least one part");
  long rows = 0;
  for (Var p : parts) {
    check(p);
    if (nodes_[p.id].value.cols() != 1)
      throw std::invalid_argument("concat_rows: parts must be column vectors");
    rows += nodes_[p.id].value.rows();
  }
  Node n;
  n.value.resize(rows, 1);
  long at = 0;
  for (Var p : parts) {
    const auto& v = nodes_[p.id].value;
    n.value.block(at, 0, v.rows(), 1) = v;
    at += v.rows();
    n.inputs.push_back(p.id);
  }
  n.op = Op::ConcatRows;
  return {push(std::move(n))};
}

Var Tape::gather_rows(Var a, std::vector<int> rows) {
  check(a);
  const auto& v = nodes_[a.id].value;
  if (v.cols() != 1)
    throw std::invalid_argument("gather_rows: input must be a column vector");
  Node n;
  n.value.resize(static_cast<long>(rows.size()), 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= v.rows())
      throw std::invalid_argument("gather_rows: index out of range");
    n.value(static_cast<long>(i), 0) = v(rows[i], 0);
  }
  n.op = Op::GatherRows;
  n.in0 = a.id;
  n.rows = std::move(rows);
  return {push(std::move(n))};
}

Var Tape::row(Var a, int r) { return gather_rows(a, {r}); }

Var Tape::sum(Var a) {
  check(a);
  Node n;
  n.value.resize(1, 1);
  n.value(0, 0) = nodes_[a.id].value.sum();
  n.op = Op::Sum;
  n.in0 = a.id;
  return {push(std::move(n))};
}

Var Tape::mean(const std::vector<Var>& vs) {
  if (vs.empty()) throw std::invalid_argument("mean: need at least one input");
  Node n;
  n.value = nodes_[vs[0].id].value;
  for (std::size_t i = 1; i < vs.size(); ++i) {
    check(vs[i]);
    if (nodes_[vs[i].id].value.rows() != n.value.rows() ||
        nodes_[vs[i].id].value.cols() != n.value.cols())
      throw std::invalid_argument("mean: shape mismatch");
    n.value += nodes_[vs[i].id].value;
  }
  n.value /= static_cast<double>(vs.size());
  n.op = Op::Mean;
  for (Var v : vs) n.inputs.push_back(v.id);
  return {push(std::move(n))};
}

Var Tape::logsumexp(Var a) {
  check(a);
  const auto& v = nodes_[a.id].value;
  if (v.cols() != 1 || v.rows() < 1)
    throw std::invalid_argument("logsumexp: input must be a column vector");
  const double m = v.maxCoeff();
  const double s = (v.array() - m).exp().sum();
  Node n;
  n.value.resize(1, 1);
  n.value(0, 0) = m + std::log(s);
  n.op = Op::LogSumExp;
  n.in0 = a.id;
  return {push(std::move(n))};
}

Var Tape::sub_broadcast(Var a, Var s) {
  check(a); check(s);
  if (nodes_[s.id].value.size() != 1)
    throw std::invalid_argument("sub_broadcast: subtrahend must be 1x1");
  Node n;
  n.value = nodes_[a.id].value.array() - nodes_[s.id].value(0, 0);
  n.op = Op::SubBroadcast;
  n.in0 = a.id;
  n.in1 = s.id;
  return {push(std::move(n))};
}

void Tape::backward(Var root) {
  check(root);
  if (nodes_[root.id].value.size() != 1)
    throw std::invalid_argument("backward: root must be a scalar");
  grad_of(root.id)(0, 0) = 1.0;

  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) continue;  // does not feed the root
    const Eigen::MatrixXd& g = n.grad;
    switch (n.op) {
      case Op::Constant:
      case Op::Param:
        break;
      case Op::Add:
        grad_of(n.in0) += g;
        grad_of(n.in1) += g;
        break;
      case Op::Sub:
        grad_of(n.in0) += g;
        grad_of(n.in1) -= g;
        break;
      case Op::Mul:
        grad_of(n.in0) += g.cwiseProduct(nodes_[n.in1].value);
        grad_of(n.in1) += g.cwiseProduct(nodes_[n.in0].value);
        break;
      case Op::MatMul:
        grad_of(n.in0) += g * nodes_[n.in1].value.transpose();
        grad_of(n.in1) += nodes_[n.in0].value.transpose() * g;
        break;
      case Op::Scale:
        grad_of(n.in0) += n.s0 * g;
        break;
      case Op::AddConst:
        grad_of(n.in0) += g;
        break;
      case Op::Neg:
        grad_of(n.in0) -= g;
        break;
      case Op::Tanh:
        grad_of(n.in0) +=
            g.cwiseProduct((1.0 - n.value.array().square()).matrix());
        break;
      case Op::Exp:
        grad_of(n.in0) += g.cwiseProduct(n.value);
        break;
      case Op::Log:
        grad_of(n.in0) += g.cwiseQuotient(nodes_[n.in0].value);
        break;
      case Op::Softplus:
        grad_of(n.in0) += g.cwiseProduct(nodes_[n.in0].value.unaryExpr(
            [](double x) { return 1.0 / (1.0 + std::exp(-x)); }));
        break;
      case Op::LGamma:
        grad_of(n.in0) += g.cwiseProduct(nodes_[n.in0].value.unaryExpr(
            [](double x) { return flowrl::nn::digamma(x); }));
        break;
      case Op::Digamma:
        grad_of(n.in0) += g.cwiseProduct(nodes_[n.in0].value.unaryExpr(
            [](double x) { return flowrl::nn::trigamma(x); }));
        break;
      case Op::Square:
        grad_of(n.in0) += 2.0 * g.cwiseProduct(nodes_[n.in0].value);
        break;
      case Op::Min: {
        const auto& va = nodes_[n.in0].value;
        const auto& vb = nodes_[n.in1].value;
        Eigen::MatrixXd& ga = grad_of(n.in0);
        Eigen::MatrixXd& gb = grad_of(n.in1);
        for (long c = 0; c < g.cols(); ++c)
          for (long r = 0; r < g.rows(); ++r) {
            if (va(r, c) <= vb(r, c))
              ga(r, c) += g(r, c);
            else
              gb(r, c) += g(r, c);
          }
        break;
      }
      case Op::Clamp: {
        const auto& va = nodes_[n.in0].value;
        Eigen::MatrixXd& ga = grad_of(n.in0);
        for (long c = 0; c < g.cols(); ++c)
          for (long r = 0; r < g.rows(); ++r)
            if (va(r, c) > n.s0 && va(r, c) < n.s1) ga(r, c) += g(r, c);
        break;
      }
      case Op::ConcatRows: {
        long at = 0;
        for (int in : n.inputs) {
          const long rows = nodes_[in].value.rows();
          grad_of(in) += g.block(at, 0, rows, 1);
          at += rows;
        }
        break;
      }
      case Op::GatherRows: {
        Eigen::MatrixXd& ga = grad_of(n.in0);
        for (std::size_t i = 0; i < n.rows.size(); ++i)
          ga(n.rows[i], 0) += g(static_cast<long>(i), 0);
        break;
      }
      case Op::Sum:
        grad_of(n.in0).array() += g(0, 0);
        break;
      case Op::Mean: {
        const double w = 1.0 / static_cast<double>(n.inputs.size());
        for (int in : n.inputs) grad_of(in) += w * g;
        break;
      }
      case Op::LogSumExp: {
        const auto& x = nodes_[n.in0].value;
        grad_of(n.in0) +=
            g(0, 0) * (x.array() - n.value(0, 0)).exp().matrix();
        break;
      }
      case Op::SubBroadcast:
        grad_of(n.in0) += g;
        grad_of(n.in1)(0, 0) -= g.sum();
        break;
    }
  }

  for (const auto& [tensor, id] : param_leaves_)
    if (nodes_[id].grad.size() != 0) tensor->grad += nodes_[id].grad;
}

void Tape::reset() {
  nodes_.clear();
  param_leaves_.clear();
}

}  // namespace flowrl::nn
