#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace flowrl::nn {

// Learnable tensor: value plus an accumulated gradient of identical shape.
struct ParamTensor {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;

  ParamTensor() = default;
  ParamTensor(std::string n, Eigen::MatrixXd v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(Eigen::MatrixXd::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
  long size() const { return value.size(); }
};

// Digamma / trigamma for x > 0 (recurrence + asymptotic series); used by the
// lgamma/digamma tape ops and the Beta entropy.
double digamma(double x);
double trigamma(double x);

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Define-by-run reverse-mode tape over dense 64-bit matrices. Column vectors
// are n x 1. Creation order is a topological order, so backward() is a single
// reverse sweep. Parameter gradients accumulate into ParamTensor::grad.
class Tape {
 public:
  Var constant(Eigen::MatrixXd v);
  Var scalar(double v);
  Var param(ParamTensor& p);  // cached: one leaf per tensor per tape

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);           // elementwise
  Var matmul(Var a, Var b);
  Var scale(Var a, double s);
  Var add_const(Var a, double s);
  Var neg(Var a);
  Var tanh(Var a);
  Var exp(Var a);
  Var log(Var a);                  // requires positive entries
  Var softplus(Var a);             // log(1 + e^x), stable
  Var lgamma(Var a);               // requires positive entries
  Var digamma(Var a);              // requires positive entries
  Var square(Var a);
  Var min(Var a, Var b);           // elementwise; ties follow a
  Var clamp(Var a, double lo, double hi);  // zero gradient outside (lo, hi)
  Var concat_rows(const std::vector<Var>& parts);  // stack column vectors
  Var gather_rows(Var a, std::vector<int> rows);
  Var row(Var a, int r);           // 1x1
  Var sum(Var a);                  // 1x1
  Var mean(const std::vector<Var>& vs);    // elementwise mean, same shapes
  Var logsumexp(Var a);            // column vector -> 1x1, max-shifted
  Var sub_broadcast(Var a, Var s); // a - s with s 1x1

  void backward(Var root);  // root must be 1x1
  const Eigen::MatrixXd& value(Var v) const { return nodes_[v.id].value; }
  double scalar_value(Var v) const { return nodes_[v.id].value(0, 0); }
  std::size_t size() const { return nodes_.size(); }
  void reset();

 private:
  enum class Op {
    Constant, Param, Add, Sub, Mul, MatMul, Scale, AddConst, Neg, Tanh, Exp,
    Log, Softplus, LGamma, Digamma, Square, Min, Clamp, ConcatRows, GatherRows,
    Sum, Mean, LogSumExp, SubBroadcast,
  };

  struct Node {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;  // allocated lazily during backward
    Op op = Op::Constant;
    int in0 = -1, in1 = -1;
    double s0 = 0.0, s1 = 0.0;
    std::vector<int> inputs;  // ConcatRows / Mean
    std::vector<int> rows;    // GatherRows
    ParamTensor* param = nullptr;
  };

  int push(Node n);
  Eigen::MatrixXd& grad_of(int id);
  void check(Var v) const;

  std::vector<Node> nodes_;
  std::vector<std::pair<ParamTensor*, int>> param_leaves_;
};

}  // namespace flowrl::nn
