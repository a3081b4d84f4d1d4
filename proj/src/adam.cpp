#include "flowrl/adam.hpp"

#include <cmath>

namespace flowrl::nn {

Adam::Adam(std::vector<ParamTensor*> params, double lr, double beta1,
           double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const ParamTensor* p : params_) {
    m_.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
  }
}

bool Adam::step() {
  for (const ParamTensor* p : params_) {
    if (!p->grad.allFinite()) {
      ++skipped_;
      last_incident_ = "non-finite gradient in " + p->name + "; update skipped";
      return false;
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ParamTensor& p = *params_[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    const Eigen::MatrixXd m_hat = m_[i] / bc1;
    const Eigen::MatrixXd v_hat = v_[i] / bc2;
    p.value.array() -=
        lr_ * m_hat.array() / (v_hat.array().sqrt() + eps_);
  }
  return true;
}

void Adam::zero_grad() {
  for (ParamTensor* p : params_) p->zero_grad();
}

}  // namespace flowrl::nn
