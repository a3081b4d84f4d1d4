#pragma once

#include <string>
#include <vector>

#include "flowrl/tape.hpp"

namespace flowrl::nn {

// Adam with bias correction. Non-finite gradients skip the whole update and
// are counted; parameter values stay finite.
class Adam {
 public:
  Adam(std::vector<ParamTensor*> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);

  bool step();  // false when skipped due to a non-finite gradient
  void zero_grad();

  int skipped_updates() const { return skipped_; }
  const std::string& last_incident() const { return last_incident_; }
  double learning_rate() const { return lr_; }

 private:
  std::vector<ParamTensor*> params_;
  std::vector<Eigen::MatrixXd> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  int skipped_ = 0;
  std::string last_incident_;
};

}  // namespace flowrl::nn
