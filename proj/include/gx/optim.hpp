#pragma once

#include <vector>

#include "gx/autodiff.hpp"

namespace gx {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

class Adam {
 public:
  Adam(std::vector<ad::Var> params, AdamConfig cfg);

  /// Applies one update; `grads` is parallel to the parameter list.
  void step(const std::vector<ad::Var>& grads);
  [[nodiscard]] const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }
  [[nodiscard]] long steps() const { return t_; }

 private:
  std::vector<ad::Var> params_;
  std::vector<Matrix> m_, v_;
  AdamConfig cfg_;
  long t_ = 0;
};

}  // namespace gx
