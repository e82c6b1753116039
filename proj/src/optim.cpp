#include "gx/optim.hpp"

#include <cmath>

namespace gx {

Adam::Adam(std::vector<ad::Var> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  for (const auto& p : params_) {
    m_.emplace_back(p.rows(), p.cols());
    v_.emplace_back(p.rows(), p.cols());
  }
}

void Adam::step(const std::vector<ad::Var>& grads) {
  if (grads.size() != params_.size()) throw ShapeError("Adam::step: gradient count mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Matrix& w = params_[k].mutable_value();
    const Matrix& g = grads[k].value();
    if (!g.same_shape(w)) throw ShapeError("Adam::step: gradient shape mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g.data[i] + cfg_.weight_decay * w.data[i];
      m_[k].data[i] = cfg_.beta1 * m_[k].data[i] + (1 - cfg_.beta1) * gi;
      v_[k].data[i] = cfg_.beta2 * v_[k].data[i] + (1 - cfg_.beta2) * gi * gi;
      w.data[i] -= cfg_.lr * (m_[k].data[i] / c1) / (std::sqrt(v_[k].data[i] / c2) + cfg_.eps);
    }
  }
}

}  // namespace gx
