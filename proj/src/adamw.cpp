#include "dhgreg/adamw.hpp"

#include <cmath>
#include <stdexcept>

namespace dhg {

AdamW::AdamW(ParamStore& params, AdamWConfig cfg) : params_(params), cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (auto& p : params_) {
    m_.emplace_back(p.value.rows, p.value.cols);
    v_.emplace_back(p.value.rows, p.value.cols);
  }
}

void AdamW::step() {
  ++step_;
  const real bc1 = real(1) - std::pow(cfg_.beta1, static_cast<real>(step_));
  const real bc2 = real(1) - std::pow(cfg_.beta2, static_cast<real>(step_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = params_[i];
    if (!p.grad.same_shape(p.value)) {
      throw std::invalid_argument("adamw: gradient shape mismatch for " + p.name);
    }
    real* w = p.value.data.data();
    const real* g = p.grad.data.data();
    real* m = m_[i].data.data();
    real* v = v_[i].data.data();
    const size_t n = p.value.size();
    const real decay = p.weight_decay ? cfg_.lr * cfg_.weight_decay : real(0);
    for (size_t j = 0; j < n; ++j) {
      if (decay != real(0)) w[j] -= decay * w[j];
      m[j] = cfg_.beta1 * m[j] + (real(1) - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (real(1) - cfg_.beta2) * g[j] * g[j];
      const real mhat = m[j] / bc1;
      const real vhat = v[j] / bc2;
      w[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace dhg
