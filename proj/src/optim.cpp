#include "c3r/optim.hpp"

#include <cmath>

#include "c3r/errors.hpp"

namespace c3r {

AdamW::AdamW(std::vector<Tensor> params, AdamWConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  if (!(cfg_.lr > 0.0f)) throw UsageError("AdamW: learning rate must be positive");
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (size_t i = 0; i < params_.size(); ++i) {
    m_[i].assign(params_[i].values().size(), 0.0f);
    v_[i].assign(params_[i].values().size(), 0.0f);
  }
}

void AdamW::step() {
  ++step_count_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    auto& p = params_[pi];
    if (!p.requires_grad()) continue;
    auto& vals = p.values_mut();
    auto& g = p.grad_mut();
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (size_t i = 0; i < vals.size(); ++i) {
      const float gi = g[i];
      if (!std::isfinite(gi))
        throw NumericalError("AdamW: non-finite gradient in parameter " + std::to_string(pi) +
                             " element " + std::to_string(i) + " at step " + std::to_string(step_count_));
      m[i] = static_cast<float>(b1 * m[i] + (1.0 - b1) * gi);
      v[i] = static_cast<float>(b2 * v[i] + (1.0 - b2) * static_cast<double>(gi) * gi);
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      const double update = mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * vals[i];
      vals[i] = static_cast<float>(vals[i] - cfg_.lr * update);
    }
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace c3r
