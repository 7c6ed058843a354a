#pragma once

#include <string>
#include <vector>

#include "c3r/tensor.hpp"

namespace c3r {

struct AdamWConfig {
  float lr = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  float weight_decay = 0.0f;
};

// Adam with decoupled weight decay. Moment buffers are keyed by parameter
// order, so the parameter list must be stable across steps.
class AdamW {
 public:
  AdamW(std::vector<Tensor> params, AdamWConfig cfg);

  // Applies one update from the accumulated gradients, then leaves the
  // gradients untouched (callers zero them). Throws NumericalError on a
  // non-finite gradient, naming the parameter index.
  void step();
  void zero_grad();
  void set_lr(float lr) { cfg_.lr = lr; }
  float lr() const { return cfg_.lr; }
  int64_t step_count() const { return step_count_; }
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  AdamWConfig cfg_;
  std::vector<std::vector<float>> m_, v_;
  int64_t step_count_ = 0;
};

}  // namespace c3r
