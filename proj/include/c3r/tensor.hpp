#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "c3r/rng.hpp"

namespace c3r {

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorNode {
  Shape shape;
  std::vector<float> value;
  std::vector<float> grad;  // allocated lazily, same size as value
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  void ensure_grad();
};

// Dense row-major f32 tensor with reverse-mode autodiff. Value semantics
// over a shared node: copies alias the same storage, ops build a fresh
// node referencing its parents. Reductions and matmul accumulate in
// double; every kernel assigns each output element to one task, so
// results are bit-reproducible for any thread count.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float v, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<float> v, bool requires_grad = false);
  static Tensor scalar(float v, bool requires_grad = false);
  // Uniform in [-bound, bound].
  static Tensor rand_uniform(Shape shape, float bound, Rng& rng, bool requires_grad = false);
  static Tensor randn(Shape shape, float sigma, Rng& rng, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int64_t numel() const { return static_cast<int64_t>(node_->value.size()); }

  const std::vector<float>& values() const { return node_->value; }
  std::vector<float>& values_mut() { return node_->value; }
  const std::vector<float>& grad() const { return node_->grad; }
  std::vector<float>& grad_mut();
  float item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool rg);
  void zero_grad();

  bool all_finite() const;
  // Frozen copy of the values, detached from any graph.
  Tensor detach() const;

  std::shared_ptr<TensorNode> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<TensorNode> n) {
    Tensor t;
    t.node_ = std::move(n);
    return t;
  }

 private:
  std::shared_ptr<TensorNode> node_;
};

// ---- primitive ops (forward + exact analytic backward) ----

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor divide(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);

Tensor add_const(const Tensor& a, float c);
Tensor mul_const(const Tensor& a, float c);

// Elementwise scaling by a scalar (shape {1}) tensor; gradient flows to both.
Tensor scalar_mul(const Tensor& a, const Tensor& s);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor reshape(const Tensor& a, Shape shape);
Tensor transpose(const Tensor& a);                       // 2-D
Tensor permute(const Tensor& a, const std::vector<int>& dims);
Tensor concat(const std::vector<Tensor>& ts, int axis);
Tensor slice(const Tensor& a, int axis, int start, int len);

Tensor exp_op(const Tensor& a);
Tensor log_op(const Tensor& a);
Tensor sqrt_op(const Tensor& a);
Tensor atan2_op(const Tensor& y, const Tensor& x);
Tensor gelu(const Tensor& a);
Tensor clamp_op(const Tensor& a, float lo, float hi);    // straight-through outside range? no: zero grad outside

Tensor softmax_rows(const Tensor& a);                    // softmax along last axis of 2-D
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = 1e-5f);

Tensor sum_all(const Tensor& a);                         // -> scalar, f64 accumulation
Tensor mean_all(const Tensor& a);
Tensor row_sum(const Tensor& a);                         // (N,C) -> (N,1)

Tensor bias_add(const Tensor& x, const Tensor& b);       // trailing-dim broadcast add
Tensor col_scale(const Tensor& x, const Tensor& s);      // trailing-dim broadcast multiply

// Reverse-mode sweep from a scalar root. Gradients accumulate into every
// requires_grad leaf reachable from root; each node is visited once.
void backward(const Tensor& root);

}  // namespace c3r
