#include "c3r/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "c3r/errors.hpp"
#include "c3r/kernels.hpp"

namespace c3r {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

void TensorNode::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0f);
}

namespace {

std::shared_ptr<TensorNode> make_node(Shape shape, const char* op,
                                      std::vector<std::shared_ptr<TensorNode>> parents) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value.resize(static_cast<size_t>(shape_numel(n->shape)));
  n->op = op;
  for (auto& p : parents)
    if (p->requires_grad) n->requires_grad = true;
  n->parents = std::move(parents);
  return n;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

// Elementwise binary op with analytic partials pa(a,b), pb(a,b).
template <typename F, typename Pa, typename Pb>
Tensor ew_binary(const char* op, const Tensor& a, const Tensor& b, F f, Pa pa, Pb pb) {
  check_same_shape(op, a, b);
  auto n = make_node(a.shape(), op, {a.node(), b.node()});
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& out = n->value;
  kernels::parallel_for_cost(static_cast<int64_t>(out.size()), static_cast<int64_t>(out.size()),
                             [&](int64_t i) { out[static_cast<size_t>(i)] = f(av[static_cast<size_t>(i)], bv[static_cast<size_t>(i)]); });
  if (n->requires_grad) {
    n->backward_fn = [f, pa, pb](TensorNode& self) {
      auto& pa_node = *self.parents[0];
      auto& pb_node = *self.parents[1];
      const size_t m = self.value.size();
      if (pa_node.requires_grad) {
        pa_node.ensure_grad();
        for (size_t i = 0; i < m; ++i)
          pa_node.grad[i] += self.grad[i] * pa(pa_node.value[i], pb_node.value[i]);
      }
      if (pb_node.requires_grad) {
        pb_node.ensure_grad();
        for (size_t i = 0; i < m; ++i)
          pb_node.grad[i] += self.grad[i] * pb(pa_node.value[i], pb_node.value[i]);
      }
    };
  }
  return Tensor::wrap(n);
}

// Elementwise unary op; derivative d(x) receives the input value.
template <typename F, typename D>
Tensor ew_unary(const char* op, const Tensor& a, F f, D d) {
  auto n = make_node(a.shape(), op, {a.node()});
  const auto& av = a.values();
  auto& out = n->value;
  kernels::parallel_for_cost(static_cast<int64_t>(out.size()), static_cast<int64_t>(out.size()),
                             [&](int64_t i) { out[static_cast<size_t>(i)] = f(av[static_cast<size_t>(i)]); });
  if (n->requires_grad) {
    n->backward_fn = [d](TensorNode& self) {
      auto& p = *self.parents[0];
      p.ensure_grad();
      const size_t m = self.value.size();
      for (size_t i = 0; i < m; ++i) p.grad[i] += self.grad[i] * d(p.value[i]);
    };
  }
  return Tensor::wrap(n);
}

std::vector<int64_t> row_major_strides(const Shape& s) {
  std::vector<int64_t> st(s.size());
  int64_t acc = 1;
  for (int i = static_cast<int>(s.size()) - 1; i >= 0; --i) {
    st[static_cast<size_t>(i)] = acc;
    acc *= s[static_cast<size_t>(i)];
  }
  return st;
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = make_node(std::move(shape), "leaf", {});
  n->requires_grad = requires_grad;
  return wrap(n);
}

Tensor Tensor::full(Shape shape, float v, bool requires_grad) {
  auto t = zeros(std::move(shape), requires_grad);
  std::fill(t.values_mut().begin(), t.values_mut().end(), v);
  return t;
}

Tensor Tensor::from_values(Shape shape, std::vector<float> v, bool requires_grad) {
  if (static_cast<int64_t>(v.size()) != shape_numel(shape))
    throw ShapeError("from_values: " + std::to_string(v.size()) + " values for shape " + shape_str(shape));
  auto n = make_node(std::move(shape), "leaf", {});
  n->value = std::move(v);
  n->requires_grad = requires_grad;
  return wrap(n);
}

Tensor Tensor::scalar(float v, bool requires_grad) { return from_values({1}, {v}, requires_grad); }

Tensor Tensor::rand_uniform(Shape shape, float bound, Rng& rng, bool requires_grad) {
  auto t = zeros(std::move(shape), requires_grad);
  for (auto& v : t.values_mut()) v = static_cast<float>(rng.uniform(-bound, bound));
  return t;
}

Tensor Tensor::randn(Shape shape, float sigma, Rng& rng, bool requires_grad) {
  auto t = zeros(std::move(shape), requires_grad);
  for (auto& v : t.values_mut()) v = static_cast<float>(rng.normal(0.0, sigma));
  return t;
}

std::vector<float>& Tensor::grad_mut() {
  node_->ensure_grad();
  return node_->grad;
}

float Tensor::item() const {
  if (numel() != 1) throw ShapeError("item: tensor has " + std::to_string(numel()) + " elements");
  return node_->value[0];
}

void Tensor::set_requires_grad(bool rg) { node_->requires_grad = rg; }

void Tensor::zero_grad() {
  node_->grad.assign(node_->value.size(), 0.0f);
}

bool Tensor::all_finite() const {
  for (float v : node_->value)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor Tensor::detach() const {
  auto n = make_node(node_->shape, "leaf", {});
  n->value = node_->value;
  return wrap(n);
}

// ---- arithmetic ----

Tensor add(const Tensor& a, const Tensor& b) {
  return ew_binary("add", a, b, [](float x, float y) { return x + y; },
                   [](float, float) { return 1.0f; }, [](float, float) { return 1.0f; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return ew_binary("sub", a, b, [](float x, float y) { return x - y; },
                   [](float, float) { return 1.0f; }, [](float, float) { return -1.0f; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return ew_binary("mul", a, b, [](float x, float y) { return x * y; },
                   [](float, float y) { return y; }, [](float x, float) { return x; });
}

Tensor divide(const Tensor& a, const Tensor& b) {
  return ew_binary("div", a, b, [](float x, float y) { return x / y; },
                   [](float, float y) { return 1.0f / y; },
                   [](float x, float y) { return -x / (y * y); });
}

Tensor neg(const Tensor& a) {
  return ew_unary("neg", a, [](float x) { return -x; }, [](float) { return -1.0f; });
}

Tensor add_const(const Tensor& a, float c) {
  return ew_unary("add_const", a, [c](float x) { return x + c; }, [](float) { return 1.0f; });
}

Tensor mul_const(const Tensor& a, float c) {
  return ew_unary("mul_const", a, [c](float x) { return x * c; }, [c](float) { return c; });
}

Tensor scalar_mul(const Tensor& a, const Tensor& s) {
  if (s.numel() != 1) throw ShapeError("scalar_mul: scale must be a scalar, got " + shape_str(s.shape()));
  auto n = make_node(a.shape(), "scalar_mul", {a.node(), s.node()});
  const float sv = s.values()[0];
  const auto& av = a.values();
  auto& out = n->value;
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * sv;
  if (n->requires_grad) {
    n->backward_fn = [](TensorNode& self) {
      auto& pa = *self.parents[0];
      auto& ps = *self.parents[1];
      const float sv = ps.value[0];
      if (pa.requires_grad) {
        pa.ensure_grad();
        for (size_t i = 0; i < self.value.size(); ++i) pa.grad[i] += self.grad[i] * sv;
      }
      if (ps.requires_grad) {
        ps.ensure_grad();
        double acc = 0.0;
        for (size_t i = 0; i < self.value.size(); ++i)
          acc += static_cast<double>(self.grad[i]) * pa.value[i];
        ps.grad[0] += static_cast<float>(acc);
      }
    };
  }
  return Tensor::wrap(n);
}

// ---- matmul ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const int m = a.dim(0), k = a.dim(1), nn = b.dim(1);
  auto n = make_node({m, nn}, "matmul", {a.node(), b.node()});
  kernels::matmul(a.values().data(), b.values().data(), n->value.data(), m, k, nn);
  if (n->requires_grad) {
    n->backward_fn = [m, k, nn](TensorNode& self) {
      auto& pa = *self.parents[0];
      auto& pb = *self.parents[1];
      if (pa.requires_grad) {
        pa.ensure_grad();
        kernels::matmul_bt(self.grad.data(), pb.value.data(), pa.grad.data(), m, nn, k);
      }
      if (pb.requires_grad) {
        pb.ensure_grad();
        kernels::matmul_at(pa.value.data(), self.grad.data(), pb.grad.data(), m, k, nn);
      }
    };
  }
  return Tensor::wrap(n);
}

// ---- shape ops ----

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel())
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  auto n = make_node(std::move(shape), "reshape", {a.node()});
  n->value = a.values();
  if (n->requires_grad) {
    n->backward_fn = [](TensorNode& self) {
      auto& p = *self.parents[0];
      p.ensure_grad();
      for (size_t i = 0; i < self.value.size(); ++i) p.grad[i] += self.grad[i];
    };
  }
  return Tensor::wrap(n);
}

Tensor permute(const Tensor& a, const std::vector<int>& dims) {
  const int r = a.rank();
  if (static_cast<int>(dims.size()) != r)
    throw ShapeError("permute: got " + std::to_string(dims.size()) + " dims for rank " + std::to_string(r));
  Shape out_shape(static_cast<size_t>(r));
  for (int i = 0; i < r; ++i) out_shape[static_cast<size_t>(i)] = a.dim(dims[static_cast<size_t>(i)]);
  auto n = make_node(out_shape, "permute", {a.node()});
  const auto in_strides = row_major_strides(a.shape());
  const auto out_strides = row_major_strides(out_shape);
  const int64_t total = a.numel();
  // forward mapping: position of input element i in the output
  std::vector<int64_t> in_to_out(static_cast<size_t>(total));
  std::vector<int64_t> perm_in_stride(static_cast<size_t>(r));
  for (int i = 0; i < r; ++i) perm_in_stride[static_cast<size_t>(i)] = in_strides[static_cast<size_t>(dims[static_cast<size_t>(i)])];
  const auto& av = a.values();
  auto& out = n->value;
  kernels::parallel_for_cost(total, total, [&](int64_t oi) {
    int64_t rem = oi, ii = 0;
    for (int d = 0; d < r; ++d) {
      int64_t c = rem / out_strides[static_cast<size_t>(d)];
      rem -= c * out_strides[static_cast<size_t>(d)];
      ii += c * perm_in_stride[static_cast<size_t>(d)];
    }
    out[static_cast<size_t>(oi)] = av[static_cast<size_t>(ii)];
    in_to_out[static_cast<size_t>(ii)] = oi;
  });
  if (n->requires_grad) {
    n->backward_fn = [map = std::move(in_to_out)](TensorNode& self) {
      auto& p = *self.parents[0];
      p.ensure_grad();
      for (size_t i = 0; i < p.value.size(); ++i) p.grad[i] += self.grad[static_cast<size_t>(map[i])];
    };
  }
  return Tensor::wrap(n);
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("transpose: expected rank 2, got " + shape_str(a.shape()));
  return permute(a, {1, 0});
}

Tensor concat(const std::vector<Tensor>& ts, int axis) {
  if (ts.empty()) throw ShapeError("concat: empty input list");
  const int r = ts[0].rank();
  if (axis < 0 || axis >= r) throw ShapeError("concat: bad axis " + std::to_string(axis));
  Shape out_shape = ts[0].shape();
  int axis_total = 0;
  for (const auto& t : ts) {
    if (t.rank() != r) throw ShapeError("concat: rank mismatch");
    for (int d = 0; d < r; ++d)
      if (d != axis && t.dim(d) != out_shape[static_cast<size_t>(d)])
        throw ShapeError("concat: shape mismatch " + shape_str(t.shape()) + " vs " + shape_str(ts[0].shape()));
    axis_total += t.dim(axis);
  }
  out_shape[static_cast<size_t>(axis)] = axis_total;
  std::vector<std::shared_ptr<TensorNode>> parents;
  for (const auto& t : ts) parents.push_back(t.node());
  auto n = make_node(out_shape, "concat", std::move(parents));

  int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= out_shape[static_cast<size_t>(d)];
  for (int d = axis + 1; d < r; ++d) inner *= out_shape[static_cast<size_t>(d)];
  const int64_t out_row = static_cast<int64_t>(axis_total) * inner;

  int64_t offset = 0;
  std::vector<int64_t> offsets;
  for (const auto& t : ts) {
    offsets.push_back(offset);
    const int64_t len = static_cast<int64_t>(t.dim(axis)) * inner;
    const auto& src = t.values();
    for (int64_t o = 0; o < outer; ++o)
      std::copy_n(src.data() + o * len, len, n->value.data() + o * out_row + offset);
    offset += len;
  }
  if (n->requires_grad) {
    n->backward_fn = [outer, inner, out_row, offsets, axis](TensorNode& self) {
      for (size_t pi = 0; pi < self.parents.size(); ++pi) {
        auto& p = *self.parents[pi];
        if (!p.requires_grad) continue;
        p.ensure_grad();
        const int64_t len = static_cast<int64_t>(p.shape[static_cast<size_t>(axis)]) * inner;
        for (int64_t o = 0; o < outer; ++o) {
          const float* g = self.grad.data() + o * out_row + offsets[pi];
          float* dst = p.grad.data() + o * len;
          for (int64_t i = 0; i < len; ++i) dst[i] += g[i];
        }
      }
    };
  }
  return Tensor::wrap(n);
}

Tensor slice(const Tensor& a, int axis, int start, int len) {
  const int r = a.rank();
  if (axis < 0 || axis >= r) throw ShapeError("slice: bad axis " + std::to_string(axis));
  if (start < 0 || len <= 0 || start + len > a.dim(axis))
    throw ShapeError("slice: range [" + std::to_string(start) + "," + std::to_string(start + len) +
                     ") out of bounds for axis extent " + std::to_string(a.dim(axis)));
  Shape out_shape = a.shape();
  out_shape[static_cast<size_t>(axis)] = len;
  auto n = make_node(out_shape, "slice", {a.node()});
  int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= a.dim(d);
  for (int d = axis + 1; d < r; ++d) inner *= a.dim(d);
  const int64_t in_row = static_cast<int64_t>(a.dim(axis)) * inner;
  const int64_t out_len = static_cast<int64_t>(len) * inner;
  const int64_t in_off = static_cast<int64_t>(start) * inner;
  const auto& av = a.values();
  for (int64_t o = 0; o < outer; ++o)
    std::copy_n(av.data() + o * in_row + in_off, out_len, n->value.data() + o * out_len);
  if (n->requires_grad) {
    n->backward_fn = [outer, in_row, in_off, out_len](TensorNode& self) {
      auto& p = *self.parents[0];
      p.ensure_grad();
      for (int64_t o = 0; o < outer; ++o) {
        const float* g = self.grad.data() + o * out_len;
        float* dst = p.grad.data() + o * in_row + in_off;
        for (int64_t i = 0; i < out_len; ++i) dst[i] += g[i];
      }
    };
  }
  return Tensor::wrap(n);
}

// ---- nonlinearities ----

Tensor exp_op(const Tensor& a) {
  return ew_unary("exp", a, [](float x) { return std::exp(x); },
                  [](float x) { return std::exp(x); });
}

Tensor log_op(const Tensor& a) {
  return ew_unary("log", a, [](float x) { return std::log(x); },
                  [](float x) { return 1.0f / x; });
}

Tensor sqrt_op(const Tensor& a) {
  return ew_unary("sqrt", a, [](float x) { return std::sqrt(x); },
                  [](float x) { return 0.5f / std::sqrt(x); });
}

Tensor atan2_op(const Tensor& y, const Tensor& x) {
  return ew_binary("atan2", y, x, [](float yy, float xx) { return std::atan2(yy, xx); },
                   [](float yy, float xx) { return xx / (xx * xx + yy * yy); },
                   [](float yy, float xx) { return -yy / (xx * xx + yy * yy); });
}

Tensor gelu(const Tensor& a) {
  constexpr float kInvSqrt2 = 0.70710678118654752440f;
  constexpr float kInvSqrt2Pi = 0.39894228040143267794f;
  return ew_unary("gelu", a,
                  [](float x) { return 0.5f * x * (1.0f + std::erf(x * kInvSqrt2)); },
                  [](float x) {
                    const float cdf = 0.5f * (1.0f + std::erf(x * kInvSqrt2));
                    const float pdf = kInvSqrt2Pi * std::exp(-0.5f * x * x);
                    return cdf + x * pdf;
                  });
}

Tensor clamp_op(const Tensor& a, float lo, float hi) {
  return ew_unary("clamp", a, [lo, hi](float x) { return std::min(std::max(x, lo), hi); },
                  [lo, hi](float x) { return (x > lo && x < hi) ? 1.0f : 0.0f; });
}

// ---- structured ops ----

Tensor softmax_rows(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("softmax_rows: expected rank 2, got " + shape_str(a.shape()));
  const int rows = a.dim(0), cols = a.dim(1);
  auto n = make_node(a.shape(), "softmax", {a.node()});
  const auto& av = a.values();
  auto& out = n->value;
  kernels::parallel_for_cost(rows, static_cast<int64_t>(rows) * cols * 4, [&](int64_t i) {
    const float* x = av.data() + i * cols;
    float* y = out.data() + i * cols;
    float mx = x[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) {
      y[j] = std::exp(x[j] - mx);
      sum += y[j];
    }
    const float inv = static_cast<float>(1.0 / sum);
    for (int j = 0; j < cols; ++j) y[j] *= inv;
  });
  if (n->requires_grad) {
    n->backward_fn = [rows, cols](TensorNode& self) {
      auto& p = *self.parents[0];
      p.ensure_grad();
      for (int i = 0; i < rows; ++i) {
        const float* y = self.value.data() + static_cast<int64_t>(i) * cols;
        const float* dy = self.grad.data() + static_cast<int64_t>(i) * cols;
        float* dx = p.grad.data() + static_cast<int64_t>(i) * cols;
        double dot = 0.0;
        for (int j = 0; j < cols; ++j) dot += static_cast<double>(dy[j]) * y[j];
        for (int j = 0; j < cols; ++j) dx[j] += y[j] * (dy[j] - static_cast<float>(dot));
      }
    };
  }
  return Tensor::wrap(n);
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  if (x.rank() != 2) throw ShapeError("layer_norm: expected rank 2, got " + shape_str(x.shape()));
  const int rows = x.dim(0), cols = x.dim(1);
  if (gamma.numel() != cols || beta.numel() != cols)
    throw ShapeError("layer_norm: gamma/beta must have " + std::to_string(cols) + " elements");
  auto n = make_node(x.shape(), "layer_norm", {x.node(), gamma.node(), beta.node()});
  const auto& xv = x.values();
  const auto& gv = gamma.values();
  const auto& bv = beta.values();
  auto& out = n->value;
  std::vector<float> inv_sigma(static_cast<size_t>(rows));
  std::vector<float> mean(static_cast<size_t>(rows));
  kernels::parallel_for_cost(rows, static_cast<int64_t>(rows) * cols * 4, [&](int64_t i) {
    const float* xr = xv.data() + i * cols;
    float* yr = out.data() + i * cols;
    double m = 0.0;
    for (int j = 0; j < cols; ++j) m += xr[j];
    m /= cols;
    double v = 0.0;
    for (int j = 0; j < cols; ++j) {
      const double d = xr[j] - m;
      v += d * d;
    }
    v /= cols;
    const float is = static_cast<float>(1.0 / std::sqrt(v + eps));
    mean[static_cast<size_t>(i)] = static_cast<float>(m);
    inv_sigma[static_cast<size_t>(i)] = is;
    for (int j = 0; j < cols; ++j)
      yr[j] = (xr[j] - static_cast<float>(m)) * is * gv[static_cast<size_t>(j)] + bv[static_cast<size_t>(j)];
  });
  if (n->requires_grad) {
    n->backward_fn = [rows, cols, mean = std::move(mean), inv_sigma = std::move(inv_sigma)](TensorNode& self) {
      auto& px = *self.parents[0];
      auto& pg = *self.parents[1];
      auto& pb = *self.parents[2];
      if (pg.requires_grad) pg.ensure_grad();
      if (pb.requires_grad) pb.ensure_grad();
      if (px.requires_grad) px.ensure_grad();
      for (int i = 0; i < rows; ++i) {
        const float* xr = px.value.data() + static_cast<int64_t>(i) * cols;
        const float* dy = self.grad.data() + static_cast<int64_t>(i) * cols;
        const float m = mean[static_cast<size_t>(i)];
        const float is = inv_sigma[static_cast<size_t>(i)];
        if (pg.requires_grad || pb.requires_grad) {
          for (int j = 0; j < cols; ++j) {
            const float xhat = (xr[j] - m) * is;
            if (pg.requires_grad) pg.grad[static_cast<size_t>(j)] += dy[j] * xhat;
            if (pb.requires_grad) pb.grad[static_cast<size_t>(j)] += dy[j];
          }
        }
        if (px.requires_grad) {
          // dx = (is/C) * (C*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
          double s1 = 0.0, s2 = 0.0;
          for (int j = 0; j < cols; ++j) {
            const float xhat = (xr[j] - m) * is;
            const float dxhat = dy[j] * pg.value[static_cast<size_t>(j)];
            s1 += dxhat;
            s2 += static_cast<double>(dxhat) * xhat;
          }
          float* dx = px.grad.data() + static_cast<int64_t>(i) * cols;
          for (int j = 0; j < cols; ++j) {
            const float xhat = (xr[j] - m) * is;
            const float dxhat = dy[j] * pg.value[static_cast<size_t>(j)];
            dx[j] += is * (dxhat - static_cast<float>(s1) / cols -
                           xhat * static_cast<float>(s2) / cols);
          }
        }
      }
    };
  }
  return Tensor::wrap(n);
}

// ---- reductions ----

Tensor sum_all(const Tensor& a) {
  auto n = make_node({1}, "sum", {a.node()});
  double acc = 0.0;
  for (float v : a.values()) acc += v;
  n->value[0] = static_cast<float>(acc);
  if (n->requires_grad) {
    n->backward_fn = [](TensorNode& self) {
      auto& p = *self.parents[0];
      p.ensure_grad();
      const float g = self.grad[0];
      for (auto& d : p.grad) d += g;
    };
  }
  return Tensor::wrap(n);
}

Tensor mean_all(const Tensor& a) {
  auto n = make_node({1}, "mean", {a.node()});
  double acc = 0.0;
  for (float v : a.values()) acc += v;
  n->value[0] = static_cast<float>(acc / static_cast<double>(a.numel()));
  if (n->requires_grad) {
    n->backward_fn = [](TensorNode& self) {
      auto& p = *self.parents[0];
      p.ensure_grad();
      const float g = self.grad[0] / static_cast<float>(p.value.size());
      for (auto& d : p.grad) d += g;
    };
  }
  return Tensor::wrap(n);
}

Tensor row_sum(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("row_sum: expected rank 2, got " + shape_str(a.shape()));
  const int rows = a.dim(0), cols = a.dim(1);
  auto n = make_node({rows, 1}, "row_sum", {a.node()});
  const auto& av = a.values();
  kernels::parallel_for_cost(rows, static_cast<int64_t>(rows) * cols, [&](int64_t i) {
    double acc = 0.0;
    const float* x = av.data() + i * cols;
    for (int j = 0; j < cols; ++j) acc += x[j];
    n->value[static_cast<size_t>(i)] = static_cast<float>(acc);
  });
  if (n->requires_grad) {
    n->backward_fn = [rows, cols](TensorNode& self) {
      auto& p = *self.parents[0];
      p.ensure_grad();
      for (int i = 0; i < rows; ++i) {
        const float g = self.grad[static_cast<size_t>(i)];
        float* dst = p.grad.data() + static_cast<int64_t>(i) * cols;
        for (int j = 0; j < cols; ++j) dst[j] += g;
      }
    };
  }
  return Tensor::wrap(n);
}

// ---- trailing-dimension broadcasts ----

namespace {
void check_trailing(const char* op, const Tensor& x, const Tensor& v) {
  if (x.rank() < 1 || v.numel() != x.dim(x.rank() - 1))
    throw ShapeError(std::string(op) + ": vector " + shape_str(v.shape()) +
                     " does not match trailing dim of " + shape_str(x.shape()));
}
}  // namespace

Tensor bias_add(const Tensor& x, const Tensor& b) {
  check_trailing("bias_add", x, b);
  const int cols = x.dim(x.rank() - 1);
  const int64_t rows = x.numel() / cols;
  auto n = make_node(x.shape(), "bias_add", {x.node(), b.node()});
  const auto& xv = x.values();
  const auto& bv = b.values();
  auto& out = n->value;
  kernels::parallel_for_cost(rows, x.numel(), [&](int64_t i) {
    const float* xr = xv.data() + i * cols;
    float* yr = out.data() + i * cols;
    for (int j = 0; j < cols; ++j) yr[j] = xr[j] + bv[static_cast<size_t>(j)];
  });
  if (n->requires_grad) {
    n->backward_fn = [rows, cols](TensorNode& self) {
      auto& px = *self.parents[0];
      auto& pb = *self.parents[1];
      if (px.requires_grad) {
        px.ensure_grad();
        for (size_t i = 0; i < self.value.size(); ++i) px.grad[i] += self.grad[i];
      }
      if (pb.requires_grad) {
        pb.ensure_grad();
        for (int j = 0; j < cols; ++j) {
          double acc = 0.0;
          for (int64_t i = 0; i < rows; ++i) acc += self.grad[static_cast<size_t>(i * cols + j)];
          pb.grad[static_cast<size_t>(j)] += static_cast<float>(acc);
        }
      }
    };
  }
  return Tensor::wrap(n);
}

Tensor col_scale(const Tensor& x, const Tensor& s) {
  check_trailing("col_scale", x, s);
  const int cols = x.dim(x.rank() - 1);
  const int64_t rows = x.numel() / cols;
  auto n = make_node(x.shape(), "col_scale", {x.node(), s.node()});
  const auto& xv = x.values();
  const auto& sv = s.values();
  auto& out = n->value;
  kernels::parallel_for_cost(rows, x.numel(), [&](int64_t i) {
    const float* xr = xv.data() + i * cols;
    float* yr = out.data() + i * cols;
    for (int j = 0; j < cols; ++j) yr[j] = xr[j] * sv[static_cast<size_t>(j)];
  });
  if (n->requires_grad) {
    n->backward_fn = [rows, cols](TensorNode& self) {
      auto& px = *self.parents[0];
      auto& ps = *self.parents[1];
      if (px.requires_grad) {
        px.ensure_grad();
        for (int64_t i = 0; i < rows; ++i)
          for (int j = 0; j < cols; ++j)
            px.grad[static_cast<size_t>(i * cols + j)] +=
                self.grad[static_cast<size_t>(i * cols + j)] * ps.value[static_cast<size_t>(j)];
      }
      if (ps.requires_grad) {
        ps.ensure_grad();
        for (int j = 0; j < cols; ++j) {
          double acc = 0.0;
          for (int64_t i = 0; i < rows; ++i)
            acc += static_cast<double>(self.grad[static_cast<size_t>(i * cols + j)]) *
                   px.value[static_cast<size_t>(i * cols + j)];
          ps.grad[static_cast<size_t>(j)] += static_cast<float>(acc);
        }
      }
    };
  }
  return Tensor::wrap(n);
}

// ---- reverse sweep ----

void backward(const Tensor& root) {
  if (root.numel() != 1) throw ShapeError("backward: root must be scalar, got " + shape_str(root.shape()));
  if (!root.requires_grad()) return;

  // reverse post-order: every consumer precedes its parents
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  struct Frame {
    TensorNode* node;
    size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({root.node().get(), 0});
  seen.insert(root.node().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      TensorNode* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  root.node()->ensure_grad();
  root.node()->grad[0] = 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward_fn) {
      n->ensure_grad();
      n->backward_fn(*n);
    }
  }
}

}  // namespace c3r
