#include "c3r/kernels.hpp"

#include <omp.h>

namespace c3r::kernels {

namespace {
ExecMode g_mode = ExecMode::parallel;
}

ExecMode mode() { return g_mode; }
void set_mode(ExecMode m) { g_mode = m; }

void parallel_for(int64_t n, const std::function<void(int64_t)>& fn) {
  parallel_for_cost(n, n, fn);
}

void parallel_for_cost(int64_t n, int64_t total_cost, const std::function<void(int64_t)>& fn) {
  if (g_mode == ExecMode::parallel && total_cost >= kParallelGrain && n > 1) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) fn(i);
  } else {
    for (int64_t i = 0; i < n; ++i) fn(i);
  }
}

namespace {

inline void matmul_row(const float* a, const float* b, float* c, int k, int n, int i) {
  const float* ai = a + static_cast<int64_t>(i) * k;
  float* ci = c + static_cast<int64_t>(i) * n;
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int p = 0; p < k; ++p) acc += static_cast<double>(ai[p]) * b[static_cast<int64_t>(p) * n + j];
    ci[j] = static_cast<float>(acc);
  }
}

inline void matmul_bt_row(const float* a, const float* b, float* c, int n, int k, int i) {
  const float* ai = a + static_cast<int64_t>(i) * n;
  float* ci = c + static_cast<int64_t>(i) * k;
  for (int j = 0; j < k; ++j) {
    const float* bj = b + static_cast<int64_t>(j) * n;
    double acc = 0.0;
    for (int p = 0; p < n; ++p) acc += static_cast<double>(ai[p]) * bj[p];
    ci[j] += static_cast<float>(acc);
  }
}

inline void matmul_at_row(const float* a, const float* b, float* c, int m, int k, int n, int j) {
  float* cj = c + static_cast<int64_t>(j) * n;
  for (int q = 0; q < n; ++q) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i)
      acc += static_cast<double>(a[static_cast<int64_t>(i) * k + j]) * b[static_cast<int64_t>(i) * n + q];
    cj[q] += static_cast<float>(acc);
  }
}

}  // namespace

void matmul_serial(const float* a, const float* b, float* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) matmul_row(a, b, c, k, n, i);
}

void matmul_parallel(const float* a, const float* b, float* c, int m, int k, int n) {
  const int64_t cost = static_cast<int64_t>(m) * k * n;
  if (cost < kParallelGrain || m == 1) {
    matmul_serial(a, b, c, m, k, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) matmul_row(a, b, c, k, n, i);
}

void matmul(const float* a, const float* b, float* c, int m, int k, int n) {
  if (g_mode == ExecMode::parallel)
    matmul_parallel(a, b, c, m, k, n);
  else
    matmul_serial(a, b, c, m, k, n);
}

void matmul_bt_serial(const float* a, const float* b, float* c, int m, int n, int k) {
  for (int i = 0; i < m; ++i) matmul_bt_row(a, b, c, n, k, i);
}

void matmul_bt_parallel(const float* a, const float* b, float* c, int m, int n, int k) {
  const int64_t cost = static_cast<int64_t>(m) * k * n;
  if (cost < kParallelGrain || m == 1) {
    matmul_bt_serial(a, b, c, m, n, k);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) matmul_bt_row(a, b, c, n, k, i);
}

void matmul_bt(const float* a, const float* b, float* c, int m, int n, int k) {
  if (g_mode == ExecMode::parallel)
    matmul_bt_parallel(a, b, c, m, n, k);
  else
    matmul_bt_serial(a, b, c, m, n, k);
}

void matmul_at_serial(const float* a, const float* b, float* c, int m, int k, int n) {
  for (int j = 0; j < k; ++j) matmul_at_row(a, b, c, m, k, n, j);
}

void matmul_at_parallel(const float* a, const float* b, float* c, int m, int k, int n) {
  const int64_t cost = static_cast<int64_t>(m) * k * n;
  if (cost < kParallelGrain || k == 1) {
    matmul_at_serial(a, b, c, m, k, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int j = 0; j < k; ++j) matmul_at_row(a, b, c, m, k, n, j);
}

void matmul_at(const float* a, const float* b, float* c, int m, int k, int n) {
  if (g_mode == ExecMode::parallel)
    matmul_at_parallel(a, b, c, m, k, n);
  else
    matmul_at_serial(a, b, c, m, k, n);
}

}  // namespace c3r::kernels
