#pragma once

#include <cstdint>
#include <functional>

namespace c3r::kernels {

// Execution mode for the data-parallel kernels. Both paths assign every
// output element to exactly one task with a fixed inner summation order,
// so serial and parallel results are bit-identical and independent of the
// thread count. The serial path is the reference the tests compare against.
enum class ExecMode { serial, parallel };

ExecMode mode();
void set_mode(ExecMode m);

// Grain size below which the parallel path falls back to the serial loop.
inline constexpr int64_t kParallelGrain = 1 << 14;

// Runs fn(i) for i in [0, n). Iterations must touch disjoint state.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

// Like parallel_for but with an explicit cost hint (total scalar ops);
// cheap loops stay serial to avoid fork overhead.
void parallel_for_cost(int64_t n, int64_t total_cost, const std::function<void(int64_t)>& fn);

// c[m,n] = a[m,k] * b[k,n], accumulated in double per output element.
void matmul_serial(const float* a, const float* b, float* c, int m, int k, int n);
void matmul_parallel(const float* a, const float* b, float* c, int m, int k, int n);
void matmul(const float* a, const float* b, float* c, int m, int k, int n);

// c[m,k] += a[m,n] * b[k,n]   (a * b^T; gradient helper)
void matmul_bt_serial(const float* a, const float* b, float* c, int m, int n, int k);
void matmul_bt_parallel(const float* a, const float* b, float* c, int m, int n, int k);
void matmul_bt(const float* a, const float* b, float* c, int m, int n, int k);

// c[k,n] += a[m,k]^T * b[m,n]  (a^T * b; gradient helper)
void matmul_at_serial(const float* a, const float* b, float* c, int m, int k, int n);
void matmul_at_parallel(const float* a, const float* b, float* c, int m, int k, int n);
void matmul_at(const float* a, const float* b, float* c, int m, int k, int n);

}  // namespace c3r::kernels
