#include "amrnmt/kernels.hpp"

#include <atomic>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace amrnmt::kernels {

namespace {

std::atomic<bool> g_parallel{true};

// Work small enough that thread startup dominates stays serial.
constexpr long kMatmulParallelFlops = 1 << 16;
constexpr std::size_t kElemwiseParallelLen = 1 << 15;

bool go_parallel(long work) {
#ifdef _OPENMP
  return g_parallel.load(std::memory_order_relaxed) && work >= kMatmulParallelFlops;
#else
  (void)work;
  return false;
#endif
}

bool go_parallel_len(std::size_t n) {
#ifdef _OPENMP
  return g_parallel.load(std::memory_order_relaxed) && n >= kElemwiseParallelLen;
#else
  (void)n;
  return false;
#endif
}

}  // namespace

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel_enabled(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

namespace serial {

void mm_nn(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    const double* ai = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void mm_nt_acc(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<std::size_t>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

void mm_tn_acc(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double api = a[static_cast<std::size_t>(p) * m + i];
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void vsigmoid(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void vtanh(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

}  // namespace serial

void mm_nn(const double* a, const double* b, double* c, int m, int k, int n) {
  if (!go_parallel(static_cast<long>(m) * k * n)) {
    serial::mm_nn(a, b, c, m, k, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    const double* ai = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void mm_nt_acc(const double* a, const double* b, double* c, int m, int k, int n) {
  if (!go_parallel(static_cast<long>(m) * k * n)) {
    serial::mm_nt_acc(a, b, c, m, k, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<std::size_t>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

void mm_tn_acc(const double* a, const double* b, double* c, int m, int k, int n) {
  if (!go_parallel(static_cast<long>(m) * k * n)) {
    serial::mm_tn_acc(a, b, c, m, k, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double api = a[static_cast<std::size_t>(p) * m + i];
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void vsigmoid(const double* x, double* y, std::size_t n) {
  if (!go_parallel_len(n)) {
    serial::vsigmoid(x, y, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(n); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void vtanh(const double* x, double* y, std::size_t n) {
  if (!go_parallel_len(n)) {
    serial::vtanh(x, y, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(n); ++i) y[i] = std::tanh(x[i]);
}

}  // namespace amrnmt::kernels
