// Times the serial reference kernels against the OpenMP ones and verifies
// they produce identical bits. Run with OMP_NUM_THREADS set to taste.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "amrnmt/kernels.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> m(static_cast<std::size_t>(rows) * cols);
  for (auto& v : m) v = dist(rng);
  return m;
}

template <class F>
double time_best_of(int reps, F&& fn) {
  double best = 1e100;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    fn();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

bool identical(const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

struct KernelCase {
  const char* name;
  void (*serial)(const double*, const double*, double*, int, int, int);
  void (*parallel)(const double*, const double*, double*, int, int, int);
  bool accumulate;
};

}  // namespace

int main() {
  using namespace amrnmt;

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (built without OpenMP)\n");
#endif
  std::printf("%-10s %6s %12s %12s %9s  %s\n", "kernel", "n", "serial GF/s", "openmp GF/s",
              "speedup", "bitwise");

  const KernelCase cases[] = {
      {"mm_nn", kernels::serial::mm_nn, kernels::mm_nn, false},
      {"mm_nt_acc", kernels::serial::mm_nt_acc, kernels::mm_nt_acc, true},
      {"mm_tn_acc", kernels::serial::mm_tn_acc, kernels::mm_tn_acc, true},
  };

  std::mt19937_64 rng(7);
  bool all_ok = true;
  for (const auto& kc : cases) {
    for (int n : {128, 256, 512}) {
      const auto a = random_matrix(rng, n, n);
      const auto b = random_matrix(rng, n, n);
      std::vector<double> cs(static_cast<std::size_t>(n) * n, 0.0);
      std::vector<double> cp(static_cast<std::size_t>(n) * n, 0.0);
      const int reps = n <= 256 ? 5 : 3;

      const double ts = time_best_of(reps, [&] {
        if (kc.accumulate) std::fill(cs.begin(), cs.end(), 0.0);
        kc.serial(a.data(), b.data(), cs.data(), n, n, n);
      });
      const double tp = time_best_of(reps, [&] {
        if (kc.accumulate) std::fill(cp.begin(), cp.end(), 0.0);
        kc.parallel(a.data(), b.data(), cp.data(), n, n, n);
      });

      const double flops = 2.0 * n * double(n) * n;
      const bool same = identical(cs, cp);
      all_ok = all_ok && same;
      std::printf("%-10s %6d %12.2f %12.2f %8.2fx  %s\n", kc.name, n, flops / ts / 1e9,
                  flops / tp / 1e9, ts / tp, same ? "yes" : "NO");
    }
  }
  if (!all_ok) {
    std::printf("FAIL: parallel kernels diverged from the serial reference\n");
    return 1;
  }
  return 0;
}
