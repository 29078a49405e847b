// The OpenMP kernels must agree bit for bit with the serial reference.

#include <doctest.h>

#include "amrnmt/kernels.hpp"
#include "amrnmt/rng.hpp"

using namespace amrnmt;

namespace {

std::vector<double> rand_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("parallel matmul kernels are bitwise identical to serial") {
  auto rng = make_rng(99);
  kernels::set_parallel_enabled(true);
  // Sizes straddle the parallel dispatch threshold, including ragged shapes.
  const int dims[][3] = {{1, 1, 1},   {3, 5, 2},    {17, 31, 13},  {64, 64, 64},
                         {65, 33, 129}, {128, 1, 128}, {1, 300, 400}, {96, 211, 77}};
  for (const auto& d : dims) {
    const int m = d[0], k = d[1], n = d[2];
    CAPTURE(m);
    CAPTURE(k);
    CAPTURE(n);
    const auto a = rand_vec(rng, static_cast<std::size_t>(m) * k);
    const auto b = rand_vec(rng, static_cast<std::size_t>(k) * n);
    const auto bt = rand_vec(rng, static_cast<std::size_t>(n) * k);
    const auto at = rand_vec(rng, static_cast<std::size_t>(k) * m);
    const auto seedc = rand_vec(rng, static_cast<std::size_t>(m) * n);

    std::vector<double> cs(static_cast<std::size_t>(m) * n), cp(cs);
    kernels::serial::mm_nn(a.data(), b.data(), cs.data(), m, k, n);
    kernels::mm_nn(a.data(), b.data(), cp.data(), m, k, n);
    CHECK(cs == cp);

    cs = seedc;
    cp = seedc;
    kernels::serial::mm_nt_acc(a.data(), bt.data(), cs.data(), m, k, n);
    kernels::mm_nt_acc(a.data(), bt.data(), cp.data(), m, k, n);
    CHECK(cs == cp);

    cs = seedc;
    cp = seedc;
    kernels::serial::mm_tn_acc(at.data(), b.data(), cs.data(), m, k, n);
    kernels::mm_tn_acc(at.data(), b.data(), cp.data(), m, k, n);
    CHECK(cs == cp);
  }
}

TEST_CASE("elementwise kernels are bitwise identical to serial") {
  auto rng = make_rng(100);
  kernels::set_parallel_enabled(true);
  for (std::size_t n : {std::size_t(1), std::size_t(1000), std::size_t(1) << 16}) {
    const auto x = rand_vec(rng, n);
    std::vector<double> ys(n), yp(n);
    kernels::serial::vsigmoid(x.data(), ys.data(), n);
    kernels::vsigmoid(x.data(), yp.data(), n);
    CHECK(ys == yp);
    kernels::serial::vtanh(x.data(), ys.data(), n);
    kernels::vtanh(x.data(), yp.data(), n);
    CHECK(ys == yp);
  }
}

TEST_CASE("disabling the parallel path leaves results unchanged") {
  auto rng = make_rng(101);
  const int m = 80, k = 80, n = 80;
  const auto a = rand_vec(rng, static_cast<std::size_t>(m) * k);
  const auto b = rand_vec(rng, static_cast<std::size_t>(k) * n);
  std::vector<double> c1(static_cast<std::size_t>(m) * n), c2(c1);
  kernels::set_parallel_enabled(false);
  kernels::mm_nn(a.data(), b.data(), c1.data(), m, k, n);
  kernels::set_parallel_enabled(true);
  kernels::mm_nn(a.data(), b.data(), c2.data(), m, k, n);
  CHECK(c1 == c2);
}
