#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "amrnmt/tensor.hpp"

namespace testutil {

/// Reverse-mode gradients against central finite differences (h = 1e-5).
/// `f` must build a scalar loss from the given tensors; it runs once on tape
/// leaves for the reverse-mode pass and twice per element on raw values for
/// the differences. Returns the worst rel. error max|ad-fd| / max(|ad|,|fd|,1e-4).
inline double max_grad_rel_err(
    std::vector<amrnmt::Tensor> params,
    const std::function<amrnmt::Tensor(const std::vector<amrnmt::Tensor>&)>& f, double h = 1e-5) {
  using amrnmt::Tape;
  using amrnmt::Tensor;

  Tape tape;
  std::vector<Tensor> leaves;
  leaves.reserve(params.size());
  for (auto& p : params) leaves.push_back(tape.leaf(p));
  Tensor loss = f(leaves);
  tape.backward(loss);
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (auto& l : leaves) grads.push_back(tape.grad(l));

  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& data = *params[i].data;
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double orig = data[j];
      data[j] = orig + h;
      const double fp = f(params).item();
      data[j] = orig - h;
      const double fm = f(params).item();
      data[j] = orig;
      const double fd = (fp - fm) / (2.0 * h);
      const double ad = (*grads[i].data)[j];
      const double err = std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1e-4});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace testutil
