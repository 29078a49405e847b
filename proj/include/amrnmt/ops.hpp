#pragma once

#include <cstdint>
#include <vector>

#include "amrnmt/tensor.hpp"

namespace amrnmt {

/// Differentiable primitives. Every function evaluates eagerly; when an input
/// carries a tape the result is recorded there for the reverse sweep.

Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
/// x: m×n plus a length-n (or 1×n) vector broadcast over rows.
Tensor add_rowvec(const Tensor& x, const Tensor& v);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double c);

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);

/// Rows become probability distributions over unmasked positions (stabilized
/// by max-subtraction); masked positions are exactly 0. `mask` is row-major
/// with x's extent, nonzero = keep. A fully masked row is an error.
Tensor softmax_rows(const Tensor& x, const std::vector<std::uint8_t>* mask = nullptr);

/// axis 0 stacks rows, axis 1 stacks columns; 1-d tensors concatenate along
/// axis 0 into a longer 1-d tensor. Zero-size parts are dropped.
Tensor concat(const std::vector<Tensor>& parts, int axis);

Tensor slice_cols(const Tensor& x, int c0, int c1);

/// table: V×d, output: len(ids)×d. Gradient scatters into looked-up rows only.
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);

/// x: B×a → (B·times)×a, row b repeated contiguously.
Tensor repeat_rows(const Tensor& x, int times);

/// out[r] = x[indices[r], :]; duplicate indices accumulate gradient.
Tensor gather_rows(const Tensor& x, const std::vector<int>& indices);

/// memory: (B·L)×d, weights: B×L → B×d with out[b] = Σ_i w[b,i]·memory[b·L+i].
Tensor weighted_rows_sum(const Tensor& memory, const Tensor& weights);

/// out[j] = Σ_{i ∈ lists[j]} x[i,:], duplicates summed twice. Serves the
/// per-node incoming/outgoing aggregations of the graph encoder.
Tensor adjacency_sum(const Tensor& x, const std::vector<std::vector<int>>& lists);

/// Scatters the per-example row blocks of x (example b owns rows
/// [offsets[b], offsets[b]+counts[b])) into a (B·max_rows)×d layout padded
/// with zero rows.
Tensor pad_rows(const Tensor& x, const std::vector<int>& offsets, const std::vector<int>& counts,
                int max_rows);

Tensor reshape(const Tensor& x, std::vector<int> shape);

Tensor sum_all(const Tensor& x);

/// Σ_b mask[b]·(−log(max(probs[b, ids[b]], 1e−12))). probs rows must already
/// be distributions (softmax_rows output).
Tensor nll_pick_sum(const Tensor& probs, const std::vector<int>& ids,
                    const std::vector<std::uint8_t>& mask);

/// Inverted-scaling dropout: out = x ⊙ keep / keep_prob, so inference needs
/// no rescaling. The caller samples `keep`.
Tensor dropout_mask_mul(const Tensor& x, const std::vector<std::uint8_t>& keep, double keep_prob);

}  // namespace amrnmt
