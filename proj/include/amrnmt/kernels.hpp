#pragma once

#include <cstddef>

namespace amrnmt::kernels {

// Serial reference matrix kernels. Dimension names always describe the
// logical product: the output is m×n with contraction length k.
//
// The OpenMP variants below produce bitwise-identical results: each output
// element is owned by exactly one thread and its accumulation order over the
// contraction index is the same as in the serial loop.
namespace serial {

// c = a·b           a: m×k, b: k×n
void mm_nn(const double* a, const double* b, double* c, int m, int k, int n);
// c += a·bᵀ         a: m×k, b: n×k
void mm_nt_acc(const double* a, const double* b, double* c, int m, int k, int n);
// c += aᵀ·b         a: k×m, b: k×n
void mm_tn_acc(const double* a, const double* b, double* c, int m, int k, int n);

void vsigmoid(const double* x, double* y, std::size_t n);
void vtanh(const double* x, double* y, std::size_t n);

}  // namespace serial

// Runtime toggle for the OpenMP paths (on by default). Small problems fall
// back to the serial loops regardless; results are identical either way.
bool parallel_enabled();
void set_parallel_enabled(bool on);

void mm_nn(const double* a, const double* b, double* c, int m, int k, int n);
void mm_nt_acc(const double* a, const double* b, double* c, int m, int k, int n);
void mm_tn_acc(const double* a, const double* b, double* c, int m, int k, int n);

void vsigmoid(const double* x, double* y, std::size_t n);
void vtanh(const double* x, double* y, std::size_t n);

}  // namespace amrnmt::kernels
