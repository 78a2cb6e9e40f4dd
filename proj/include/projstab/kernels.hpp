// kernels.hpp - data-parallel inner loops (OpenMP) with serial reference twins.
//
// Every parallel kernel here is deterministic: the result is bit-identical
// for any thread count. Row-wise kernels keep each row's accumulation order
// fixed; reductions sum fixed-size blocks and combine the partials serially.
// The kernels::ref twins are plain serial loops kept for tests and the
// benchmark target.
#pragma once

#include <cstddef>
#include <span>

#include "projstab/csr.hpp"

namespace projstab::kernels {

// Thread count used by all parallel kernels; clamped to [1, hardware].
void set_num_threads(int k);
int num_threads();

// y = A*x
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);

// Blocked reduction; thread-count invariant.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

// y += alpha*x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
// x *= alpha
void scale(double alpha, std::span<double> x);
// z = x + alpha*y
void add_scaled(std::span<const double> x, double alpha, std::span<const double> y,
                std::span<double> z);

// Fixed block length for deterministic reductions; exposed so quadrature
// loops elsewhere can use the same scheme.
inline constexpr std::size_t reduction_block = 1024;

// Sums f(i) for i in [0, count) with the same blocked deterministic order the
// other reductions use; f must be pure.
template <class F>
double blocked_sum(std::size_t count, F&& f);

namespace ref {
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
} // namespace ref

} // namespace projstab::kernels

#include "projstab/kernels_impl.hpp"
