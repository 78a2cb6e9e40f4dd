// dense.hpp - dense direct solver used as the reference path for oracle tests.
#pragma once

#include <span>
#include <vector>

#include "projstab/csr.hpp"

namespace projstab {

// Row-major dense matrix, capped at 500x500 by dense_oracle_solve.
struct DenseMatrix {
    index_t n_rows = 0;
    index_t n_cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(index_t rows, index_t cols)
        : n_rows(rows), n_cols(cols),
          data(static_cast<std::size_t>(rows) * cols, 0.0) {}

    double& at(index_t i, index_t j) { return data[static_cast<std::size_t>(i) * n_cols + j]; }
    double at(index_t i, index_t j) const {
        return data[static_cast<std::size_t>(i) * n_cols + j];
    }
};

DenseMatrix to_dense(const CsrMatrix& a);

// Direct factorization solve. With allow_pseudo_inverse the minimal-norm
// least-squares solution is returned (rank-deficient systems such as the
// constant-nullspace pressure operators); otherwise a singular matrix is an
// error. Dimension capped at 500.
std::vector<double> dense_oracle_solve(const DenseMatrix& a, std::span<const double> b,
                                       bool allow_pseudo_inverse = false);

} // namespace projstab
