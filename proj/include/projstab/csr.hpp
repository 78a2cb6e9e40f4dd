// csr.hpp - compressed sparse row storage for the assembled operators.
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace projstab {

using index_t = std::int32_t;

// CSR matrix. Column indices are sorted and unique within each row;
// row_ptr is monotone with row_ptr[n_rows] == values.size().
struct CsrMatrix {
    index_t n_rows = 0;
    index_t n_cols = 0;
    std::vector<index_t> row_ptr;
    std::vector<index_t> col_idx;
    std::vector<double> values;

    index_t nnz() const { return static_cast<index_t>(values.size()); }

    // Looks up entry (i, j); zero if not stored.
    double at(index_t i, index_t j) const;

    void check_structure() const;
};

// Builds a CSR matrix from a fixed sparsity pattern given as per-row sorted
// column lists; values start at zero.
CsrMatrix csr_from_pattern(index_t n_rows, index_t n_cols,
                           const std::vector<std::vector<index_t>>& row_cols);

CsrMatrix csr_transpose(const CsrMatrix& a);

// c = alpha*a + beta*b; a and b must share the same sparsity pattern.
CsrMatrix csr_add(double alpha, const CsrMatrix& a, double beta, const CsrMatrix& b);

// Relative off-diagonal asymmetry max|A_ij - A_ji| / max|A_ij|.
double csr_asymmetry(const CsrMatrix& a);

// 2x2 block-diagonal replication [[a,0],[0,a]] used to lift scalar operators
// to vector fields stored component-major.
CsrMatrix csr_block_diag2(const CsrMatrix& a);

} // namespace projstab
