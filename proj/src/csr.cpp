#include "projstab/csr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace projstab {

double CsrMatrix::at(index_t i, index_t j) const {
    const auto begin = col_idx.begin() + row_ptr[i];
    const auto end = col_idx.begin() + row_ptr[i + 1];
    const auto it = std::lower_bound(begin, end, j);
    if (it == end || *it != j) return 0.0;
    return values[static_cast<std::size_t>(it - col_idx.begin())];
}

void CsrMatrix::check_structure() const {
    if (row_ptr.size() != static_cast<std::size_t>(n_rows) + 1)
        throw std::runtime_error("csr: row_ptr size mismatch");
    if (row_ptr.front() != 0 || row_ptr.back() != nnz())
        throw std::runtime_error("csr: row_ptr endpoints invalid");
    for (index_t i = 0; i < n_rows; ++i) {
        if (row_ptr[i] > row_ptr[i + 1])
            throw std::runtime_error("csr: row_ptr not monotone");
        for (index_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            if (col_idx[k] < 0 || col_idx[k] >= n_cols)
                throw std::runtime_error("csr: column index out of range");
            if (k > row_ptr[i] && col_idx[k] <= col_idx[k - 1])
                throw std::runtime_error("csr: columns not sorted/unique");
        }
    }
}

CsrMatrix csr_from_pattern(index_t n_rows, index_t n_cols,
                           const std::vector<std::vector<index_t>>& row_cols) {
    CsrMatrix m;
    m.n_rows = n_rows;
    m.n_cols = n_cols;
    m.row_ptr.assign(static_cast<std::size_t>(n_rows) + 1, 0);
    std::size_t nnz = 0;
    for (index_t i = 0; i < n_rows; ++i) {
        nnz += row_cols[i].size();
        m.row_ptr[i + 1] = static_cast<index_t>(nnz);
    }
    m.col_idx.reserve(nnz);
    for (index_t i = 0; i < n_rows; ++i)
        m.col_idx.insert(m.col_idx.end(), row_cols[i].begin(), row_cols[i].end());
    m.values.assign(nnz, 0.0);
    return m;
}

CsrMatrix csr_transpose(const CsrMatrix& a) {
    CsrMatrix t;
    t.n_rows = a.n_cols;
    t.n_cols = a.n_rows;
    t.row_ptr.assign(static_cast<std::size_t>(a.n_cols) + 1, 0);
    for (index_t k = 0; k < a.nnz(); ++k) t.row_ptr[a.col_idx[k] + 1]++;
    for (index_t i = 0; i < t.n_rows; ++i) t.row_ptr[i + 1] += t.row_ptr[i];
    t.col_idx.resize(a.values.size());
    t.values.resize(a.values.size());
    std::vector<index_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
    for (index_t i = 0; i < a.n_rows; ++i) {
        for (index_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
            const index_t pos = cursor[a.col_idx[k]]++;
            t.col_idx[pos] = i;
            t.values[pos] = a.values[k];
        }
    }
    return t;
}

CsrMatrix csr_add(double alpha, const CsrMatrix& a, double beta, const CsrMatrix& b) {
    if (a.n_rows != b.n_rows || a.n_cols != b.n_cols || a.nnz() != b.nnz() ||
        a.row_ptr != b.row_ptr || a.col_idx != b.col_idx)
        throw std::runtime_error("csr_add: sparsity patterns differ");
    CsrMatrix c = a;
    for (std::size_t k = 0; k < c.values.size(); ++k)
        c.values[k] = alpha * a.values[k] + beta * b.values[k];
    return c;
}

double csr_asymmetry(const CsrMatrix& a) {
    double max_abs = 0.0;
    for (double v : a.values) max_abs = std::max(max_abs, std::abs(v));
    if (max_abs == 0.0) return 0.0;
    double worst = 0.0;
    for (index_t i = 0; i < a.n_rows; ++i)
        for (index_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
            worst = std::max(worst, std::abs(a.values[k] - a.at(a.col_idx[k], i)));
    return worst / max_abs;
}

CsrMatrix csr_block_diag2(const CsrMatrix& a) {
    CsrMatrix m;
    m.n_rows = 2 * a.n_rows;
    m.n_cols = 2 * a.n_cols;
    m.row_ptr.reserve(static_cast<std::size_t>(m.n_rows) + 1);
    m.col_idx.reserve(2 * a.values.size());
    m.values.reserve(2 * a.values.size());
    m.row_ptr.push_back(0);
    for (int block = 0; block < 2; ++block) {
        const index_t col_off = block * a.n_cols;
        for (index_t i = 0; i < a.n_rows; ++i) {
            for (index_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
                m.col_idx.push_back(a.col_idx[k] + col_off);
                m.values.push_back(a.values[k]);
            }
            m.row_ptr.push_back(static_cast<index_t>(m.col_idx.size()));
        }
    }
    return m;
}

} // namespace projstab
