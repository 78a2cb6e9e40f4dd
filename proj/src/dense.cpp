#include "projstab/dense.hpp"

#include <stdexcept>

#include <Eigen/Dense>

namespace projstab {

DenseMatrix to_dense(const CsrMatrix& a) {
    DenseMatrix d(a.n_rows, a.n_cols);
    for (index_t i = 0; i < a.n_rows; ++i)
        for (index_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
            d.at(i, a.col_idx[k]) = a.values[k];
    return d;
}

std::vector<double> dense_oracle_solve(const DenseMatrix& a, std::span<const double> b,
                                       bool allow_pseudo_inverse) {
    if (a.n_rows != a.n_cols)
        throw std::invalid_argument("dense_oracle_solve: matrix not square");
    if (a.n_rows > 500)
        throw std::invalid_argument("dense_oracle_solve: dimension exceeds 500");
    if (static_cast<index_t>(b.size()) != a.n_rows)
        throw std::invalid_argument("dense_oracle_solve: rhs dimension mismatch");

    using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const Mat> m(a.data.data(), a.n_rows, a.n_cols);
    Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));

    Eigen::VectorXd x;
    if (allow_pseudo_inverse) {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m);
        x = cod.solve(rhs);
    } else {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
        if (!lu.isInvertible())
            throw std::runtime_error(
                "dense_oracle_solve: singular matrix (pseudo-inverse not requested)");
        x = lu.solve(rhs);
    }
    return std::vector<double>(x.data(), x.data() + x.size());
}

} // namespace projstab
