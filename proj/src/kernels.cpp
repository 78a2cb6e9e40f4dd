#include "projstab/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace projstab::kernels {

namespace {
std::atomic<int> g_threads{1};

int hardware_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}
} // namespace

void set_num_threads(int k) {
    g_threads.store(std::clamp(k, 1, hardware_threads()));
}

int num_threads() { return g_threads.load(); }

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
    if (static_cast<index_t>(x.size()) != a.n_cols ||
        static_cast<index_t>(y.size()) != a.n_rows)
        throw std::invalid_argument("spmv: dimension mismatch");
    const index_t n = a.n_rows;
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (index_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (index_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
            s += a.values[k] * x[a.col_idx[k]];
        y[i] = s;
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    return blocked_sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    const std::size_t n = x.size();
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, std::span<double> x) {
    const std::size_t n = x.size();
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void add_scaled(std::span<const double> x, double alpha, std::span<const double> y,
                std::span<double> z) {
    const std::size_t n = x.size();
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (std::size_t i = 0; i < n; ++i) z[i] = x[i] + alpha * y[i];
}

namespace ref {

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
    for (index_t i = 0; i < a.n_rows; ++i) {
        double s = 0.0;
        for (index_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
            s += a.values[k] * x[a.col_idx[k]];
        y[i] = s;
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

} // namespace ref

} // namespace projstab::kernels
