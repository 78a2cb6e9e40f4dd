// kernels_impl.hpp - template bodies for kernels.hpp.
#pragma once

#include <vector>

namespace projstab::kernels {

template <class F>
double blocked_sum(std::size_t count, F&& f) {
    const std::size_t nblocks = (count + reduction_block - 1) / reduction_block;
    if (nblocks <= 1) {
        double s = 0.0;
        for (std::size_t i = 0; i < count; ++i) s += f(i);
        return s;
    }
    std::vector<double> partial(nblocks, 0.0);
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(nblocks); ++blk) {
        const std::size_t lo = static_cast<std::size_t>(blk) * reduction_block;
        const std::size_t hi = std::min(lo + reduction_block, count);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += f(i);
        partial[blk] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

} // namespace projstab::kernels
