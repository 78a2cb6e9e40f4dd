#include "projstab/solve.hpp"

#include <cmath>

#include "projstab/kernels.hpp"

namespace projstab {

void remove_weighted_mean(std::span<double> x, std::span<const double> weights) {
    if (x.empty()) return;
    double num = 0.0, den = 0.0;
    if (weights.empty()) {
        num = kernels::blocked_sum(x.size(), [&](std::size_t i) { return x[i]; });
        den = static_cast<double>(x.size());
    } else {
        num = kernels::dot(weights, x);
        den = kernels::blocked_sum(weights.size(), [&](std::size_t i) { return weights[i]; });
    }
    const double mean = num / den;
    for (double& v : x) v -= mean;
}

namespace {

void remove_uniform_mean(std::span<double> x) {
    const double mean =
        kernels::blocked_sum(x.size(), [&](std::size_t i) { return x[i]; }) /
        static_cast<double>(x.size());
    for (double& v : x) v -= mean;
}

using ApplyFn = std::function<void(std::span<const double>, std::span<double>)>;

std::vector<double> cg_core(index_t n, const ApplyFn& apply, std::span<const double> diag,
                            std::span<const double> b, const SolverConfig& cfg,
                            SolveStats* stats, const CgOptions& options) {
    if (static_cast<index_t>(b.size()) != n)
        throw SolverError("cg: right-hand side dimension mismatch", 0, 0.0);
    if (!(cfg.rel_tolerance > 0.0 && cfg.rel_tolerance < 1.0))
        throw SolverError("cg: rel_tolerance out of (0,1)", 0, 0.0);
    if (cfg.max_iterations < 1)
        throw SolverError("cg: max_iterations must be >= 1", 0, 0.0);

    std::vector<double> rhs(b.begin(), b.end());
    if (cfg.deflate_constants) remove_uniform_mean(rhs);

    std::vector<double> x(n, 0.0);
    if (!options.initial_guess.empty()) {
        if (static_cast<index_t>(options.initial_guess.size()) != n)
            throw SolverError("cg: initial guess dimension mismatch", 0, 0.0);
        x.assign(options.initial_guess.begin(), options.initial_guess.end());
    }

    const double bnorm = kernels::norm2(rhs);
    auto finish = [&](int iters, double rel) {
        if (cfg.deflate_constants) remove_weighted_mean(x, cfg.deflation_weights);
        if (stats) {
            stats->iterations = iters;
            stats->relative_residual = rel;
        }
        return x;
    };
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return finish(0, 0.0);
    }

    std::vector<double> r(n), z(n), p(n), ap(n);
    apply(x, ap);
    for (index_t i = 0; i < n; ++i) r[i] = rhs[i] - ap[i];
    if (cfg.deflate_constants) remove_uniform_mean(r);

    const bool precond = cfg.jacobi && !diag.empty();
    auto apply_precond = [&](std::span<const double> in, std::span<double> out) {
        if (precond)
            for (index_t i = 0; i < n; ++i) out[i] = in[i] / diag[i];
        else
            std::copy(in.begin(), in.end(), out.begin());
    };

    apply_precond(r, z);
    p = z;
    double rz = kernels::dot(r, z);
    double rel = kernels::norm2(r) / bnorm;
    if (rel <= cfg.rel_tolerance) return finish(0, rel);

    for (int it = 1; it <= cfg.max_iterations; ++it) {
        apply(p, ap);
        const double pap = kernels::dot(p, ap);
        if (pap <= 0.0)
            throw SolverError("cg: operator not positive definite on the Krylov space",
                              it, rel);
        const double alpha = rz / pap;
        kernels::axpy(alpha, p, x);
        kernels::axpy(-alpha, ap, r);
        if (cfg.deflate_constants && it % 50 == 0) remove_uniform_mean(r);

        rel = kernels::norm2(r) / bnorm;
        if (options.on_iteration) options.on_iteration(it, x);
        if (rel <= cfg.rel_tolerance) return finish(it, rel);

        apply_precond(r, z);
        const double rz_next = kernels::dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (index_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw SolverError("cg: no convergence within max_iterations (relative residual " +
                          std::to_string(rel) + ")",
                      cfg.max_iterations, rel);
}

} // namespace

std::vector<double> cg_solve(const CsrMatrix& a, std::span<const double> b,
                             const SolverConfig& cfg, SolveStats* stats,
                             const CgOptions& options) {
    if (a.n_rows != a.n_cols)
        throw SolverError("cg: matrix not square", 0, 0.0);
    std::vector<double> diag;
    if (cfg.jacobi) {
        diag.resize(a.n_rows);
        for (index_t i = 0; i < a.n_rows; ++i) diag[i] = a.at(i, i);
    }
    return cg_core(
        a.n_rows,
        [&](std::span<const double> in, std::span<double> out) { kernels::spmv(a, in, out); },
        diag, b, cfg, stats, options);
}

std::vector<double> cg_solve_operator(index_t n, const ApplyFn& apply,
                                      std::span<const double> b, const SolverConfig& cfg,
                                      SolveStats* stats, const CgOptions& options) {
    return cg_core(n, apply, {}, b, cfg, stats, options);
}

std::pair<std::vector<double>, std::vector<double>> schur_stokes_solve(
    const CsrMatrix& a_v, const CsrMatrix& divergence, const CsrMatrix& pressure_stiffness,
    double nu, double delta, std::span<const double> rhs_v, const SolverConfig& cfg,
    SolveStats* stats) {
    if (delta <= 0.0)
        throw SolverError("schur_stokes_solve: delta must be positive", 0, 0.0);
    const index_t nv = a_v.n_rows;
    const index_t np = pressure_stiffness.n_rows;
    if (static_cast<index_t>(rhs_v.size()) != nv)
        throw SolverError("schur_stokes_solve: rhs dimension mismatch", 0, 0.0);

    const CsrMatrix div_t = csr_transpose(divergence);

    SolverConfig inner = cfg;
    inner.deflate_constants = false;
    inner.deflation_weights.clear();
    inner.rel_tolerance = std::max(cfg.rel_tolerance * 1e-2, 1e-14);

    long inner_iterations = 0;
    auto velocity_solve = [&](std::span<const double> rhs) {
        SolveStats s;
        std::vector<double> scaled(rhs.begin(), rhs.end());
        kernels::scale(1.0 / nu, scaled);
        auto x = cg_solve(a_v, scaled, inner, &s);
        inner_iterations += s.iterations;
        return x;
    };

    // Schur operator on pressures: S p = D (nu A_v)^-1 D^T p + delta L_p p.
    std::vector<double> tmp_v(nv), tmp_p(np);
    auto apply_schur = [&](std::span<const double> p, std::span<double> out) {
        if (nv > 0) {
            kernels::spmv(div_t, p, tmp_v);
            const auto u = velocity_solve(tmp_v);
            kernels::spmv(divergence, u, std::span<double>(out.data(), out.size()));
        } else {
            std::fill(out.begin(), out.end(), 0.0);
        }
        kernels::spmv(pressure_stiffness, p, tmp_p);
        kernels::axpy(delta, tmp_p, out);
    };

    // rhs_p = -D (nu A_v)^-1 rhs_v
    std::vector<double> rhs_p(np, 0.0);
    if (nv > 0) {
        const auto u0 = velocity_solve(rhs_v);
        kernels::spmv(divergence, u0, rhs_p);
        kernels::scale(-1.0, rhs_p);
    }

    SolverConfig outer = cfg;
    outer.deflate_constants = true;
    SolveStats outer_stats;
    auto pressure = cg_solve_operator(np, apply_schur, rhs_p, outer, &outer_stats);

    // Back-substitution: u = (nu A_v)^-1 (rhs_v + D^T p).
    std::vector<double> velocity;
    if (nv > 0) {
        std::vector<double> rhs_mom(nv);
        kernels::spmv(div_t, pressure, rhs_mom);
        for (index_t i = 0; i < nv; ++i) rhs_mom[i] += rhs_v[i];
        velocity = velocity_solve(rhs_mom);
    }

    if (stats) {
        stats->iterations = outer_stats.iterations + static_cast<int>(inner_iterations);
        stats->relative_residual = outer_stats.relative_residual;
    }
    return {std::move(velocity), std::move(pressure)};
}

} // namespace projstab
