// solve.hpp - conjugate-gradient solvers and the Schur-complement Stokes solver.
#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "projstab/csr.hpp"

namespace projstab {

struct SolverConfig {
    double rel_tolerance = 1e-10;
    int max_iterations = 20000;
    // Project the constant vector out of the right-hand side and report a
    // mean-zero solution; required for singular operators whose nullspace is
    // the constants (pure-Neumann pressure systems).
    bool deflate_constants = false;
    bool jacobi = false;
    // Weights for the mean that is zeroed on the returned solution when
    // deflating (lumped pressure mass). Empty means uniform weights.
    std::vector<double> deflation_weights;
};

struct SolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, int iterations, double residual)
        : std::runtime_error(what), iterations(iterations), residual(residual) {}
    int iterations;
    double residual;
};

struct CgOptions {
    std::span<const double> initial_guess = {};
    // Called after each iteration with (iteration, current iterate); used by
    // tests to observe convergence behaviour.
    std::function<void(int, std::span<const double>)> on_iteration;
};

// CG for symmetric positive (semi)definite systems. Stops when
// ||b - A x||_2 <= rel_tolerance * ||b||_2 (after deflation, if enabled).
// Throws SolverError on non-convergence or dimension mismatch.
std::vector<double> cg_solve(const CsrMatrix& a, std::span<const double> b,
                             const SolverConfig& cfg, SolveStats* stats = nullptr,
                             const CgOptions& options = {});

// Matrix-free variant used by the Schur complement.
std::vector<double> cg_solve_operator(
    index_t n, const std::function<void(std::span<const double>, std::span<double>)>& apply,
    std::span<const double> b, const SolverConfig& cfg, SolveStats* stats = nullptr,
    const CgOptions& options = {});

// Solves the coupled stabilized Stokes block system
//   nu*A_v u - D^T p = rhs_v
//   D u + delta*L_p p = 0
// by outer CG on the pressure Schur complement D (nu A_v)^-1 D^T + delta L_p,
// which is symmetric positive definite on mean-zero pressures. The returned
// pressure has zero mean in the weights carried by cfg.deflation_weights.
std::pair<std::vector<double>, std::vector<double>> schur_stokes_solve(
    const CsrMatrix& a_v, const CsrMatrix& divergence, const CsrMatrix& pressure_stiffness,
    double nu, double delta, std::span<const double> rhs_v, const SolverConfig& cfg,
    SolveStats* stats = nullptr);

// Subtracts the weighted mean: x -= (w.x / w.1) * 1. Uniform w if empty.
void remove_weighted_mean(std::span<double> x, std::span<const double> weights);

} // namespace projstab
