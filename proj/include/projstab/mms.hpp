// mms.hpp - manufactured solutions, forcing synthesis, error aggregates.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "projstab/fem.hpp"

namespace projstab {

enum class TimeProfile { Cosine, LinearGrowth };

// Closed-form exact solution of the form u(x,y,t) = g(t) U(x,y),
// p(x,y,t) = g(t) P(x,y) with divergence-free U vanishing on the boundary of
// the unit square and mean-zero P. The zero case has U = P = 0.
struct ManufacturedCase {
    std::string name;
    double amplitude = 1.0;
    TimeProfile profile = TimeProfile::Cosine;
    bool is_zero = false;

    double g(double t) const;
    double g_dot(double t) const;

    // Spatial factors (time-independent).
    void velocity_shape(double x, double y, double out[2]) const;
    void velocity_shape_gradient(double x, double y, double out[4]) const;  // dU_i/dx_j
    void velocity_shape_laplacian(double x, double y, double out[2]) const;
    double pressure_shape(double x, double y) const;
    void pressure_shape_gradient(double x, double y, double out[2]) const;

    // Space-time evaluations.
    void velocity(double x, double y, double t, double out[2]) const;
    void velocity_time_derivative(double x, double y, double t, double out[2]) const;
    void velocity_gradient(double x, double y, double t, double out[4]) const;
    void velocity_laplacian(double x, double y, double t, double out[2]) const;
    double pressure(double x, double y, double t) const;
    void pressure_gradient(double x, double y, double t, double out[2]) const;
    // (u . grad) u
    void convection(double x, double y, double t, double out[2]) const;

    // Adapters for error_norms at a fixed time.
    ExactVector exact_velocity(double t) const;
    ExactScalar exact_pressure(double t) const;
};

ManufacturedCase taylor_green_case(double amplitude, TimeProfile profile);
ManufacturedCase zero_case();

// g = u_t - nu*lap(u) + grad(p); with convection also + (u.grad)u.
struct ForcingField {
    const ManufacturedCase* mms = nullptr;
    double nu = 0.0;
    bool include_convection = false;

    void operator()(double x, double y, double t, double out[2]) const;
};

ForcingField stokes_forcing(const ManufacturedCase& mms, double nu);
ForcingField nse_forcing(const ManufacturedCase& mms, double nu);

// Randomized construction checks: divergence-free, boundary zeros, mean-zero
// pressure, finite-difference agreement of the hand-derived derivatives.
// Throws on violation.
void verify_case(const ManufacturedCase& mms, std::uint64_t seed = 0x9e3779b97f4a7c15ull);

// Least-squares slope of log(error) against log(parameter).
double estimate_rate(std::span<const std::pair<double, double>> samples);

struct StepRecord {
    double t = 0.0;
    double velocity_l2 = 0.0;
    double velocity_h1 = 0.0;
    double pressure_l2 = 0.0;
    double pressure_h1 = 0.0;
};

// Per-step errors plus the time-weighted aggregates used by the convergence
// studies:
//   a_l2  = max_n t_n ||e_v(t_n)||_0^2
//   a_h1  = dt sum_j (nu ||grad e_v||^2 + delta ||grad e_p||^2)
//   a_h1w = dt sum_j t_j (nu ||grad e_v||^2 + delta ||grad e_p||^2)
//   a_p   = dt sum_j t_j ||e_p||_0^2
struct ErrorReport {
    std::vector<StepRecord> steps;
    double a_l2 = 0.0;
    double a_h1 = 0.0;
    double a_h1w = 0.0;
    double a_p = 0.0;
    bool diverged = false;
    int divergence_step = -1;
    long cg_iterations_total = 0;
    double wall_time_seconds = 0.0;
    std::vector<std::string> condition_warnings;

    void accumulate(const StepRecord& rec, double dt, double nu, double delta);
    // Recomputes the aggregates from the per-step list (consistency check).
    std::array<double, 4> aggregates_from_steps(double dt, double nu, double delta) const;
};

} // namespace projstab
