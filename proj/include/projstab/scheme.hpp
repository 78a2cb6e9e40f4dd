// scheme.hpp - stabilized Stokes projection, the modified Euler
// non-incremental stepper for transient Stokes, the semi-implicit stepper for
// Navier-Stokes, and the simulation driver.
//
// One step advances the pair (tilde_v, q):
//   momentum:  (M/dt + nu A) tilde_v_next =
//                  (M/dt) tilde_v + load(t_next) - G q [- N(tilde_v) tilde_v]
//   pressure:  delta L_p q_next = -D tilde_v_next   (deflated CG, mean-zero)
// The end-of-step velocity tilde_v - delta grad(q) is never stored; it is
// recovered by end_of_step_velocity_norm.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "projstab/fem.hpp"
#include "projstab/mms.hpp"
#include "projstab/solve.hpp"

namespace projstab {

enum class DeltaMode { Classic, Fixed, Auto };
enum class ProblemKind { TransientStokes, NavierStokesSemiImplicit };
enum class VelocityInit { Interpolant, StokesProjection, RandomPerturbation };
enum class PressureInit { Zero, FromDivergence, StokesProjection };

struct SchemeConfig {
    double nu = 1.0;
    double dt = 0.1;
    double final_time = 1.0;
    DeltaMode delta_mode = DeltaMode::Auto;
    double delta_value = 0.0;  // Fixed mode
    ProblemKind problem = ProblemKind::TransientStokes;
    VelocityInit init_velocity = VelocityInit::Interpolant;
    PressureInit init_pressure = PressureInit::FromDivergence;
    double rho1 = 1.0;
    double c_mass = 1.0;
    bool allow_unstable_dt = false;
    bool disable_convection = false;  // test hook: zero convection matrix
    std::uint64_t random_seed = 0x5eed5eedULL;
    SolverConfig solver;

    // Classic: delta = dt. Fixed: delta_value. Auto: max(dt, h^2/(nu rho1^2)).
    double resolve_delta(double h) const;

    // Hard checks (dt <= delta unless overridden, delta <= T, positivity);
    // returns advisory warnings for the soft conditions
    // h^2/(nu rho1^2) <= delta and nu delta <= c_M diam(Omega) h.
    std::vector<std::string> validate(double h, double delta) const;
};

struct StepState {
    VectorFieldP1 tilde_v;
    ScalarFieldP1 q;
    int step_index = 0;
    double time = 0.0;
};

// (s_h, z_h) of the stabilized Stokes system for a spatial forcing field.
std::pair<VectorFieldP1, ScalarFieldP1> solve_stabilized_stokes(
    const OperatorSet& ops, double nu, double delta,
    const std::function<void(double, double, double*)>& forcing, const SolverConfig& solver,
    SolveStats* stats = nullptr);

// Overload taking a precomputed reduced momentum load.
std::pair<VectorFieldP1, ScalarFieldP1> solve_stabilized_stokes(
    const OperatorSet& ops, double nu, double delta, std::span<const double> reduced_load,
    const SolverConfig& solver, SolveStats* stats = nullptr);

// Pressure from the divergence of a velocity field:
// delta (grad Zh(w), grad psi) = -(div w, psi); mean-zero output.
ScalarFieldP1 zh_map(const VectorFieldP1& w, double delta, const OperatorSet& ops,
                     const SolverConfig& solver, SolveStats* stats = nullptr);

struct EndOfStepNorm {
    double v_l2 = 0.0;              // || tilde_v - delta grad q ||_0
    double tilde_l2 = 0.0;          // || tilde_v ||_0
    double q_grad_l2 = 0.0;         // || grad q ||_0
    double identity_residual = 0.0; // | v^2 - (tilde^2 - delta^2 grad_q^2) |
};
EndOfStepNorm end_of_step_velocity_norm(const StepState& state, double delta,
                                        const OperatorSet& ops);

StepState initialize_state(const SchemeConfig& cfg, const ManufacturedCase& mms,
                           const OperatorSet& ops, double delta,
                           SolveStats* stats = nullptr);

// Single steps with forcing evaluated at t_next; convenience wrappers around
// the driver used by run_simulation. The Navier-Stokes step reports rather
// than throws when the blow-up detector fires.
StepState step_transient_stokes(const StepState& state, const SchemeConfig& cfg,
                                const OperatorSet& ops, double delta,
                                const ForcingField& forcing, SolveStats* stats = nullptr);

struct NseStepOutcome {
    StepState state;
    bool diverged = false;
};
NseStepOutcome step_navier_stokes(const StepState& state, const SchemeConfig& cfg,
                                  const OperatorSet& ops, double delta,
                                  const ForcingField& forcing, SolveStats* stats = nullptr);

struct SimulationOptions {
    // Invoked after every completed step.
    std::function<void(const StepState&)> on_step;
};

// Runs N = ceil(T/dt) steps with dt adjusted to T/N, accumulating the error
// report against the manufactured solution. Divergence short-circuits with
// the flag set.
ErrorReport run_simulation(const SchemeConfig& cfg, const ManufacturedCase& mms,
                           const OperatorSet& ops, const SimulationOptions& options = {});

// L2 norm induced by the velocity mass matrix on a Dirichlet field.
double velocity_l2_norm(const VectorFieldP1& v, const OperatorSet& ops);

} // namespace projstab
