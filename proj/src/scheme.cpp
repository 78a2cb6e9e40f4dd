#include "projstab/scheme.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

#include "projstab/kernels.hpp"

namespace projstab {

namespace {

constexpr double kDomainDiameter = 1.4142135623730951;  // diam([0,1]^2)

std::vector<double> reduce_load(const OperatorSet& ops, std::span<const double> full) {
    const index_t ni = ops.interior_count();
    const index_t nv = ops.mesh->vertex_count();
    std::vector<double> r(static_cast<std::size_t>(2) * ni);
    for (index_t i = 0; i < ni; ++i) {
        const index_t v = ops.vertex_of_interior[i];
        r[i] = full[v];
        r[i + ni] = full[v + nv];
    }
    return r;
}

// delta L_p q = rhs_p, deflated CG with lumped-mass mean removal.
std::vector<double> pressure_poisson(const OperatorSet& ops, std::span<const double> rhs_p,
                                     double delta, const SolverConfig& base,
                                     SolveStats* stats, std::span<const double> warm_start) {
    SolverConfig cfg = base;
    cfg.deflate_constants = true;
    cfg.deflation_weights = ops.lumped_mass;
    std::vector<double> scaled(rhs_p.begin(), rhs_p.end());
    kernels::scale(1.0 / delta, scaled);
    CgOptions opt;
    opt.initial_guess = warm_start;
    return cg_solve(ops.pressure_stiffness(), scaled, cfg, stats, opt);
}

double quadratic_form(const CsrMatrix& a, std::span<const double> x) {
    std::vector<double> ax(x.size());
    kernels::spmv(a, x, ax);
    return kernels::dot(x, ax);
}

} // namespace

double velocity_l2_norm(const VectorFieldP1& v, const OperatorSet& ops) {
    const auto r = reduce_velocity(ops, v);
    return std::sqrt(std::max(0.0, quadratic_form(ops.velocity_mass, r)));
}

double SchemeConfig::resolve_delta(double h) const {
    switch (delta_mode) {
        case DeltaMode::Classic: return dt;
        case DeltaMode::Fixed: return delta_value;
        case DeltaMode::Auto: return std::max(dt, h * h / (nu * rho1 * rho1));
    }
    return dt;
}

std::vector<std::string> SchemeConfig::validate(double h, double delta) const {
    if (!(nu > 0.0)) throw std::invalid_argument("scheme: nu must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("scheme: dt must be positive");
    if (!(final_time > 0.0)) throw std::invalid_argument("scheme: T must be positive");
    if (!(delta > 0.0)) throw std::invalid_argument("scheme: delta must be positive");
    if (delta > final_time)
        throw std::invalid_argument("scheme: delta <= T violated (delta=" +
                                    std::to_string(delta) + ", T=" + std::to_string(final_time) + ")");
    if (dt > delta * (1.0 + 1e-12) && !allow_unstable_dt)
        throw std::invalid_argument(
            "scheme: dt <= delta violated (dt=" + std::to_string(dt) + ", delta=" +
            std::to_string(delta) + "); pass the stability override to run anyway");
    if (init_pressure == PressureInit::StokesProjection &&
        init_velocity != VelocityInit::StokesProjection)
        throw std::invalid_argument(
            "scheme: Stokes-projection pressure init requires Stokes-projection velocity init");

    std::vector<std::string> warnings;
    if (h * h / (nu * rho1 * rho1) > delta * (1.0 + 1e-12))
        warnings.push_back("delta below h^2/(nu rho1^2): stabilization may be insufficient");
    if (nu * delta > c_mass * kDomainDiameter * h * (1.0 + 1e-12))
        warnings.push_back("nu*delta above c_M*diam(Omega)*h");
    return warnings;
}

std::pair<VectorFieldP1, ScalarFieldP1> solve_stabilized_stokes(
    const OperatorSet& ops, double nu, double delta, std::span<const double> reduced_load,
    const SolverConfig& solver, SolveStats* stats) {
    SolverConfig cfg = solver;
    cfg.deflation_weights = ops.lumped_mass;
    auto [u, p] = schur_stokes_solve(ops.velocity_stiffness, ops.divergence,
                                     ops.pressure_stiffness(), nu, delta, reduced_load, cfg,
                                     stats);
    VectorFieldP1 s = embed_velocity(ops, u);
    ScalarFieldP1 z(*ops.mesh);
    z.values = std::move(p);
    return {std::move(s), std::move(z)};
}

std::pair<VectorFieldP1, ScalarFieldP1> solve_stabilized_stokes(
    const OperatorSet& ops, double nu, double delta,
    const std::function<void(double, double, double*)>& forcing, const SolverConfig& solver,
    SolveStats* stats) {
    const auto full = assemble_vector_load(*ops.mesh, ops.adjacency, forcing);
    const auto reduced = reduce_load(ops, full);
    return solve_stabilized_stokes(ops, nu, delta, reduced, solver, stats);
}

ScalarFieldP1 zh_map(const VectorFieldP1& w, double delta, const OperatorSet& ops,
                     const SolverConfig& solver, SolveStats* stats) {
    if (!(delta > 0.0)) throw std::invalid_argument("zh_map: delta must be positive");
    const auto wr = reduce_velocity(ops, w);
    std::vector<double> rhs(ops.mesh->vertex_count(), 0.0);
    if (!wr.empty()) {
        kernels::spmv(ops.divergence, wr, rhs);
        kernels::scale(-1.0, rhs);
    }
    ScalarFieldP1 z(*ops.mesh);
    z.values = pressure_poisson(ops, rhs, delta, solver, stats, {});
    return z;
}

EndOfStepNorm end_of_step_velocity_norm(const StepState& state, double delta,
                                        const OperatorSet& ops) {
    const TriangleMesh& mesh = *ops.mesh;
    const auto& v = state.tilde_v;
    const auto& q = state.q;

    // Per element: |tilde_v|^2 through the element mass matrix, the linear
    // coupling through the exact P1 average, and the constant |grad q|^2.
    const index_t nt = mesh.triangle_count();
    double v_sq = 0.0, tilde_sq = 0.0, grad_sq = 0.0;
    const auto contributions = [&](index_t e) {
        const auto& tri = mesh.triangles[e];
        const TriangleGeometry g = triangle_geometry(mesh, e);
        const double inv2a = 1.0 / (2.0 * g.area);
        double gq[2] = {0.0, 0.0};
        for (int k = 0; k < 3; ++k) {
            gq[0] += q.values[tri[k]] * g.b[k] * inv2a;
            gq[1] += q.values[tri[k]] * g.c[k] * inv2a;
        }
        double mass_vv = 0.0;
        double avg[2] = {0.0, 0.0};
        const double a12 = g.area / 12.0;
        for (int i = 0; i < 3; ++i) {
            avg[0] += v.x[tri[i]];
            avg[1] += v.y[tri[i]];
            for (int j = 0; j < 3; ++j) {
                const double m = a12 * (i == j ? 2.0 : 1.0);
                mass_vv += m * (v.x[tri[i]] * v.x[tri[j]] + v.y[tri[i]] * v.y[tri[j]]);
            }
        }
        const double int_v_dot_gq = (g.area / 3.0) * (avg[0] * gq[0] + avg[1] * gq[1]);
        const double gq2 = g.area * (gq[0] * gq[0] + gq[1] * gq[1]);
        return std::array<double, 3>{mass_vv - 2.0 * delta * int_v_dot_gq + delta * delta * gq2,
                                     mass_vv, gq2};
    };
    v_sq = kernels::blocked_sum(nt, [&](std::size_t e) {
        return contributions(static_cast<index_t>(e))[0];
    });
    tilde_sq = kernels::blocked_sum(nt, [&](std::size_t e) {
        return contributions(static_cast<index_t>(e))[1];
    });
    grad_sq = kernels::blocked_sum(nt, [&](std::size_t e) {
        return contributions(static_cast<index_t>(e))[2];
    });

    EndOfStepNorm out;
    out.v_l2 = std::sqrt(std::max(0.0, v_sq));
    out.tilde_l2 = std::sqrt(std::max(0.0, tilde_sq));
    out.q_grad_l2 = std::sqrt(std::max(0.0, grad_sq));
    out.identity_residual = std::abs(v_sq - (tilde_sq - delta * delta * grad_sq));
    return out;
}

StepState initialize_state(const SchemeConfig& cfg, const ManufacturedCase& mms,
                           const OperatorSet& ops, double delta, SolveStats* stats) {
    const TriangleMesh& mesh = *ops.mesh;
    StepState state;
    state.tilde_v = VectorFieldP1(mesh);
    state.q = ScalarFieldP1(mesh);
    state.step_index = 0;
    state.time = 0.0;

    if (cfg.init_pressure == PressureInit::StokesProjection &&
        cfg.init_velocity != VelocityInit::StokesProjection)
        throw std::invalid_argument(
            "initialize_state: Stokes-projection pressure init requires Stokes-projection "
            "velocity init");

    ScalarFieldP1 projected_pressure;
    switch (cfg.init_velocity) {
        case VelocityInit::Interpolant:
            for (index_t v = 0; v < mesh.vertex_count(); ++v) {
                if (mesh.boundary_flag[v]) continue;
                double u[2];
                mms.velocity(mesh.vertices[v].x, mesh.vertices[v].y, 0.0, u);
                state.tilde_v.x[v] = u[0];
                state.tilde_v.y[v] = u[1];
            }
            break;
        case VelocityInit::RandomPerturbation: {
            std::mt19937_64 rng(cfg.random_seed);
            std::uniform_real_distribution<double> dist(-1.0, 1.0);
            for (index_t v = 0; v < mesh.vertex_count(); ++v) {
                if (mesh.boundary_flag[v]) continue;
                state.tilde_v.x[v] = dist(rng);
                state.tilde_v.y[v] = dist(rng);
            }
            const double norm = velocity_l2_norm(state.tilde_v, ops);
            if (norm > 0.0) {
                for (auto& c : state.tilde_v.x) c /= norm;
                for (auto& c : state.tilde_v.y) c /= norm;
            }
            break;
        }
        case VelocityInit::StokesProjection: {
            // ghat = g - u_t at t=0, i.e. -nu lap(u(0)) + grad(p(0)).
            const double nu = cfg.nu;
            auto ghat = [&](double x, double y, double out[2]) {
                double lap[2], gp[2];
                mms.velocity_laplacian(x, y, 0.0, lap);
                mms.pressure_gradient(x, y, 0.0, gp);
                out[0] = -nu * lap[0] + gp[0];
                out[1] = -nu * lap[1] + gp[1];
            };
            auto [s, z] = solve_stabilized_stokes(ops, nu, delta, ghat, cfg.solver, stats);
            state.tilde_v = std::move(s);
            projected_pressure = std::move(z);
            break;
        }
    }

    switch (cfg.init_pressure) {
        case PressureInit::Zero:
            break;
        case PressureInit::FromDivergence: {
            SolveStats s;
            state.q = zh_map(state.tilde_v, delta, ops, cfg.solver, &s);
            if (stats) stats->iterations += s.iterations;
            break;
        }
        case PressureInit::StokesProjection:
            state.q = std::move(projected_pressure);
            break;
    }
    if (state.q.values.empty()) state.q = ScalarFieldP1(mesh);
    return state;
}

namespace {

// Advances one step. The momentum operator M/dt + nu A is owned by the
// caller so repeated steps reuse it and the CG warm starts.
class Stepper {
public:
    Stepper(const SchemeConfig& cfg, const OperatorSet& ops, double dt, double delta)
        : cfg_(cfg), ops_(ops), dt_(dt), delta_(delta),
          momentum_(csr_add(1.0 / dt, ops.velocity_mass, cfg.nu, ops.velocity_stiffness)) {}

    // reduced_forcing_load: quadrature load of the forcing at t_next,
    // interior dofs. Returns false when the blow-up detector fires.
    bool advance(StepState& state, double t_next,
                 std::span<const double> reduced_forcing_load, SolveStats* stats) {
        const index_t ni = ops_.interior_count();
        const index_t n2 = 2 * ni;

        std::vector<double> rhs(n2, 0.0);
        auto vr = reduce_velocity(ops_, state.tilde_v);
        if (n2 > 0) {
            kernels::spmv(ops_.velocity_mass, vr, rhs);
            kernels::scale(1.0 / dt_, rhs);
            for (index_t i = 0; i < n2; ++i) rhs[i] += reduced_forcing_load[i];
            // lagged pressure gradient
            std::vector<double> gq(n2);
            kernels::spmv(ops_.gradient, state.q.values, gq);
            kernels::axpy(-1.0, gq, rhs);

            if (cfg_.problem == ProblemKind::NavierStokesSemiImplicit) {
                std::vector<double> conv(n2, 0.0);
                if (!cfg_.disable_convection) {
                    const CsrMatrix n_w = assemble_convection_scalar(*ops_.mesh, state.tilde_v);
                    std::vector<double> full_x(n_w.n_rows), full_y(n_w.n_rows);
                    kernels::spmv(n_w, state.tilde_v.x, full_x);
                    kernels::spmv(n_w, state.tilde_v.y, full_y);
                    for (index_t i = 0; i < ni; ++i) {
                        conv[i] = full_x[ops_.vertex_of_interior[i]];
                        conv[i + ni] = full_y[ops_.vertex_of_interior[i]];
                    }
                }
                kernels::axpy(-1.0, conv, rhs);
            }

            SolveStats mom_stats;
            CgOptions opt;
            opt.initial_guess = vr;
            auto v_next = cg_solve(momentum_, rhs, cfg_.solver, &mom_stats, opt);
            if (stats) stats->iterations += mom_stats.iterations;
            state.tilde_v = embed_velocity(ops_, v_next);
            vr = std::move(v_next);
        }

        // Pressure Poisson with the new velocity divergence.
        std::vector<double> rhs_p(ops_.mesh->vertex_count(), 0.0);
        if (n2 > 0) {
            kernels::spmv(ops_.divergence, vr, rhs_p);
            kernels::scale(-1.0, rhs_p);
        }
        SolveStats p_stats;
        state.q.values = pressure_poisson(ops_, rhs_p, delta_, cfg_.solver, &p_stats,
                                          state.q.values);
        state.q.mesh = ops_.mesh;
        if (stats) stats->iterations += p_stats.iterations;

        state.step_index += 1;
        state.time = t_next;

        const double norm = velocity_l2_norm(state.tilde_v, ops_);
        return norm <= 1e6 * (1.0 + norm0_);
    }

    void set_reference_norm(double n0) { norm0_ = n0; }

private:
    const SchemeConfig& cfg_;
    const OperatorSet& ops_;
    double dt_;
    double delta_;
    CsrMatrix momentum_;
    double norm0_ = 0.0;
};

// Spatial load vectors of the separable manufactured fields; the load at time
// t is a coefficient combination, which keeps long runs cheap while matching
// the degree-4 quadrature of the closed-form forcing.
struct LoadCache {
    std::vector<double> l_shape;      // (U, chi)
    std::vector<double> l_laplacian;  // (lap U, chi)
    std::vector<double> l_pressure;   // (grad P, chi)
    std::vector<double> l_convection; // ((U.grad)U, chi)

    LoadCache(const OperatorSet& ops, const ManufacturedCase& mms, bool with_convection) {
        const TriangleMesh& mesh = *ops.mesh;
        auto make = [&](auto&& f) {
            return reduce_load(ops, assemble_vector_load(mesh, ops.adjacency, f));
        };
        l_shape = make([&](double x, double y, double* out) { mms.velocity_shape(x, y, out); });
        l_laplacian = make(
            [&](double x, double y, double* out) { mms.velocity_shape_laplacian(x, y, out); });
        l_pressure = make(
            [&](double x, double y, double* out) { mms.pressure_shape_gradient(x, y, out); });
        if (with_convection) {
            l_convection = make([&](double x, double y, double* out) {
                double u[2], g4[4];
                mms.velocity_shape(x, y, u);
                mms.velocity_shape_gradient(x, y, g4);
                out[0] = u[0] * g4[0] + u[1] * g4[1];
                out[1] = u[0] * g4[2] + u[1] * g4[3];
            });
        }
    }

    std::vector<double> at(const ManufacturedCase& mms, double nu, double t) const {
        const double g = mms.g(t), gd = mms.g_dot(t);
        std::vector<double> load(l_shape.size(), 0.0);
        kernels::axpy(gd, l_shape, load);
        kernels::axpy(-nu * g, l_laplacian, load);
        kernels::axpy(g, l_pressure, load);
        if (!l_convection.empty()) kernels::axpy(g * g, l_convection, load);
        return load;
    }
};

// Exact-solution spatial factors at every quadrature point, cached once so
// per-step error norms avoid re-evaluating trigonometric closed forms.
class ErrorCache {
public:
    ErrorCache(const OperatorSet& ops, const ManufacturedCase& mms)
        : mesh_(*ops.mesh), mms_(&mms) {
        const TriQuadratureRule& rule = quadrature_degree4();
        const index_t nt = mesh_.triangle_count();
        points_.resize(static_cast<std::size_t>(nt) * rule.points);
        geo_.resize(nt);
#pragma omp parallel for schedule(static) num_threads(kernels::num_threads())
        for (index_t e = 0; e < nt; ++e) {
            const TriangleGeometry g = triangle_geometry(mesh_, e);
            geo_[e] = g;
            const auto& tri = mesh_.triangles[e];
            for (int q = 0; q < rule.points; ++q) {
                Point& p = points_[static_cast<std::size_t>(e) * rule.points + q];
                for (int k = 0; k < 3; ++k) p.lam[k] = rule.bary[q][k];
                const double x = p.lam[0] * mesh_.vertices[tri[0]].x +
                                 p.lam[1] * mesh_.vertices[tri[1]].x +
                                 p.lam[2] * mesh_.vertices[tri[2]].x;
                const double y = p.lam[0] * mesh_.vertices[tri[0]].y +
                                 p.lam[1] * mesh_.vertices[tri[1]].y +
                                 p.lam[2] * mesh_.vertices[tri[2]].y;
                p.weight = g.area * rule.weights[q];
                mms.velocity_shape(x, y, p.u_shape);
                mms.velocity_shape_gradient(x, y, p.u_grad_shape);
                p.p_shape = mms.pressure_shape(x, y);
                mms.pressure_shape_gradient(x, y, p.p_grad_shape);
            }
        }
    }

    StepRecord errors(const StepState& state, double t) const {
        const double g = mms_->g(t);
        const TriQuadratureRule& rule = quadrature_degree4();
        const index_t nt = mesh_.triangle_count();

        // Deterministic blocked reduction over elements for all four
        // accumulators at once.
        constexpr std::size_t block = 256;
        const std::size_t nblocks = (static_cast<std::size_t>(nt) + block - 1) / block;
        std::vector<std::array<double, 4>> partial(nblocks, {0.0, 0.0, 0.0, 0.0});
#pragma omp parallel for schedule(static) num_threads(kernels::num_threads())
        for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(nblocks); ++blk) {
            const index_t lo = static_cast<index_t>(blk * block);
            const index_t hi = std::min<index_t>(lo + block, nt);
            std::array<double, 4> acc{0.0, 0.0, 0.0, 0.0};
            for (index_t e = lo; e < hi; ++e) {
                const auto& tri = mesh_.triangles[e];
                const TriangleGeometry& geo = geo_[e];
                const double inv2a = 1.0 / (2.0 * geo.area);
                double vh_grad[4] = {0, 0, 0, 0};
                double qh_grad[2] = {0, 0};
                for (int k = 0; k < 3; ++k) {
                    const index_t vtx = tri[k];
                    vh_grad[0] += state.tilde_v.x[vtx] * geo.b[k] * inv2a;
                    vh_grad[1] += state.tilde_v.x[vtx] * geo.c[k] * inv2a;
                    vh_grad[2] += state.tilde_v.y[vtx] * geo.b[k] * inv2a;
                    vh_grad[3] += state.tilde_v.y[vtx] * geo.c[k] * inv2a;
                    qh_grad[0] += state.q.values[vtx] * geo.b[k] * inv2a;
                    qh_grad[1] += state.q.values[vtx] * geo.c[k] * inv2a;
                }
                for (int q = 0; q < rule.points; ++q) {
                    const Point& p = points_[static_cast<std::size_t>(e) * rule.points + q];
                    double vh[2] = {0.0, 0.0};
                    double qh = 0.0;
                    for (int k = 0; k < 3; ++k) {
                        vh[0] += p.lam[k] * state.tilde_v.x[tri[k]];
                        vh[1] += p.lam[k] * state.tilde_v.y[tri[k]];
                        qh += p.lam[k] * state.q.values[tri[k]];
                    }
                    const double ex = vh[0] - g * p.u_shape[0];
                    const double ey = vh[1] - g * p.u_shape[1];
                    acc[0] += p.weight * (ex * ex + ey * ey);
                    double gs = 0.0;
                    for (int k = 0; k < 4; ++k) {
                        const double d = vh_grad[k] - g * p.u_grad_shape[k];
                        gs += d * d;
                    }
                    acc[1] += p.weight * gs;
                    const double ep = qh - g * p.p_shape;
                    acc[2] += p.weight * ep * ep;
                    const double dpx = qh_grad[0] - g * p.p_grad_shape[0];
                    const double dpy = qh_grad[1] - g * p.p_grad_shape[1];
                    acc[3] += p.weight * (dpx * dpx + dpy * dpy);
                }
            }
            partial[blk] = acc;
        }
        std::array<double, 4> total{0.0, 0.0, 0.0, 0.0};
        for (const auto& p : partial)
            for (int k = 0; k < 4; ++k) total[k] += p[k];

        StepRecord rec;
        rec.t = t;
        rec.velocity_l2 = std::sqrt(total[0]);
        rec.velocity_h1 = std::sqrt(total[1]);
        rec.pressure_l2 = std::sqrt(total[2]);
        rec.pressure_h1 = std::sqrt(total[3]);
        return rec;
    }

private:
    struct Point {
        double lam[3];
        double weight;
        double u_shape[2];
        double u_grad_shape[4];
        double p_shape;
        double p_grad_shape[2];
    };
    const TriangleMesh& mesh_;
    const ManufacturedCase* mms_;
    std::vector<Point> points_;
    std::vector<TriangleGeometry> geo_;
};

} // namespace

StepState step_transient_stokes(const StepState& state, const SchemeConfig& cfg,
                                const OperatorSet& ops, double delta,
                                const ForcingField& forcing, SolveStats* stats) {
    SchemeConfig c = cfg;
    c.problem = ProblemKind::TransientStokes;
    Stepper stepper(c, ops, cfg.dt, delta);
    stepper.set_reference_norm(velocity_l2_norm(state.tilde_v, ops));
    StepState next = state;
    const double t_next = state.time + cfg.dt;
    const auto full = assemble_vector_load(
        *ops.mesh, ops.adjacency,
        [&](double x, double y, double* out) { forcing(x, y, t_next, out); });
    const auto reduced = reduce_load(ops, full);
    stepper.advance(next, t_next, reduced, stats);
    return next;
}

NseStepOutcome step_navier_stokes(const StepState& state, const SchemeConfig& cfg,
                                  const OperatorSet& ops, double delta, const ForcingField& forcing,
                                  SolveStats* stats) {
    SchemeConfig c = cfg;
    c.problem = ProblemKind::NavierStokesSemiImplicit;
    Stepper stepper(c, ops, cfg.dt, delta);
    stepper.set_reference_norm(velocity_l2_norm(state.tilde_v, ops));
    NseStepOutcome out;
    out.state = state;
    const double t_next = state.time + cfg.dt;
    const auto full = assemble_vector_load(
        *ops.mesh, ops.adjacency,
        [&](double x, double y, double* out2) { forcing(x, y, t_next, out2); });
    const auto reduced = reduce_load(ops, full);
    out.diverged = !stepper.advance(out.state, t_next, reduced, stats);
    return out;
}

ErrorReport run_simulation(const SchemeConfig& cfg, const ManufacturedCase& mms,
                           const OperatorSet& ops, const SimulationOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const TriangleMesh& mesh = *ops.mesh;

    const int n_steps = std::max(
        1, static_cast<int>(std::ceil(cfg.final_time / cfg.dt - 1e-9)));
    SchemeConfig run_cfg = cfg;
    run_cfg.dt = cfg.final_time / n_steps;
    const double delta = run_cfg.resolve_delta(mesh.h);

    ErrorReport report;
    report.condition_warnings = run_cfg.validate(mesh.h, delta);

    SolveStats init_stats;
    StepState state = initialize_state(run_cfg, mms, ops, delta, &init_stats);
    report.cg_iterations_total += init_stats.iterations;

    const bool nse = run_cfg.problem == ProblemKind::NavierStokesSemiImplicit;
    LoadCache loads(ops, mms, nse);
    ErrorCache error_cache(ops, mms);
    Stepper stepper(run_cfg, ops, run_cfg.dt, delta);
    stepper.set_reference_norm(velocity_l2_norm(state.tilde_v, ops));

    for (int n = 0; n < n_steps; ++n) {
        const double t_next = (n + 1 == n_steps) ? run_cfg.final_time : (n + 1) * run_cfg.dt;
        const auto load = loads.at(mms, run_cfg.nu, t_next);
        SolveStats step_stats;
        const bool ok = stepper.advance(state, t_next, load, &step_stats);
        report.cg_iterations_total += step_stats.iterations;

        report.accumulate(error_cache.errors(state, state.time), run_cfg.dt, run_cfg.nu, delta);
        if (options.on_step) options.on_step(state);

        if (!ok) {
            report.diverged = true;
            report.divergence_step = state.step_index;
            break;
        }
    }

    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

} // namespace projstab
