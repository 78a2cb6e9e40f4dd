// projstab.cpp - command-line front end.
//
//   projstab run <config>     execute a study described by a config file
//   projstab check            run the built-in invariant suite
//   projstab mesh-dump n path write a structured mesh as plain text
//
// Config files are line-oriented `key = value` with sections [study],
// [scheme], [solver]; see --help-config for the grammar and defaults.

#include <cstdio>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "projstab/dense.hpp"
#include "projstab/kernels.hpp"
#include "projstab/study.hpp"

namespace {

const char* kConfigHelp = R"(Config file grammar
===================

Line-oriented `key = value`, `#` starts a comment. Unknown keys and sections
are errors. Sections and keys (defaults in parentheses):

[study]
  kind         = single_run | spatial_sweep | temporal_sweep |
                 stability_probe | classic_pressure_probe       (mandatory)
  mesh_n       = comma list of grid resolutions, n >= 1         (mandatory)
  dt           = comma list of time steps                       (0.1)
  dt_rule      = list | c_h | c_h2    dt per mesh: list entry,
                 dt_constant*h, or dt_constant*h^2              (list)
  dt_constant  = positive real                                  (1.0)
  probe_steps  = steps taken by the stability probe             (200)
  output       = report path prefix         ($PROJSTAB_OUT_DIR/study or study)
  assert_velocity_l2_order_min / _max = observed-order bounds   (unset)
  assert_h1_order_min / _max          = bounds on sqrt(A_H1)    (unset)
  assert_pressure_order_min / _max    = bounds on sqrt(A_P)     (unset)
  assert_max_error                    = bound on all error columns (unset)
  assert_pressure_ratio_max           = classic probe tolerance (2.0)

[scheme]
  problem      = stokes | navier_stokes                         (stokes)
  nu           = viscosity                                      (1.0)
  T            = final time                                     (1.0)
  delta_mode   = classic | fixed | auto                         (auto)
                 classic: delta = dt; auto: max(dt, h^2/(nu*rho1^2))
  delta        = value for fixed mode
  init_velocity = interpolant | stokes_projection | random      (interpolant)
  init_pressure = zero | from_divergence | stokes_projection    (from_divergence)
  rho1         = stabilization constant                         (1.0)
  c_M          = scale constant of the nu*delta <= c_M*diam*h check (1.0)
  allow_unstable_dt = true | false                              (false)
  seed         = RNG seed for random initial data               (1592600301)
  mms          = taylor_green | zero                            (taylor_green)
  amplitude    = manufactured-solution amplitude                (1.0)
  time_profile = cosine | linear_growth                         (cosine)

[solver]
  rel_tolerance  = CG relative residual target                  (1e-10)
  max_iterations = CG iteration cap                             (20000)
  jacobi         = diagonal preconditioning                     (false)

Runs refusing dt > delta can be forced with --override-stability-guard.
Mesh dump format: `v x y flag` per vertex (flag 1 on the boundary), then
`t i j k` per counterclockwise triangle.

Exit status: 0 = pass, 1 = assertion failure, 2 = config or solver error.
)";

int run_check();

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"projstab - projection-method solver and verification harness"};
    app.require_subcommand(1);

    int jobs = 1;
    bool override_guard = false;
    bool help_config = false;
    app.add_option("--jobs", jobs, "worker threads for the parallel kernels")
        ->default_val(1);
    app.add_flag("--override-stability-guard", override_guard,
                 "allow dt > delta (instability experiments)");
    app.add_flag("--help-config", help_config, "print the config file grammar and exit");

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "execute a study from a config file");
    run_cmd->add_option("config", config_path, "config file path")->required();

    auto* check_cmd = app.add_subcommand("check", "run the built-in invariant suite");

    int dump_n = 0;
    std::string dump_path;
    auto* dump_cmd = app.add_subcommand("mesh-dump", "write a structured mesh to a file");
    dump_cmd->add_option("n", dump_n, "grid resolution")->required();
    dump_cmd->add_option("path", dump_path, "output file")->required();

    CLI11_PARSE(app, argc, argv);

    if (help_config) {
        std::fputs(kConfigHelp, stdout);
        return 0;
    }
    projstab::kernels::set_num_threads(jobs);

    try {
        if (run_cmd->parsed()) {
            projstab::StudySpec spec = projstab::parse_config(config_path);
            if (override_guard) spec.scheme.allow_unstable_dt = true;
            const auto result = projstab::run_study(spec);
            std::cout << "rows: " << result.rows.size() << "\n";
            for (const auto& [name, order] : result.observed_orders)
                std::cout << "observed order " << name << ": " << order << "\n";
            for (const auto& a : result.assertions)
                std::cout << (a.pass ? "[PASS] " : "[FAIL] ") << a.name << " observed "
                          << a.observed << (a.is_lower_bound ? " >= " : " <= ") << a.bound
                          << "\n";
            std::cout << "wrote " << result.csv_path << " and " << result.json_path << "\n";
            return result.exit_status;
        }
        if (check_cmd->parsed()) return run_check();
        if (dump_cmd->parsed()) {
            const auto mesh = projstab::build_structured_mesh(dump_n);
            projstab::write_mesh_dump(mesh, dump_path);
            std::cout << "wrote " << dump_path << " (" << mesh.vertex_count() << " vertices, "
                      << mesh.triangle_count() << " triangles)\n";
            return 0;
        }
    } catch (const projstab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

namespace {

int run_check() {
    using namespace projstab;
    int failures = 0;
    auto record = [&](const char* name, bool ok, double qoi = 0.0, double bound = 0.0) {
        std::printf("%s %s", ok ? "[PASS]" : "[FAIL]", name);
        if (bound != 0.0) std::printf("  (value %.3e, bound %.3e)", qoi, bound);
        std::printf("\n");
        if (!ok) ++failures;
    };

    for (int n : {1, 2, 5, 8}) {
        const auto mesh = build_structured_mesh(n);
        bool ok = true;
        try {
            mesh.validate();
        } catch (const std::exception&) {
            ok = false;
        }
        record(("mesh invariants n=" + std::to_string(n)).c_str(), ok);
    }

    for (int n : {2, 8}) {
        const auto mesh = build_structured_mesh(n);
        const auto ops = assemble_operators(mesh);

        double mass_total = 0.0;
        for (double v : ops.mass_scalar.values) mass_total += v;
        record(("mass partition of unity n=" + std::to_string(n)).c_str(),
               std::abs(mass_total - 1.0) <= 1e-12, std::abs(mass_total - 1.0), 1e-12);

        std::vector<double> ones(mesh.vertex_count(), 1.0), out(mesh.vertex_count());
        kernels::spmv(ops.stiffness_scalar, ones, out);
        double worst = 0.0;
        for (double v : out) worst = std::max(worst, std::abs(v));
        record(("stiffness annihilates constants n=" + std::to_string(n)).c_str(),
               worst <= 1e-13, worst, 1e-13);

        const CsrMatrix neg_dt = csr_transpose(ops.divergence);
        double gd_worst = 0.0;
        for (index_t i = 0; i < ops.gradient.n_rows; ++i)
            for (index_t k = ops.gradient.row_ptr[i]; k < ops.gradient.row_ptr[i + 1]; ++k)
                gd_worst = std::max(gd_worst,
                                    std::abs(ops.gradient.values[k] +
                                             neg_dt.at(i, ops.gradient.col_idx[k])));
        record(("G = -D^T n=" + std::to_string(n)).c_str(), gd_worst <= 1e-13, gd_worst,
               1e-13);
    }

    {
        const auto mesh = build_structured_mesh(4);
        const auto ops = assemble_operators(mesh);
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        double worst = 0.0;
        for (int rep = 0; rep < 5; ++rep) {
            VectorFieldP1 w(mesh), z(mesh);
            for (index_t v = 0; v < mesh.vertex_count(); ++v) {
                w.x[v] = dist(rng);
                w.y[v] = dist(rng);
                if (!mesh.boundary_flag[v]) {
                    z.x[v] = dist(rng);
                    z.y[v] = dist(rng);
                }
            }
            const CsrMatrix nm = assemble_convection(mesh, w);
            std::vector<double> zf(z.x);
            zf.insert(zf.end(), z.y.begin(), z.y.end());
            std::vector<double> nz(zf.size());
            kernels::spmv(nm, zf, nz);
            worst = std::max(worst, std::abs(kernels::dot(zf, nz)));
        }
        record("convection skew-symmetry (z'N(w)z = 0)", worst <= 1e-12, worst, 1e-12);
    }

    {
        const auto tg = taylor_green_case(1.0, TimeProfile::Cosine);
        bool ok = true;
        try {
            verify_case(tg);
        } catch (const std::exception&) {
            ok = false;
        }
        record("manufactured case construction checks", ok);

        const auto f = nse_forcing(tg, 0.7);
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double worst = 0.0;
        for (int s = 0; s < 100; ++s) {
            const double x = unit(rng), y = unit(rng), t = 2.0 * unit(rng);
            double got[2], ut[2], lap[2], gp[2], conv[2];
            f(x, y, t, got);
            tg.velocity_time_derivative(x, y, t, ut);
            tg.velocity_laplacian(x, y, t, lap);
            tg.pressure_gradient(x, y, t, gp);
            tg.convection(x, y, t, conv);
            worst = std::max({worst,
                              std::abs(got[0] - (ut[0] - 0.7 * lap[0] + conv[0] + gp[0])),
                              std::abs(got[1] - (ut[1] - 0.7 * lap[1] + conv[1] + gp[1]))});
        }
        record("forcing residual at random points", worst <= 1e-12, worst, 1e-12);
    }

    {
        // Small solver cross-check: CG against the dense oracle.
        const auto mesh = build_structured_mesh(3);
        const auto ops = assemble_operators(mesh);
        const CsrMatrix a = ops.mass_interior;
        std::vector<double> b(a.n_rows);
        for (index_t i = 0; i < a.n_rows; ++i) b[i] = std::sin(1.0 + i);
        SolverConfig cfg;
        const auto x = cg_solve(a, b, cfg);
        const auto xd = dense_oracle_solve(to_dense(a), b);
        double diff = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            diff = std::max(diff, std::abs(x[i] - xd[i]));
            scale = std::max(scale, std::abs(xd[i]));
        }
        record("cg matches dense oracle", diff <= 1e-9 * scale, diff / scale, 1e-9);
    }

    std::printf("%s (%d failures)\n", failures == 0 ? "all checks passed" : "CHECKS FAILED",
                failures);
    return failures == 0 ? 0 : 1;
}

} // namespace
