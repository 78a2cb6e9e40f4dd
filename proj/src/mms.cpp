#include "projstab/mms.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace projstab {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double ManufacturedCase::g(double t) const {
    if (is_zero) return 0.0;
    return profile == TimeProfile::Cosine ? std::cos(t) : 1.0 + t;
}

double ManufacturedCase::g_dot(double t) const {
    if (is_zero) return 0.0;
    return profile == TimeProfile::Cosine ? -std::sin(t) : 1.0;
}

// Stream function psi = A sin^2(pi x) sin^2(pi y), U = curl(psi):
//   U1 =  A pi sin^2(pi x) sin(2 pi y)
//   U2 = -A pi sin(2 pi x) sin^2(pi y)
// P = A sin(2 pi x) sin(2 pi y).
void ManufacturedCase::velocity_shape(double x, double y, double out[2]) const {
    if (is_zero) {
        out[0] = out[1] = 0.0;
        return;
    }
    const double sx = std::sin(kPi * x), sy = std::sin(kPi * y);
    const double s2x = std::sin(2.0 * kPi * x), s2y = std::sin(2.0 * kPi * y);
    out[0] = amplitude * kPi * sx * sx * s2y;
    out[1] = -amplitude * kPi * s2x * sy * sy;
}

void ManufacturedCase::velocity_shape_gradient(double x, double y, double out[4]) const {
    if (is_zero) {
        out[0] = out[1] = out[2] = out[3] = 0.0;
        return;
    }
    const double sx = std::sin(kPi * x), sy = std::sin(kPi * y);
    const double s2x = std::sin(2.0 * kPi * x), s2y = std::sin(2.0 * kPi * y);
    const double c2x = std::cos(2.0 * kPi * x), c2y = std::cos(2.0 * kPi * y);
    const double a = amplitude;
    out[0] = a * kPi * kPi * s2x * s2y;            // dU1/dx
    out[1] = 2.0 * a * kPi * kPi * sx * sx * c2y;  // dU1/dy
    out[2] = -2.0 * a * kPi * kPi * c2x * sy * sy; // dU2/dx
    out[3] = -a * kPi * kPi * s2x * s2y;           // dU2/dy
}

void ManufacturedCase::velocity_shape_laplacian(double x, double y, double out[2]) const {
    if (is_zero) {
        out[0] = out[1] = 0.0;
        return;
    }
    const double sx = std::sin(kPi * x), sy = std::sin(kPi * y);
    const double s2x = std::sin(2.0 * kPi * x), s2y = std::sin(2.0 * kPi * y);
    const double c2x = std::cos(2.0 * kPi * x), c2y = std::cos(2.0 * kPi * y);
    const double a = amplitude, pi3 = kPi * kPi * kPi;
    out[0] = 2.0 * a * pi3 * s2y * (c2x - 2.0 * sx * sx);
    out[1] = 2.0 * a * pi3 * s2x * (2.0 * sy * sy - c2y);
}

double ManufacturedCase::pressure_shape(double x, double y) const {
    if (is_zero) return 0.0;
    return amplitude * std::sin(2.0 * kPi * x) * std::sin(2.0 * kPi * y);
}

void ManufacturedCase::pressure_shape_gradient(double x, double y, double out[2]) const {
    if (is_zero) {
        out[0] = out[1] = 0.0;
        return;
    }
    const double s2x = std::sin(2.0 * kPi * x), s2y = std::sin(2.0 * kPi * y);
    const double c2x = std::cos(2.0 * kPi * x), c2y = std::cos(2.0 * kPi * y);
    out[0] = 2.0 * amplitude * kPi * c2x * s2y;
    out[1] = 2.0 * amplitude * kPi * s2x * c2y;
}

void ManufacturedCase::velocity(double x, double y, double t, double out[2]) const {
    velocity_shape(x, y, out);
    const double gt = g(t);
    out[0] *= gt;
    out[1] *= gt;
}

void ManufacturedCase::velocity_time_derivative(double x, double y, double t,
                                                double out[2]) const {
    velocity_shape(x, y, out);
    const double gd = g_dot(t);
    out[0] *= gd;
    out[1] *= gd;
}

void ManufacturedCase::velocity_gradient(double x, double y, double t, double out[4]) const {
    velocity_shape_gradient(x, y, out);
    const double gt = g(t);
    for (int k = 0; k < 4; ++k) out[k] *= gt;
}

void ManufacturedCase::velocity_laplacian(double x, double y, double t, double out[2]) const {
    velocity_shape_laplacian(x, y, out);
    const double gt = g(t);
    out[0] *= gt;
    out[1] *= gt;
}

double ManufacturedCase::pressure(double x, double y, double t) const {
    return g(t) * pressure_shape(x, y);
}

void ManufacturedCase::pressure_gradient(double x, double y, double t, double out[2]) const {
    pressure_shape_gradient(x, y, out);
    const double gt = g(t);
    out[0] *= gt;
    out[1] *= gt;
}

void ManufacturedCase::convection(double x, double y, double t, double out[2]) const {
    double u[2], grad[4];
    velocity(x, y, t, u);
    velocity_gradient(x, y, t, grad);
    out[0] = u[0] * grad[0] + u[1] * grad[1];
    out[1] = u[0] * grad[2] + u[1] * grad[3];
}

ExactVector ManufacturedCase::exact_velocity(double t) const {
    ExactVector e;
    e.value = [this, t](double x, double y) {
        double u[2];
        velocity(x, y, t, u);
        return std::array<double, 2>{u[0], u[1]};
    };
    e.gradient = [this, t](double x, double y) {
        double g4[4];
        velocity_gradient(x, y, t, g4);
        return std::array<double, 4>{g4[0], g4[1], g4[2], g4[3]};
    };
    return e;
}

ExactScalar ManufacturedCase::exact_pressure(double t) const {
    ExactScalar e;
    e.value = [this, t](double x, double y) { return pressure(x, y, t); };
    e.gradient = [this, t](double x, double y) {
        double g2[2];
        pressure_gradient(x, y, t, g2);
        return std::array<double, 2>{g2[0], g2[1]};
    };
    return e;
}

ManufacturedCase taylor_green_case(double amplitude, TimeProfile profile) {
    if (amplitude == 0.0)
        throw std::invalid_argument("taylor_green_case: amplitude must be nonzero");
    ManufacturedCase c;
    c.name = "taylor_green";
    c.amplitude = amplitude;
    c.profile = profile;
    return c;
}

ManufacturedCase zero_case() {
    ManufacturedCase c;
    c.name = "zero";
    c.amplitude = 0.0;
    c.is_zero = true;
    return c;
}

void ForcingField::operator()(double x, double y, double t, double out[2]) const {
    double ut[2], lap[2], gp[2];
    mms->velocity_time_derivative(x, y, t, ut);
    mms->velocity_laplacian(x, y, t, lap);
    mms->pressure_gradient(x, y, t, gp);
    out[0] = ut[0] - nu * lap[0] + gp[0];
    out[1] = ut[1] - nu * lap[1] + gp[1];
    if (include_convection) {
        double conv[2];
        mms->convection(x, y, t, conv);
        out[0] += conv[0];
        out[1] += conv[1];
    }
}

ForcingField stokes_forcing(const ManufacturedCase& mms, double nu) {
    return ForcingField{&mms, nu, false};
}

ForcingField nse_forcing(const ManufacturedCase& mms, double nu) {
    return ForcingField{&mms, nu, true};
}

void verify_case(const ManufacturedCase& mms, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> tdist(0.0, 2.0);

    for (int s = 0; s < 1000; ++s) {
        const double x = unit(rng), y = unit(rng), t = tdist(rng);
        double grad[4];
        mms.velocity_gradient(x, y, t, grad);
        if (std::abs(grad[0] + grad[3]) > 1e-12)
            throw std::runtime_error("manufactured case: velocity not divergence-free");
    }

    for (int s = 0; s < 250; ++s) {
        const double a = unit(rng), t = tdist(rng);
        const double edges[4][2] = {{a, 0.0}, {a, 1.0}, {0.0, a}, {1.0, a}};
        for (const auto& e : edges) {
            double u[2];
            mms.velocity(e[0], e[1], t, u);
            if (std::abs(u[0]) > 1e-12 || std::abs(u[1]) > 1e-12)
                throw std::runtime_error("manufactured case: velocity nonzero on boundary");
        }
    }

    // Mean pressure over the square by a tensor Gauss rule.
    {
        const double nodes[4] = {0.069431844202974, 0.330009478207572,
                                 0.669990521792428, 0.930568155797026};
        const double weights[4] = {0.173927422568727, 0.326072577431273,
                                   0.326072577431273, 0.173927422568727};
        double mean = 0.0;
        const int cells = 16;
        for (int cx = 0; cx < cells; ++cx)
            for (int cy = 0; cy < cells; ++cy)
                for (int i = 0; i < 4; ++i)
                    for (int j = 0; j < 4; ++j) {
                        const double x = (cx + nodes[i]) / cells;
                        const double y = (cy + nodes[j]) / cells;
                        mean += weights[i] * weights[j] / (cells * cells) *
                                mms.pressure_shape(x, y);
                    }
        if (std::abs(mean) > 1e-10)
            throw std::runtime_error("manufactured case: pressure mean not zero");
    }

    // Hand-derived derivatives against central finite differences.
    const double fd = 1e-5, tol = 1e-6;
    auto check = [&](double got, double want, const char* what) {
        if (std::abs(got - want) > tol)
            throw std::runtime_error(std::string("manufactured case: derivative mismatch: ") +
                                     what);
    };
    for (int s = 0; s < 100; ++s) {
        const double x = 0.05 + 0.9 * unit(rng);
        const double y = 0.05 + 0.9 * unit(rng);
        const double t = tdist(rng);

        double up[2], um[2], grad[4], lap[2], ut[2], gp[2];
        mms.velocity_gradient(x, y, t, grad);

        mms.velocity(x + fd, y, t, up);
        mms.velocity(x - fd, y, t, um);
        check(grad[0], (up[0] - um[0]) / (2 * fd), "dU1/dx");
        check(grad[2], (up[1] - um[1]) / (2 * fd), "dU2/dx");
        mms.velocity(x, y + fd, t, up);
        mms.velocity(x, y - fd, t, um);
        check(grad[1], (up[0] - um[0]) / (2 * fd), "dU1/dy");
        check(grad[3], (up[1] - um[1]) / (2 * fd), "dU2/dy");

        mms.velocity(x, y, t + fd, up);
        mms.velocity(x, y, t - fd, um);
        mms.velocity_time_derivative(x, y, t, ut);
        check(ut[0], (up[0] - um[0]) / (2 * fd), "dU1/dt");
        check(ut[1], (up[1] - um[1]) / (2 * fd), "dU2/dt");

        double gxp[4], gxm[4], gyp[4], gym[4];
        mms.velocity_gradient(x + fd, y, t, gxp);
        mms.velocity_gradient(x - fd, y, t, gxm);
        mms.velocity_gradient(x, y + fd, t, gyp);
        mms.velocity_gradient(x, y - fd, t, gym);
        mms.velocity_laplacian(x, y, t, lap);
        check(lap[0], (gxp[0] - gxm[0]) / (2 * fd) + (gyp[1] - gym[1]) / (2 * fd), "lap U1");
        check(lap[1], (gxp[2] - gxm[2]) / (2 * fd) + (gyp[3] - gym[3]) / (2 * fd), "lap U2");

        mms.pressure_gradient(x, y, t, gp);
        check(gp[0], (mms.pressure(x + fd, y, t) - mms.pressure(x - fd, y, t)) / (2 * fd),
              "dP/dx");
        check(gp[1], (mms.pressure(x, y + fd, t) - mms.pressure(x, y - fd, t)) / (2 * fd),
              "dP/dy");
    }
}

double estimate_rate(std::span<const std::pair<double, double>> samples) {
    if (samples.size() < 2)
        throw std::invalid_argument("estimate_rate: need at least two samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [param, err] : samples) {
        if (!(param > 0.0) || !(err > 0.0))
            throw std::invalid_argument("estimate_rate: samples must be positive");
        const double lx = std::log(param), ly = std::log(err);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(samples.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void ErrorReport::accumulate(const StepRecord& rec, double dt, double nu, double delta) {
    steps.push_back(rec);
    a_l2 = std::max(a_l2, rec.t * rec.velocity_l2 * rec.velocity_l2);
    const double h1_term = nu * rec.velocity_h1 * rec.velocity_h1 +
                           delta * rec.pressure_h1 * rec.pressure_h1;
    a_h1 += dt * h1_term;
    a_h1w += dt * rec.t * h1_term;
    a_p += dt * rec.t * rec.pressure_l2 * rec.pressure_l2;
}

std::array<double, 4> ErrorReport::aggregates_from_steps(double dt, double nu,
                                                         double delta) const {
    double l2 = 0.0, h1 = 0.0, h1w = 0.0, p = 0.0;
    for (const auto& rec : steps) {
        l2 = std::max(l2, rec.t * rec.velocity_l2 * rec.velocity_l2);
        const double h1_term = nu * rec.velocity_h1 * rec.velocity_h1 +
                               delta * rec.pressure_h1 * rec.pressure_h1;
        h1 += dt * h1_term;
        h1w += dt * rec.t * h1_term;
        p += dt * rec.t * rec.pressure_l2 * rec.pressure_l2;
    }
    return {l2, h1, h1w, p};
}

} // namespace projstab
