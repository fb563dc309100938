#include "canard/torus.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <numbers>

namespace canard {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec full_state(const Eigen::Vector2d& s) {
    Vec z(3);
    z << s.x(), s.y(), 0.0;
    return z;
}

}  // namespace

IntegratorConfig floquet_integrator() {
    IntegratorConfig cfg;
    cfg.rtol = 1e-12;
    cfg.atol = 1e-14;
    return cfg;
}

PeriodicOrbit find_periodic_orbit(const ModelParams& p, const Eigen::Vector2d* guess, double tol, int max_iter) {
    p.validate();
    PeriodicOrbit orb;
    orb.p = p;
    orb.period = kTwoPi / p.omega;
    orb.s0 = guess ? *guess : Eigen::Vector2d(p.a, cubic_f(p.a));
    IntegratorConfig cfg = floquet_integrator();
    cfg.store = false;
    for (int it = 0; it <= max_iter; ++it) {
        const auto v = integrate_with_variational(field::Full{p}, full_state(orb.s0), Mat::Identity(3, 3), 0.0,
                                                  orb.period, cfg);
        const Eigen::Vector2d g = v.traj.back().head(2) - orb.s0;
        orb.residual = g.norm();
        orb.iterations = it;
        if (orb.residual < tol) return orb;
        const Eigen::Matrix2d A = v.M.topLeftCorner(2, 2) - Eigen::Matrix2d::Identity();
        Eigen::FullPivLU<Eigen::Matrix2d> lu(A);
        if (!lu.isInvertible()) throw Error(ErrorKind::SingularMatrix, "monodromy has a unit multiplier");
        orb.s0 -= lu.solve(g);
        if (!orb.s0.allFinite()) break;
    }
    throw Error(ErrorKind::NewtonDivergence, "periodic-orbit shooting did not converge");
}

FloquetResult floquet(const PeriodicOrbit& orbit) {
    IntegratorConfig cfg = floquet_integrator();
    cfg.store = false;
    const auto v =
        integrate_with_variational(field::Full{orbit.p}, full_state(orbit.s0), Mat::Identity(3, 3), 0.0, orbit.period, cfg);
    FloquetResult r;
    r.period = orbit.period;
    r.monodromy = v.M.topLeftCorner(2, 2);
    r.trace_integral = v.trace_integral;
    const Eigen::EigenSolver<Eigen::Matrix2d> es(r.monodromy);
    r.rho1 = es.eigenvalues()[0];
    r.rho2 = es.eigenvalues()[1];
    const std::complex<double> prod = r.rho1 * r.rho2;
    r.product_trace_error = std::abs(prod - std::exp(r.trace_integral)) / std::abs(prod);
    r.near_unit_circle = std::abs(std::abs(r.rho1) - 1.0) < 1e-3 || std::abs(std::abs(r.rho2) - 1.0) < 1e-3;
    return r;
}

TorusBifurcation locate_torus_bifurcation(double b, double omega, double eps, double a_lo, double a_hi,
                                          double tol) {
    if (!(a_lo < a_hi)) throw Error(ErrorKind::InvalidInput, "bracket must satisfy a_lo < a_hi");
    if (std::abs(omega - std::sqrt(eps)) <= 1e-9 * std::sqrt(eps))
        throw Error(ErrorKind::Resonance, "omega = sqrt(eps) resonates with the Hopf frequency at a = 1");
    // Warm starts carry the orbit along the root iteration.
    Eigen::Vector2d last(0.5 * (a_lo + a_hi), cubic_f(0.5 * (a_lo + a_hi)));
    bool have_last = false;
    auto orbit_at = [&](double a) {
        const ModelParams p{a, b, omega, eps};
        PeriodicOrbit o;
        try {
            o = find_periodic_orbit(p, have_last ? &last : nullptr);
        } catch (const Error&) {
            o = find_periodic_orbit(p);
        }
        last = o.s0;
        have_last = true;
        return o;
    };
    auto g = [&](double a) { return floquet(orbit_at(a)).trace_integral; };
    const double flo = g(a_lo), fhi = g(a_hi);
    TorusBifurcation out;
    double root;
    if (flo == 0.0) {
        root = a_lo;
    } else if (fhi == 0.0) {
        root = a_hi;
    } else {
        if (flo * fhi > 0.0) throw Error(ErrorKind::NoBracket, "trace integral has no sign change in the bracket");
        std::uintmax_t it = 200;
        const auto r = boost::math::tools::toms748_solve(
            g, a_lo, a_hi, flo, fhi, [tol](double l, double h) { return std::abs(h - l) <= tol; }, it);
        root = 0.5 * (r.first + r.second);
    }
    out.a_tb = root;
    out.orbit = orbit_at(root);
    out.at_root = floquet(out.orbit);
    return out;
}

FirstHarmonic first_harmonic(const PeriodicOrbit& orbit, int samples) {
    if (samples < 8) throw Error(ErrorKind::InvalidInput, "need at least 8 samples per period");
    // Land on every sample time; interpolation error would swamp small amplitudes.
    IntegratorConfig cfg = floquet_integrator();
    cfg.rtol = 1e-13;
    cfg.atol = 1e-15;
    cfg.store = false;
    FirstHarmonic h;
    const double w = orbit.p.omega;
    Vec s = full_state(orbit.s0);
    // Trapezoid rule on a periodic integrand is spectrally accurate.
    for (int k = 0; k < samples; ++k) {
        const double t = orbit.period * k / samples;
        if (k > 0) s = integrate(field::Full{orbit.p}, s, orbit.period * (k - 1) / samples, t, cfg).back();
        const double c = std::cos(w * t), sn = std::sin(w * t);
        h.xc += s[0] * c;
        h.xs += s[0] * sn;
        h.yc += s[1] * c;
        h.ys += s[1] * sn;
    }
    const double scale = 2.0 / samples;
    h.xc *= scale;
    h.xs *= scale;
    h.yc *= scale;
    h.ys *= scale;
    return h;
}

}  // namespace canard
