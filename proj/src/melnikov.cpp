#include "canard/melnikov.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

namespace canard {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310002;  // sqrt(2 pi)

template <class F>
MelnikovResult quad(F&& f, double t_max) {
    MelnikovResult r;
    r.truncation = t_max;
    double err = 0.0;
    // Split at 0 so the Gaussian bulk is sampled densely on both halves.
    const double left = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -t_max, 0.0, 20, 1e-14,
                                                                                    &err);
    double err2 = 0.0;
    const double right =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, t_max, 20, 1e-14, &err2);
    r.value = left + right;
    r.error_estimate = err + err2;
    r.converged = std::isfinite(r.value) && r.error_estimate <= 1e-10 * std::max(1.0, std::abs(r.value));
    if (!std::isfinite(r.value)) throw Error(ErrorKind::QuadratureFailure, "non-finite Melnikov quadrature");
    return r;
}

}  // namespace

const char* to_string(Regime r) {
    switch (r) {
        case Regime::LowFreq: return "LowFreq";
        case Regime::Intermediate: return "Intermediate";
        case Regime::HighFreq: return "HighFreq";
    }
    return "Unknown";
}

Regime regime_from_string(const std::string& s) {
    if (s == "low" || s == "LowFreq") return Regime::LowFreq;
    if (s == "intermediate" || s == "Intermediate") return Regime::Intermediate;
    if (s == "high" || s == "HighFreq") return Regime::HighFreq;
    throw Error(ErrorKind::InvalidInput, "unknown regime '" + s + "'");
}

GammaPoint gamma_point(double t2) {
    GammaPoint g;
    g.u2 = -0.5 * t2;
    g.v2 = 0.25 * t2 * t2 - 0.5;
    const double w = std::exp(-2.0 * g.v2);
    const double h = g.u2 * g.u2 - g.v2 - 0.5;
    g.dHdu = 2.0 * g.u2 * w;
    g.dHdv = w * (-2.0 * h - 1.0);
    return g;
}

MelnikovResult melnikov_d1_fsn(double r2, double beta, double gamma, double omega_bar, double theta20,
                               double t_max) {
    if (!(r2 > 0.0)) throw Error(ErrorKind::InvalidInput, "r2 must be positive");
    const double r22 = r2 * r2;
    const double cq = std::cos(r2 * theta20);
    auto f = [&](double t) {
        const GammaPoint g = gamma_point(t);
        const double pu = -g.u2 * g.u2 * g.u2 / 3.0;
        const double pv = gamma + beta / r22 * (std::cos(r22 * omega_bar * t) * cq - 1.0);
        return g.dHdu * pu + g.dHdv * pv;
    };
    MelnikovResult r = quad(f, t_max);
    r.regime = Regime::LowFreq;
    r.closed_form = std::numbers::e * kSqrt2Pi / r22 *
                    (beta - r22 * (0.125 + gamma) -
                     beta * std::exp(-0.5 * r22 * r22 * omega_bar * omega_bar) * cq);
    r.abs_err = std::abs(r.value - r.closed_form);
    return r;
}

MelnikovResult melnikov_d2_fsn(double r2, double beta, double omega_bar, double theta20, double t_max) {
    if (!(r2 > 0.0)) throw Error(ErrorKind::InvalidInput, "r2 must be positive");
    const double r22 = r2 * r2;
    const double sq = std::sin(r2 * theta20);
    auto f = [&](double t) {
        const GammaPoint g = gamma_point(t);
        return g.dHdv * (-beta / (r22 * r2) * std::sin(r22 * omega_bar * t) * sq);
    };
    MelnikovResult r = quad(f, t_max);
    r.regime = Regime::LowFreq;
    r.closed_form = 0.0;
    r.abs_err = std::abs(r.value);
    return r;
}

MelnikovResult melnikov_d_intermediate(double alpha_t, double beta_t, double Omega, double theta0, double t_max) {
    auto f = [&](double t) {
        const GammaPoint g = gamma_point(t);
        const double pu = -g.u2 * g.u2 * g.u2 / 3.0;
        const double pv = alpha_t + beta_t * std::cos(Omega * t + theta0);
        return g.dHdu * pu + g.dHdv * pv;
    };
    MelnikovResult r = quad(f, t_max);
    r.regime = Regime::Intermediate;
    r.closed_form = -0.5 * std::numbers::e * kSqrt2Pi *
                    (0.125 + alpha_t + beta_t * std::exp(-0.5 * Omega * Omega) * std::cos(theta0));
    r.abs_err = std::abs(r.value - r.closed_form);
    return r;
}

CanardLocus canard_locus(Regime regime, double b, double omega, double eps, double theta0) {
    if (!(eps > 0.0 && omega >= 0.0 && b >= 0.0))
        throw Error(ErrorKind::InvalidInput, "need eps > 0, omega >= 0, b >= 0");
    CanardLocus out;
    if (regime == Regime::LowFreq) {
        // d1 = 0 solved for gamma, then a = 1 - b + eps gamma.
        const double r2 = std::pow(eps, 0.25), r22 = r2 * r2;
        const double beta = b / std::sqrt(eps), omega_bar = omega / eps;
        const double gamma =
            beta / r22 * (1.0 - std::exp(-0.5 * r22 * r22 * omega_bar * omega_bar) * std::cos(theta0)) - 0.125;
        out.a = 1.0 - b + eps * gamma;
        if (b > 10.0 * std::sqrt(eps)) out.warning = "b is not O(sqrt(eps))";
        if (omega_bar > 10.0) out.warning += std::string(out.warning.empty() ? "" : "; ") + "omega is not O(eps)";
    } else {
        // Zero of the intermediate bracket: alpha~ = -1/8 - beta~ exp(-Omega^2/2) cos theta0.
        const double Omega = omega / std::sqrt(eps), beta_t = b / eps;
        const double alpha_t = -0.125 - beta_t * std::exp(-0.5 * Omega * Omega) * std::cos(theta0);
        out.a = 1.0 + eps * alpha_t;
        if (b > 10.0 * eps) out.warning = "b is not O(eps)";
        if (regime == Regime::Intermediate && (Omega > 10.0 || Omega < 0.1))
            out.warning += std::string(out.warning.empty() ? "" : "; ") + "omega is not O(sqrt(eps))";
    }
    return out;
}

}  // namespace canard
