#pragma once

#include <complex>

#include "canard/model.hpp"
#include "canard/ode.hpp"

namespace canard {

// Forced response with the forcing period T = 2 pi / omega, found by shooting on
// (x, y) at theta = 0 with Newton steps from the monodromy matrix.
struct PeriodicOrbit {
    ModelParams p;
    Eigen::Vector2d s0;  // (x, y) at t = 0, theta = 0
    double period = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

IntegratorConfig floquet_integrator();

// Starts from `guess`, or from the equilibrium (a, f(a)) when null.
PeriodicOrbit find_periodic_orbit(const ModelParams& p, const Eigen::Vector2d* guess = nullptr,
                                  double tol = 1e-11, int max_iter = 30);

struct FloquetResult {
    double period = 0.0;
    std::complex<double> rho1, rho2;
    double trace_integral = 0.0;
    Eigen::Matrix2d monodromy;
    double product_trace_error = 0.0;  // |rho1 rho2 - exp(trace)| / |rho1 rho2|
    bool near_unit_circle = false;     // a multiplier within 1e-3 of |rho| = 1
};

FloquetResult floquet(const PeriodicOrbit& orbit);

struct TorusBifurcation {
    double a_tb = 0.0;
    PeriodicOrbit orbit;
    FloquetResult at_root;
};

// Root of the trace integral in a on [a_lo, a_hi]. Throws NoBracket without a sign
// change and Resonance at omega = sqrt(eps).
TorusBifurcation locate_torus_bifurcation(double b, double omega, double eps, double a_lo, double a_hi,
                                          double tol = 1e-10);

// Cosine and sine coefficients at the forcing frequency over one period.
struct FirstHarmonic {
    double xc = 0.0, xs = 0.0, yc = 0.0, ys = 0.0;
    double x_amplitude() const { return std::hypot(xc, xs); }
    double y_amplitude() const { return std::hypot(yc, ys); }
};

FirstHarmonic first_harmonic(const PeriodicOrbit& orbit, int samples = 256);

}  // namespace canard
