#pragma once

#include <string>

#include "canard/model.hpp"

namespace canard {

enum class Regime { LowFreq, Intermediate, HighFreq };
const char* to_string(Regime r);
Regime regime_from_string(const std::string& s);

struct MelnikovResult {
    double value = 0.0;        // quadrature along the separatrix
    Regime regime = Regime::LowFreq;
    double closed_form = 0.0;  // closed-form value
    double abs_err = 0.0;      // |value - closed_form|
    double truncation = 30.0;  // T_max
    double error_estimate = 0.0;
    bool converged = false;
};

struct GammaPoint {
    double u2, v2, dHdu, dHdv;
};

// Point of the H = 0 separatrix at time t2 and the gradient of H there.
GammaPoint gamma_point(double t2);

MelnikovResult melnikov_d1_fsn(double r2, double beta, double gamma, double omega_bar, double theta20,
                               double t_max = 30.0);
// The sine-term coefficient; vanishes by oddness of the integrand.
MelnikovResult melnikov_d2_fsn(double r2, double beta, double omega_bar, double theta20, double t_max = 30.0);
MelnikovResult melnikov_d_intermediate(double alpha_t, double beta_t, double Omega, double theta0,
                                       double t_max = 30.0);

// Quadrature of the intermediate integrand divided by its closed form.
// The integrand integrates to exactly twice the closed-form bracket.
constexpr double kIntermediateQuadratureToClosedForm = 2.0;

struct CanardLocus {
    double a = 0.0;
    std::string warning;  // scaling assumptions of the regime not met
};

// Solves D = 0 at forcing phase theta0 by inverting the regime's closed form.
CanardLocus canard_locus(Regime regime, double b, double omega, double eps, double theta0);

}  // namespace canard
