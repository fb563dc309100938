#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "canard/ode.hpp"

namespace canard {

// Fast system r' = F(r, theta, z), theta' = 1 around a rectified cycle at r = 0.
// Fr and Frr may be left empty; they are then taken by central differences.
struct RectifiedFastSystem {
    using Fn = std::function<double(double r, double theta, double z)>;
    Fn F, Fr, Frr;
    std::string name;

    double f(double r, double th, double z) const { return F(r, th, z); }
    double fr(double r, double th, double z) const;
    double frr(double r, double th, double z) const;
    // max |F(0, theta, 0)| over a theta grid; zero when the cycle is rectified.
    double cycle_defect(int samples = 256) const;
    // Mean of Fr(0, theta, 0); zero when the cycle has a unit multiplier.
    double multiplier_defect(int samples = 256) const;
};

// z - r^2 + c r cos(theta).
RectifiedFastSystem test_fast_system(double c = 0.3);
// A planar fold of cycles: radial rate (1 + r)(z - (2r + r^2)^2 (1 + k cos theta)).
RectifiedFastSystem fold_cycle_system(double k = 0.5);

struct NormalFormOptions {
    double tol = 1e-12;     // periodicity gap target
    double nf_tol = 1e-9;   // acceptance threshold for the gaps
    double fd_step = 1e-7;  // forward-difference step in the lambdas
    int max_iter = 40;
    int samples = 256;      // theta grid for the returned phi samples
    IntegratorConfig ode = [] {
        IntegratorConfig c;
        c.rtol = 1e-12;
        c.atol = 1e-14;
        c.store = false;
        return c;
    }();
};

// Coefficients lambda_j of the transformed system rho' = -(lambda_0 + lambda_1 rho + lambda_2 rho^2)
// and the periodic functions phi_j of r = phi_0 + rho e^{phi_1} + rho^2 phi_2.
struct NormalFormSolution {
    int N = 1;
    double z = 0.0;
    std::vector<double> lambdas;
    std::vector<double> theta;
    std::vector<std::vector<double>> phis;  // phis[j][k] at theta[k]
    Eigen::MatrixXd DH;                     // d(gaps)/d(lambdas)
    double jacobian_det = 0.0;
    double periodicity_residual = 0.0;
    int iterations = 0;
    // Coefficients of rho' = G(rho, z) = sum g_j rho^j.
    double g(int j) const { return -lambdas.at(j); }
};

// Periodicity gaps for given lambdas, from phi_j(0) = 0.
Eigen::VectorXd periodicity_gaps(const RectifiedFastSystem& sys, double z, const Eigen::VectorXd& lambdas,
                                 const IntegratorConfig& cfg);

NormalFormSolution solve_lambda(const RectifiedFastSystem& sys, double z, int N, const NormalFormOptions& opt = {},
                                const Eigen::VectorXd* initial = nullptr);

// -(1/2pi) integral of Frr(0, theta, 0) e^{phi_1} / 2, by trapezoid rule on the solution samples.
double lambda2_quadrature(const RectifiedFastSystem& sys, const NormalFormSolution& sol);

struct NondegeneracyReport {
    double dz = 0.0;
    double dg0_dz = 0.0;          // central difference at z = 0
    double dg0_dz_richardson = 0.0;
    double g2 = 0.0;              // at z = 0
    double threshold = 1e-6;
    bool transversal = false;     // |dg0/dz| > threshold
    bool quadratic = false;       // |g2| > threshold
    double cycle_defect = 0.0;
    double multiplier_defect = 0.0;
    bool pass() const { return transversal && quadratic; }
};

NondegeneracyReport check_nondegeneracy(const RectifiedFastSystem& sys, double dz = 1e-4,
                                        const NormalFormOptions& opt = {});

// Coefficients over a z grid, with the substitution to rho' = z~ - u^2 + O(u^3).
struct NormalFormRow {
    double z = 0.0;
    double g0 = 0.0, g1 = 0.0, g2 = 0.0;
    double jacobian_det = 0.0;
    double residual = 0.0;
    // u = -g2 (rho + g1 / (2 g2)) gives u' = z~ - u^2 with z~ = g1^2/4 - g0 g2.
    double z_tilde = 0.0;
    // Errors of the plain substitution z~ = g0(z): the linear term and the drift of g2.
    double linear_error = 0.0;
    double quadratic_drift = 0.0;
};

struct NormalFormTable {
    NondegeneracyReport nondegeneracy;
    std::vector<NormalFormRow> rows;
};

NormalFormTable reduce_to_normal_form(const RectifiedFastSystem& sys, const std::vector<double>& z_grid,
                                      const NormalFormOptions& opt = {});

std::string to_json(const NormalFormTable& t, const NormalFormSolution& n1);

}  // namespace canard
