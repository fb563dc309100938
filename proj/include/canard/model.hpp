#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "canard/errors.hpp"

namespace canard {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Parameter point of x' = y - f(x), y' = eps(-x + a + b cos theta), theta' = omega.
struct ModelParams {
    double a = 1.0;
    double b = 0.0;
    double omega = 1.0;
    double eps = 0.01;

    double omega_bar() const { return omega / eps; }
    double Omega() const;
    double alpha() const { return a - 1.0; }
    // FSN I chart scalings: b = sqrt(eps) beta, a - 1 + b = eps gamma.
    double beta() const;
    double gamma() const { return (a - 1.0 + b) / eps; }
    // Fold-of-cycles chart scalings: a - 1 = eps alpha~, b = eps beta~.
    double alpha_tilde() const { return (a - 1.0) / eps; }
    double beta_tilde() const { return b / eps; }

    void validate() const;
};

inline double cubic_f(double x) { return x * x * x / 3.0 - x; }
inline double cubic_df(double x) { return x * x - 1.0; }

// Per-system parameter sets. Holding them in one variant means a tag can only
// ever be evaluated with its own parameters.
namespace field {
struct Full { ModelParams p; };
struct Layer {};
struct ReducedProjection { ModelParams p; };
struct Desingularized { ModelParams p; };
struct ChartK1Fsn { double beta, gamma, omega_bar; };
struct ChartK2Fsn { double r2, beta, gamma, omega_bar, theta20; };
struct ChartK1Torus { double alpha_t, beta_t, Omega; };
struct ChartK2Torus { double r2, alpha_t, beta_t, Omega, theta0; };
struct UnperturbedHamiltonian {};
struct HopfRescaled { double delta, omega, alpha_bar, b_bar, t0; };
// (x, y) with the forcing phase theta0 + omega t written explicitly.
struct ForcedPlanar { ModelParams p; double theta0 = 0.0; };
}  // namespace field

using VectorField = std::variant<field::Full, field::Layer, field::ReducedProjection,
                                 field::Desingularized, field::ChartK1Fsn, field::ChartK2Fsn,
                                 field::ChartK1Torus, field::ChartK2Torus,
                                 field::UnperturbedHamiltonian, field::HopfRescaled,
                                 field::ForcedPlanar>;

int state_dim(const VectorField& vf);
std::string field_name(const VectorField& vf);
bool has_analytic_jacobian(const VectorField& vf);

Vec eval_field(const VectorField& vf, const Vec& s, double t);
// Analytic where available, central differences otherwise.
Mat field_jacobian(const VectorField& vf, const Vec& s, double t);

// H = exp(-2v)(u^2 - v - 1/2). Throws OutsideValidity when exp(-2v) overflows.
double hamiltonian(double u2, double v2);

enum class SingularityKind { FoldedNode, FoldedSaddle, FoldedFocus, FSN_I, Degenerate };
const char* to_string(SingularityKind k);

struct FoldedSingularity {
    double theta_star = 0.0;
    SingularityKind kind = SingularityKind::Degenerate;
    std::complex<double> lambda1, lambda2;
    double mu = 0.0;   // only meaningful for real eigenvalue pairs
    int fold_branch = +1;  // +1: x = 1, -1: x = -1
};

constexpr double kTolFsn = 1e-9;

// Jacobian of the desingularized flow at (x, theta).
Eigen::Matrix2d desingularized_jacobian(const ModelParams& p, double x, double theta);
std::vector<FoldedSingularity> folded_singularities(const ModelParams& p);
double eigenvalue_ratio(const FoldedSingularity& fs);
int s_max(double mu);

// b^2 - (1-a)^2 < 1/(64 omega_bar^2) is the node window.
bool folded_node_condition(const ModelParams& p);

std::pair<double, double> fold_curve_theory(double b, double omega, double eps);
double fold_curve_theory_phase(double b, double omega, double eps, double theta0);
std::pair<double, double> degenerate_node_locus(double b, double eps, double omega_bar);

double torus_bif_relation(double a, double b, double omega, double eps);
double torus_bif_locus(double b, double omega, double eps, double a_lo = 0.5, double a_hi = 1.0);

struct ResonancePoint { double omega_bar, a; };
// Singular-limit curve mu = 1/(2k+1). side = -1 searches a < 1, side = +1 searches a > 1.
std::vector<ResonancePoint> resonance_curve(int k, double b, const std::vector<double>& omega_bar_grid,
                                            int side = -1);

// First-order O(b) periodic response around (a, f(a)).
struct HarmonicResponse { double xc, xs, yc, ys; };
HarmonicResponse first_order_response(double a, double omega, double eps);

}  // namespace canard
