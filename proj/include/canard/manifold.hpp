#pragma once

#include <Eigen/Dense>
#include <vector>

#include "canard/continuation.hpp"
#include "canard/model.hpp"
#include "canard/ode.hpp"

namespace canard {

// Section angle through the folded node, explicit part only.
// Throws NoFoldedNodeSection when |(1 - a - eps/8) / b| > 1.
double section_angle(double a, double b, double eps);

// Slow manifolds in the section theta = theta_n, parametrized by flight time t.
// S_a: forward image of the seed (x_attr, h(x_attr, theta_n - omega t), theta_n - omega t).
// S_r: backward image of the seed (x_rep, h(x_rep, theta_n + omega t), theta_n + omega t).
struct ManifoldOptions {
    double x_attr = 1.5;
    double x_rep = 0.0;
    double t_start = 0.5;
    double t_max = 400.0;
    double dt0 = 0.25;
    double dt_min = 1e-9;
    double resolution = 1e-3;  // largest gap between consecutive points
    // The curve ends where |dP/dt| exceeds this: past it the orbits trace the other sheet.
    double max_speed = 1.0;
    // Orbits leaving x in [x_lo, x_hi] are dropped and end the curve; S_r seeds below x_lo are allowed.
    double x_lo = 0.3;
    double x_hi = 1.7;
    double rtol = 1e-11;
    double atol = 1e-13;
    int max_points = 200000;
};

struct ManifoldCurve {
    bool attracting = true;
    double theta_n = 0.0;
    std::vector<double> t;
    std::vector<Eigen::Vector2d> pts;
    std::size_t size() const { return t.size(); }
};

// Point of the curve at flight time t; returns false when the orbit left the window.
bool manifold_point(const ModelParams& p, bool attracting, double theta_n, double t, const ManifoldOptions& opt,
                    Eigen::Vector2d& out);

// First connected piece, sampled with gaps below opt.resolution.
ManifoldCurve compute_manifold(const ModelParams& p, bool attracting, double theta_n,
                               const ManifoldOptions& opt = {});

struct Intersection {
    Eigen::Vector2d point;
    double t_a = 0.0, t_b = 0.0;  // interpolated flight times on each curve
    double angle = 0.0;           // crossing angle in [0, pi/2]
    bool refined = false;         // polished by Newton on the flight times
};

// Crossings of two polylines.
std::vector<Intersection> intersect_polylines(const std::vector<Eigen::Vector2d>& A, const std::vector<double>& ta,
                                              const std::vector<Eigen::Vector2d>& B, const std::vector<double>& tb);
std::vector<Intersection> intersect_in_section(const ManifoldCurve& Sa, const ManifoldCurve& Sr);

// Maximal canards as zeros of P_a(t_a; omega) - P_r(t_b; omega), unknowns (t_a, t_b, omega).
class SectionCanardSystem : public ContinuationSystem {
public:
    SectionCanardSystem(ModelParams p, double theta_n, ManifoldOptions opt, double fd_step = 1e-6);
    int dim() const override { return 3; }
    void residual(const Vec& X, Vec& F) const override;
    void jacobian(const Vec& X, std::vector<Triplet>& trips) const override;
    std::vector<std::string> param_names() const override { return {"t_a", "t_b", "omega"}; }
    Vec param_values(const Vec& X) const override { return X; }
    // Newton on (t_a, t_b) at fixed omega.
    NewtonReport refine(Vec& X, const NewtonOptions& opt = {1e-10, 20, 1e-14}) const;

private:
    Eigen::Vector2d point(bool attracting, double t, double omega) const;
    ModelParams p_;
    double theta_n_;
    ManifoldOptions opt_;
    double h_;
};

// Polishes polyline crossings to solutions of P_a(t_a) = P_r(t_b); failures keep the polyline estimate.
void refine_crossings(const ModelParams& p, double theta_n, std::vector<Intersection>& hits,
                      const ManifoldOptions& opt = {}, double tol = 1e-10);

struct SweepFrame {
    double omega = 0.0;
    ManifoldCurve Sa, Sr;
    std::vector<Intersection> hits;
};

struct CountTransition {
    double omega_lo = 0.0, omega_hi = 0.0;
    int change = 0;
    double omega_transition = 0.0;  // bisection of the count
    double omega_fold = 0.0;        // turning point of a continued intersection
    bool fold_found = false;
};

struct SweepResult {
    double theta_n = 0.0;
    std::vector<SweepFrame> frames;
    std::vector<CountTransition> transitions;
};

struct SweepOptions {
    ManifoldOptions manifold;
    double bisect_tol = 1e-5;
    int fold_max_points = 400;
    double fold_h_max = 0.5;
};

// Intersection counts over an omega sweep at fixed (a, b, eps), with each count
// change located by bisection and matched to a fold of a continued intersection.
SweepResult track_count_transitions(double a, double b, double eps, const std::vector<double>& omegas,
                                    const SweepOptions& opt = {});

// Indices where the turning direction of a polyline spiral changes sign,
// measured by the signed angle swept about `center`.
std::vector<int> spiral_reversals(const std::vector<Eigen::Vector2d>& pts, const Eigen::Vector2d& center,
                                  double min_sweep = 0.05);
// Same, with the center taken as the curve end nearer to the sample centroid (the inner end).
std::vector<int> spiral_reversals(const std::vector<Eigen::Vector2d>& pts, double min_sweep = 0.05);

}  // namespace canard
