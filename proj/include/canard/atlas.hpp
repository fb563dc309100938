#pragma once

#include <string>
#include <vector>

#include "canard/colloc.hpp"
#include "canard/continuation.hpp"
#include "canard/model.hpp"

namespace canard {

// O(eps) slow-manifold graph y = h(x, theta) of either sheet, valid away from the folds.
double slow_manifold_y(double x, double theta, double a, double b, double omega, double eps);

// Canard segment: orbit from the attracting sheet at x_start to the repelling
// sheet at x_end, both ends on the slow-manifold graph. Parameters
// {T, a, theta0, omega, eps, b}; theta0 is the forcing phase at the start.
struct CanardSegmentOptions {
    double x_start = 1.5;
    double x_end = 0.0;
    int m = 4;
    int intervals = 0;  // 0 picks a count resolving the forcing period
};

enum CanardParam { kT = 0, kA = 1, kTheta0 = 2, kOmega = 3, kEps = 4, kB = 5 };

BvpProblem canard_segment_problem(const CanardSegmentOptions& opt = {});
int canard_default_intervals(double omega, double eps, const CanardSegmentOptions& opt = {});

// Converged segment at fixed theta0 with T and a free.
OrbitSegment solve_canard_segment(const ModelParams& p, double theta0, const CanardSegmentOptions& opt = {});

struct CanardFamily {
    Branch branch;                 // continuation in theta0 with (T, a) free
    std::vector<FoldPoint> folds;  // turning points of a along the family
    std::vector<double> fold_a;
    std::vector<double> fold_theta0;
    std::vector<OrbitSegment> fold_segments;
};

// One sweep of theta0 over a full forcing period.
CanardFamily canard_family(const ModelParams& p, double theta0_start, const CanardSegmentOptions& opt = {},
                           int max_points = 4000);

// Refined segment at the lower (minimum a) or upper (maximum a) fold of the primary
// family, found by a short theta0 sweep started ahead of the predicted fold phase.
OrbitSegment primary_fold_segment(const ModelParams& p, bool upper, const CanardSegmentOptions& opt = {});

struct FoldCurveSample {
    double extra = 0.0;  // omega or eps
    double a = 0.0;
    bool ok = false;
};

struct FoldCurve {
    std::string extra_param;
    Branch branch;                        // raw two-parameter branch
    std::vector<FoldCurveSample> samples; // re-solved on the requested grid
    bool terminated = false;
    std::string stop_reason;
    double reach = 0.0;                   // extreme extra-parameter value reached
};

struct FoldCurveOptions {
    CanardSegmentOptions segment;
    int max_points = 1500;
    double h0 = 1e-3;
    double h_min = 1e-6;
    double h_max = 1.0;
};

// Continues a refined fold segment of a(theta0) in (extra, a), where extra is "omega" or "eps",
// toward `extra_target`, and re-solves the fold on `grid`.
FoldCurve continue_fold_curve(const OrbitSegment& fold, const std::string& extra_param,
                              double extra_target, const std::vector<double>& grid,
                              const FoldCurveOptions& opt = {});

struct FoldCurvePair {
    FoldCurve lower, upper;
};

// Both fold curves of the primary maximal canard over omega in [omega0, omega1],
// started from the primary folds at omega0.
FoldCurvePair fold_curves_omega(double b, double eps, double omega0, double omega1, const std::vector<double>& grid,
                                const FoldCurveOptions& opt = {});

struct WidthPoint {
    double eps = 0.0;
    double a_minus = 0.0, a_plus = 0.0;
    double width = 0.0;
    double width_theory = 0.0;
    bool ok = false;
};

struct WidthResult {
    std::vector<WidthPoint> points;
    double slope = 0.0;         // fitted d log(width) / d(1/eps)
    double slope_theory = 0.0;  // -omega^2 / 2
};

// Canard-region width at fixed omega by fold continuation in eps.
WidthResult canard_region_width(const std::vector<double>& eps_list, double b, double omega,
                                const FoldCurveOptions& opt = {});

// Least-squares slope of log(width) against 1/eps.
double fit_log_width_slope(const std::vector<WidthPoint>& pts);

}  // namespace canard
