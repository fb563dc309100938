#include "canard/atlas.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace canard {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double travel_time(const CanardSegmentOptions& opt, double eps) {
    // Leading-order reduced flow x' = -eps / (x + 1) near a = 1.
    const double A = opt.x_start + 1.0, B = opt.x_end + 1.0;
    return (A * A - B * B) / (2.0 * eps);
}

Vec tangent_toward(const ContinuationSystem& sys, const Vec& X, int column, int sign) {
    Vec t = curve_tangent(sys, X);
    if ((t[column] < 0) == (sign > 0)) t = -t;
    return t;
}

}  // namespace

double slow_manifold_y(double x, double theta, double a, double b, double omega, double eps) {
    const double g = cubic_df(x);
    if (std::abs(g) < 1e-3) throw Error(ErrorKind::OutsideValidity, "slow-manifold graph is singular near a fold");
    const double corr = (a - x) / g + b * (g * std::cos(theta) + omega * std::sin(theta)) / (g * g + omega * omega);
    return cubic_f(x) + eps * corr;
}

BvpProblem canard_segment_problem(const CanardSegmentOptions& opt) {
    if (std::abs(cubic_df(opt.x_start)) < 0.2 || std::abs(cubic_df(opt.x_end)) < 0.2)
        throw Error(ErrorKind::InvalidInput, "segment ends must stay away from the fold lines x = +-1");
    BvpProblem pr;
    pr.n = 2;
    pr.param_names = {"T", "a", "theta0", "omega", "eps", "b"};
    pr.rhs = [](double s, const Vec& u, const Vec& p, Vec& f) {
        const double T = p[kT], ph = p[kTheta0] + p[kOmega] * T * s;
        f.resize(2);
        f[0] = T * (u[1] - cubic_f(u[0]));
        f[1] = T * p[kEps] * (-u[0] + p[kA] + p[kB] * std::cos(ph));
    };
    pr.rhs_jac = [](double s, const Vec& u, const Vec& p, Mat& Ju, Mat& Jp) {
        const double T = p[kT], e = p[kEps], b = p[kB], w = p[kOmega];
        const double ph = p[kTheta0] + w * T * s;
        const double c = std::cos(ph), sn = std::sin(ph);
        const double g = -u[0] + p[kA] + b * c;
        Ju << -T * cubic_df(u[0]), T, -T * e, 0.0;
        Jp(0, kT) = u[1] - cubic_f(u[0]);
        Jp(1, kT) = e * g - T * e * b * sn * w * s;
        Jp(1, kA) = T * e;
        Jp(1, kTheta0) = -T * e * b * sn;
        Jp(1, kOmega) = -T * e * b * sn * T * s;
        Jp(1, kEps) = T * g;
        Jp(1, kB) = T * e * c;
    };
    pr.nbc = 4;
    const double xs = opt.x_start, xe = opt.x_end;
    pr.bc = [xs, xe](const Vec& u0, const Vec& u1, const Vec& p, Vec& r) {
        r.resize(4);
        const double th1 = p[kTheta0] + p[kOmega] * p[kT];
        r[0] = u0[0] - xs;
        r[1] = u0[1] - slow_manifold_y(xs, p[kTheta0], p[kA], p[kB], p[kOmega], p[kEps]);
        r[2] = u1[0] - xe;
        r[3] = u1[1] - slow_manifold_y(xe, th1, p[kA], p[kB], p[kOmega], p[kEps]);
    };
    return pr;
}

int canard_default_intervals(double omega, double eps, const CanardSegmentOptions& opt) {
    if (opt.intervals > 0) return opt.intervals;
    const double cycles = omega * travel_time(opt, eps) / kTwoPi;
    return std::max(100, static_cast<int>(std::ceil(12.0 * cycles)) + 40);
}

OrbitSegment solve_canard_segment(const ModelParams& p, double theta0, const CanardSegmentOptions& opt) {
    p.validate();
    const BvpProblem pr = canard_segment_problem(opt);
    const double T = travel_time(opt, p.eps);
    const double A = opt.x_start + 1.0;
    const double t_fold = (A * A - 4.0) / (2.0 * p.eps);
    Vec par(6);
    par << T, fold_curve_theory_phase(p.b, p.omega, p.eps, theta0 + p.omega * t_fold), theta0, p.omega, p.eps, p.b;
    const int N = canard_default_intervals(p.omega, p.eps, opt);
    OrbitSegment g = make_segment(pr, uniform_mesh(N), opt.m, par, [&](double s) {
        const double x = std::sqrt(std::max(A * A - 2.0 * p.eps * T * s, 1e-12)) - 1.0;
        Vec u(2);
        u << x, std::abs(cubic_df(x)) > 0.05 ? slow_manifold_y(x, theta0 + p.omega * T * s, par[kA], p.b, p.omega, p.eps)
                                             : cubic_f(x);
        return u;
    });
    BvpSolveOptions so;
    so.newton.max_iter = 40;
    return solve_bvp(pr, g, {kT, kA}, so).seg;
}

CanardFamily canard_family(const ModelParams& p, double theta0_start, const CanardSegmentOptions& opt,
                           int max_points) {
    const OrbitSegment seg = solve_canard_segment(p, theta0_start, opt);
    CollocationContinuation sys(canard_segment_problem(opt), seg, {kT, kA, kTheta0});
    const double T = seg.p[kT];
    sys.collocation().set_param_weight(kT, 1.0 / (T * T));
    const Vec X0 = sys.collocation().pack(seg);
    const int cth = sys.param_column("theta0"), ca = sys.param_column("a");
    const Vec t0 = tangent_toward(sys, X0, cth, +1);
    ContinuationOptions co;
    co.h0 = 1e-2;
    co.h_max = 0.2;
    co.max_points = max_points;
    co.detect_loop = false;
    co.bounds = {{cth, theta0_start - 1.0, theta0_start + kTwoPi}};
    CanardFamily fam;
    fam.branch = continue_curve(sys, X0, &t0, +1, co);
    fam.folds = detect_folds(sys, fam.branch, ca, 1e-10);
    for (const auto& f : fam.folds) {
        fam.fold_a.push_back(f.params[kA]);
        fam.fold_theta0.push_back(f.params[kTheta0]);
        fam.fold_segments.push_back(sys.collocation().unpack(f.X));
    }
    return fam;
}

OrbitSegment primary_fold_segment(const ModelParams& p, bool upper, const CanardSegmentOptions& opt) {
    const double A = opt.x_start + 1.0;
    const double t_fold = (A * A - 4.0) / (2.0 * p.eps);
    const double phase = upper ? std::numbers::pi : 0.0;
    const double theta_start = std::remainder(phase - p.omega * t_fold - 1.2, kTwoPi);
    const OrbitSegment seg = solve_canard_segment(p, theta_start, opt);
    CollocationContinuation sys(canard_segment_problem(opt), seg, {kT, kA, kTheta0});
    sys.collocation().set_param_weight(kT, 1.0 / (seg.p[kT] * seg.p[kT]));
    const Vec X0 = sys.collocation().pack(seg);
    const int cth = sys.param_column("theta0"), ca = sys.param_column("a");
    const Vec t0 = tangent_toward(sys, X0, cth, +1);
    ContinuationOptions co;
    co.h0 = 1e-2;
    co.h_max = 0.1;
    co.max_points = 200;
    co.detect_loop = false;
    co.bounds = {{cth, theta_start - 0.5, theta_start + std::numbers::pi + 0.3}};
    // Stop two points past the first turn of a.
    double last_a = X0[ca], last_da = 0.0;
    int past = -1;
    co.stop = [&](const Vec& X) {
        const double da = X[ca] - last_a;
        last_a = X[ca];
        if (past < 0 && last_da != 0.0 && da * last_da < 0) past = 0;
        if (da != 0.0) last_da = da;
        return past >= 0 && ++past >= 2;
    };
    const Branch br = continue_curve(sys, X0, &t0, +1, co);
    for (const auto& f : detect_folds(sys, br, ca, 1e-10)) {
        // A maximum is approached with a increasing.
        const double a_before = br.points[f.bracket].params[kA];
        const bool ok = upper ? a_before < f.params[kA] : a_before > f.params[kA];
        if (ok) return sys.collocation().unpack(f.X);
    }
    throw Error(ErrorKind::ContinuationTerminated, "no fold of a found near the predicted phase");
}

namespace {

// Builds the fold system around a refined fold segment.
FoldContinuation make_fold_system(const OrbitSegment& seg, const std::string& extra,
                                  const CanardSegmentOptions& opt) {
    const BvpProblem pr = canard_segment_problem(opt);
    const int ie = pr.param_index(extra);
    FoldContinuation fc(pr, seg, {kT, kA, kTheta0, ie}, "a", "theta0", extra);
    fc.collocation().set_param_weight(kT, 1.0 / (seg.p[kT] * seg.p[kT]));
    if (extra == "eps") fc.collocation().set_param_weight(ie, 1.0 / (seg.p[kEps] * seg.p[kEps]));
    return fc;
}

}  // namespace

FoldCurve continue_fold_curve(const OrbitSegment& fold, const std::string& extra_param, double extra_target,
                              const std::vector<double>& grid, const FoldCurveOptions& opt) {
    if (extra_param != "omega" && extra_param != "eps")
        throw Error(ErrorKind::InvalidInput, "fold curves continue in omega or eps");
    FoldContinuation fc = make_fold_system(fold, extra_param, opt.segment);
    const int cx = fc.extra_column(), ca = fc.collocation().column_of_param(kA);
    Vec X0 = fc.collocation().pack(fold);
    NewtonOptions nopt{1e-9, 20, 1e-14};
    if (!fc.solve_fixed_extra(X0, nopt).converged)
        throw Error(ErrorKind::NewtonDivergence, "fold refinement did not converge");

    const double start = X0[cx];
    const int sign = extra_target >= start ? +1 : -1;
    const Vec t0 = tangent_toward(fc, X0, cx, sign);
    ContinuationOptions co;
    co.h0 = opt.h0;
    co.h_min = opt.h_min;
    co.h_max = opt.h_max;
    co.max_points = opt.max_points;
    co.detect_loop = false;
    co.newton = {1e-9, 8, 1e-14};
    const double lo = std::min(start, extra_target), hi = std::max(start, extra_target);
    const double margin = 0.02 * (hi - lo);
    co.bounds = {{cx, lo - margin, hi + margin}};

    FoldCurve out;
    out.extra_param = extra_param;
    out.branch = continue_curve(fc, X0, &t0, +1, co);
    out.terminated = out.branch.terminated;
    out.stop_reason = out.branch.stop_reason;
    out.reach = start;
    for (const auto& bp : out.branch.points)
        out.reach = sign > 0 ? std::max(out.reach, bp.X[cx]) : std::min(out.reach, bp.X[cx]);

    for (double g : grid) {
        FoldCurveSample smp;
        smp.extra = g;
        const bool inside = sign > 0 ? (g >= start - 1e-14 && g <= out.reach + 1e-14)
                                     : (g <= start + 1e-14 && g >= out.reach - 1e-14);
        if (inside && !out.branch.points.empty()) {
            // Seed from the nearest accepted point.
            std::size_t best = 0;
            for (std::size_t k = 1; k < out.branch.points.size(); ++k)
                if (std::abs(out.branch.points[k].X[cx] - g) < std::abs(out.branch.points[best].X[cx] - g)) best = k;
            Vec X = out.branch.points[best].X;
            X[cx] = g;
            try {
                const NewtonReport r = fc.solve_fixed_extra(X, nopt);
                if (r.converged) {
                    smp.a = X[ca];
                    smp.ok = true;
                }
            } catch (const Error&) {
            }
        }
        out.samples.push_back(smp);
    }
    return out;
}

FoldCurvePair fold_curves_omega(double b, double eps, double omega0, double omega1, const std::vector<double>& grid,
                                const FoldCurveOptions& opt) {
    FoldCurveOptions o = opt;
    if (o.segment.intervals <= 0)
        o.segment.intervals = canard_default_intervals(std::max(omega0, omega1), eps, o.segment);
    ModelParams p{1.0 - eps / 8.0, b, omega0, eps};
    FoldCurvePair out;
    out.lower = continue_fold_curve(primary_fold_segment(p, false, o.segment), "omega", omega1, grid, o);
    out.upper = continue_fold_curve(primary_fold_segment(p, true, o.segment), "omega", omega1, grid, o);
    return out;
}

WidthResult canard_region_width(const std::vector<double>& eps_list, double b, double omega,
                                const FoldCurveOptions& opt) {
    if (eps_list.empty()) throw Error(ErrorKind::InvalidInput, "empty eps list");
    const double eps_hi = *std::max_element(eps_list.begin(), eps_list.end());
    const double eps_lo = *std::min_element(eps_list.begin(), eps_list.end());
    FoldCurveOptions o = opt;
    if (o.segment.intervals <= 0) o.segment.intervals = canard_default_intervals(omega, eps_lo, o.segment);
    ModelParams p{1.0 - eps_hi / 8.0, b, omega, eps_hi};
    const FoldCurve lo = continue_fold_curve(primary_fold_segment(p, false, o.segment), "eps", eps_lo, eps_list, o);
    const FoldCurve up = continue_fold_curve(primary_fold_segment(p, true, o.segment), "eps", eps_lo, eps_list, o);

    WidthResult res;
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        WidthPoint w;
        w.eps = eps_list[k];
        const auto th = fold_curve_theory(b, omega, w.eps);
        w.width_theory = std::abs(th.second - th.first);
        w.a_minus = lo.samples[k].a;
        w.a_plus = up.samples[k].a;
        w.width = w.a_plus - w.a_minus;
        // Points whose width is at the level of the fold tolerance are flagged.
        w.ok = lo.samples[k].ok && up.samples[k].ok && w.width > 1e-8;
        res.points.push_back(w);
    }
    res.slope = fit_log_width_slope(res.points);
    res.slope_theory = -omega * omega / 2.0;
    return res;
}

double fit_log_width_slope(const std::vector<WidthPoint>& pts) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& w : pts) {
        if (!w.ok || w.width <= 0) continue;
        const double x = 1.0 / w.eps, y = std::log(w.width);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) throw Error(ErrorKind::InvalidInput, "fewer than two resolved width points");
    const double den = n * sxx - sx * sx;
    return (n * sxy - sx * sy) / den;
}

}  // namespace canard
