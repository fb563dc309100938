#include <cmath>

#include "canard/colloc.hpp"
#include "canard/ode.hpp"
#include "doctest.h"

using namespace canard;

namespace {

BvpProblem linear_problem() {
    BvpProblem pr;
    pr.n = 1;
    pr.param_names = {"lambda"};
    pr.rhs = [](double, const Vec& u, const Vec& p, Vec& f) { f.resize(1); f[0] = p[0] * u[0]; };
    pr.rhs_jac = [](double, const Vec& u, const Vec& p, Mat& Ju, Mat& Jp) {
        Ju(0, 0) = p[0];
        Jp(0, 0) = u[0];
    };
    pr.nbc = 1;
    pr.bc = [](const Vec& u0, const Vec&, const Vec&, Vec& r) {
        r.resize(1);
        r[0] = u0[0] - 1.0;
    };
    return pr;
}

double linear_error(int N, int m) {
    const double lam = -2.0;
    BvpProblem pr = linear_problem();
    Vec p(1);
    p[0] = lam;
    OrbitSegment g = make_segment(pr, uniform_mesh(N), m, p, [](double) { return Vec::Ones(1); });
    BvpResult r = solve_bvp(pr, g, {});
    // Error at mesh points, where Gauss collocation superconverges.
    double err = 0.0;
    for (int i = 0; i < r.seg.U.cols(); i += m)
        err = std::max(err, std::abs(r.seg.U(0, i) - std::exp(lam * r.seg.node_time(i))));
    return err;
}

// x^2 + y^2 = 1 as a one-parameter curve.
struct Circle : ContinuationSystem {
    int dim() const override { return 2; }
    void residual(const Vec& X, Vec& F) const override {
        F.resize(1);
        F[0] = X[0] * X[0] + X[1] * X[1] - 1.0;
    }
    void jacobian(const Vec& X, std::vector<Triplet>& t) const override {
        t.emplace_back(0, 0, 2 * X[0]);
        t.emplace_back(0, 1, 2 * X[1]);
    }
    Vec param_values(const Vec& X) const override { return X; }
};

// x^2 = p with X = (x, p).
struct Quadratic : ContinuationSystem {
    int dim() const override { return 2; }
    void residual(const Vec& X, Vec& F) const override {
        F.resize(1);
        F[0] = X[0] * X[0] - X[1];
    }
    void jacobian(const Vec& X, std::vector<Triplet>& t) const override {
        t.emplace_back(0, 0, 2 * X[0]);
        t.emplace_back(0, 1, -1.0);
    }
    Vec param_values(const Vec& X) const override { return X.tail(1); }
};

// x = p, monotone.
struct Line : ContinuationSystem {
    int dim() const override { return 2; }
    void residual(const Vec& X, Vec& F) const override {
        F.resize(1);
        F[0] = X[0] - X[1];
    }
    void jacobian(const Vec&, std::vector<Triplet>& t) const override {
        t.emplace_back(0, 0, 1.0);
        t.emplace_back(0, 1, -1.0);
    }
};

BvpProblem planar_vdp(double eps) {
    BvpProblem pr;
    pr.n = 2;
    pr.param_names = {"T", "a"};
    pr.rhs = [eps](double, const Vec& u, const Vec& p, Vec& f) {
        f.resize(2);
        f[0] = p[0] * (u[1] - cubic_f(u[0]));
        f[1] = p[0] * eps * (-u[0] + p[1]);
    };
    pr.rhs_jac = [eps](double, const Vec& u, const Vec& p, Mat& Ju, Mat& Jp) {
        Ju << -p[0] * cubic_df(u[0]), p[0], -p[0] * eps, 0.0;
        Jp(0, 0) = u[1] - cubic_f(u[0]);
        Jp(1, 0) = eps * (-u[0] + p[1]);
        Jp(1, 1) = p[0] * eps;
    };
    pr.nbc = 3;
    pr.bc = [](const Vec& u0, const Vec& u1, const Vec& p, Vec& r) {
        r.resize(3);
        r.head(2) = u1 - u0;
        r[2] = u0[0] - p[1];
    };
    return pr;
}

// Period and a sample point of the attracting cycle by shooting.
std::pair<double, Trajectory> vdp_cycle(double a, double eps, double t_settle) {
    ModelParams mp{a, 0.0, 1.0, eps};
    Rhs f = [eps, a](double, const Vec& s, Vec& ds) {
        ds.resize(2);
        ds[0] = s[1] - cubic_f(s[0]);
        ds[1] = eps * (-s[0] + a);
    };
    Vec s0(2);
    s0 << a + 0.5, cubic_f(a);
    IntegratorConfig cfg;
    cfg.rtol = 1e-11;
    cfg.atol = 1e-13;
    cfg.store = false;
    Trajectory warm = integrate(f, s0, 0.0, t_settle, cfg);
    cfg.store = true;
    Trajectory tr = integrate(f, warm.back(), 0.0, 4.0 / std::sqrt(eps) * 10 + 200.0, cfg);
    // Upward crossings of x = a, taken as x - a crossing 0.
    Trajectory shifted = tr;
    for (auto& s : shifted.states) s[0] -= a;
    auto ev = section_crossings(shifted, 0.0, +1, 0);
    REQUIRE(ev.size() >= 3);
    const double T = ev[2].t - ev[1].t;
    return {T, integrate(f, tr.at(ev[1].t), 0.0, T, cfg)};
}

}  // namespace

TEST_CASE("constant solution with anchored T") {
    BvpProblem pr;
    pr.n = 1;
    pr.param_names = {"T"};
    pr.rhs = [](double, const Vec&, const Vec& p, Vec& f) { f.setZero(1); (void)p; };
    pr.nbc = 2;
    const double c = 0.7;
    pr.bc = [c](const Vec& u0, const Vec&, const Vec& p, Vec& r) {
        r.resize(2);
        r[0] = u0[0] - c;
        r[1] = p[0] - 1.0;
    };
    Vec p(1);
    p[0] = 3.0;
    OrbitSegment g = make_segment(pr, uniform_mesh(10), 4, p, [](double s) { return Vec::Constant(1, s); });
    BvpResult r = solve_bvp(pr, g, {0});
    CHECK((r.seg.U.array() - c).abs().maxCoeff() < 1e-12);
    CHECK(r.seg.param("T") == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("linear problem recovers the exponential") {
    CHECK(linear_error(20, 4) < 1e-10);
}

TEST_CASE("Gauss collocation superconvergence at mesh nodes") {
    // m = 2 keeps errors far above rounding over three refinements.
    const int m = 2;
    const double e1 = linear_error(4, m), e2 = linear_error(8, m), e3 = linear_error(16, m);
    const double s1 = std::log2(e1 / e2), s2 = std::log2(e2 / e3);
    CHECK(std::abs(s1 - 2 * m) < 0.5);
    CHECK(std::abs(s2 - 2 * m) < 0.5);
}

TEST_CASE("residual contract on a doubled mesh") {
    const double lam = -2.0;
    BvpProblem pr = linear_problem();
    Vec p(1);
    p[0] = lam;
    OrbitSegment g = make_segment(pr, uniform_mesh(20), 4, p, [](double) { return Vec::Ones(1); });
    BvpResult r = solve_bvp(pr, g, {});
    // Interpolation defect between the solution and its re-evaluation on a doubled mesh.
    double defect = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const double s = i / 400.0;
        defect = std::max(defect, std::abs(r.seg.eval(s)[0] - std::exp(lam * s)));
    }
    CHECK(defect < 100 * 1e-10);
}

TEST_CASE("planar van der Pol period matches shooting") {
    const double eps = 0.05, a = 0.0;
    auto [T, cyc] = vdp_cycle(a, eps, 400.0);
    BvpProblem pr = planar_vdp(eps);
    Vec p(2);
    p << T * 1.01, a;
    OrbitSegment g = make_segment(pr, uniform_mesh(80), 4, p, [&](double s) { return cyc.at(s * T); });
    BvpSolveOptions opt;
    opt.remesh_passes = 2;
    opt.remesh_intervals = 120;
    BvpResult r = solve_bvp(pr, g, {0}, opt);
    CHECK(std::abs(r.seg.param("T") - T) < 1e-6);
}

TEST_CASE("circle continuation closes the loop") {
    Circle c;
    Vec X0(2);
    X0 << 1.0, 0.0;
    ContinuationOptions opt;
    opt.h0 = 1e-2;
    opt.max_points = 5000;
    Branch br = continue_curve(c, X0, nullptr, +1, opt);
    CHECK(br.stop_reason == "closed loop");
    CHECK((br.points.back().X - X0).norm() < 1e-8);
    CHECK_FALSE(br.terminated);
}

TEST_CASE("quadratic fold is detected and refined") {
    Quadratic q;
    Vec X0(2);
    X0 << -0.5, 0.25;
    ContinuationOptions opt;
    opt.h0 = 1e-2;
    opt.max_points = 200;
    opt.bounds = {{0, -1.0, 1.0}};
    Vec t0(2);
    t0 << 1.0, -1.0;
    Branch br = continue_curve(q, X0, &t0, +1, opt);
    auto folds = detect_folds(q, br, 1);
    REQUIRE(folds.size() == 1);
    CHECK(std::abs(folds[0].X[1]) < 1e-10);
    // Same fold from the reversed branch.
    Branch rev = br;
    std::reverse(rev.points.begin(), rev.points.end());
    for (auto& pt : rev.points) pt.tangent = -pt.tangent;
    auto folds2 = detect_folds(q, rev, 1);
    REQUIRE(folds2.size() == 1);
    CHECK(std::abs(folds2[0].X[1] - folds[0].X[1]) < 1e-9);
}

TEST_CASE("monotone branch has no folds") {
    Line l;
    Vec X0 = Vec::Zero(2);
    ContinuationOptions opt;
    opt.max_points = 50;
    Branch br = continue_curve(l, X0, nullptr, +1, opt);
    CHECK(detect_folds(l, br, 1).empty());
}

TEST_CASE("arclength steps match the prescribed step") {
    Circle c;
    Vec X0(2);
    X0 << 1.0, 0.0;
    ContinuationOptions opt;
    opt.h0 = 1e-2;
    opt.max_points = 60;
    opt.detect_loop = false;
    Branch br = continue_curve(c, X0, nullptr, +1, opt);
    for (std::size_t i = 1; i < br.points.size(); ++i) {
        const double d = (br.points[i].X - br.points[i - 1].X).norm();
        CHECK(std::abs(d - br.points[i].step) <= 0.2 * br.points[i].step);
    }
}

TEST_CASE("planar van der Pol canard explosion near 1 - eps/8") {
    const double eps = 0.01, a0 = 0.9995;
    auto [T, cyc] = vdp_cycle(a0, eps, 40000.0);
    BvpProblem pr = planar_vdp(eps);
    Vec p(2);
    p << T, a0;
    OrbitSegment g = make_segment(pr, uniform_mesh(100), 4, p, [&](double s) { return cyc.at(s * T); });
    g = solve_bvp(pr, g, {0}).seg;
    CollocationContinuation sys(pr, g, {0, 1});
    sys.collocation().set_param_weight(0, 1.0 / (T * T));
    ContinuationOptions opt;
    opt.h0 = 1e-3;
    opt.h_max = 0.2;
    opt.max_points = 600;
    opt.adapt_every = 5;
    // Stop once the cycle reaches relaxation size.
    opt.stop = [&](const Vec& X) {
        const OrbitSegment s = sys.collocation().unpack(X);
        return s.U.row(0).maxCoeff() - s.U.row(0).minCoeff() > 3.5;
    };
    const Vec X0 = sys.collocation().pack(g);
    const Vec t = curve_tangent(sys, X0);
    // Head toward smaller a, i.e. larger cycles.
    const int dir = t[sys.param_column("a")] < 0 ? +1 : -1;
    Branch br = continue_curve(sys, X0, nullptr, dir, opt);
    REQUIRE(br.points.size() > 10);
    double a_mid = std::nan("");
    for (const auto& pt : br.points) {
        const OrbitSegment s = sys.collocation().unpack(pt.X);
        if (s.U.row(0).maxCoeff() - s.U.row(0).minCoeff() > 1.5) {
            a_mid = s.param("a");
            break;
        }
    }
    REQUIRE(std::isfinite(a_mid));
    CHECK(std::abs(a_mid - (1.0 - eps / 8.0)) < 2e-4);
}
