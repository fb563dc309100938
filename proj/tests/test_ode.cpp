#include <cmath>
#include <numbers>

#include "canard/ode.hpp"
#include "doctest.h"

using namespace canard;
using std::numbers::pi;

TEST_CASE("linear decay") {
    Rhs f = [](double, const Vec& s, Vec& d) { d = -s; };
    IntegratorConfig cfg;
    cfg.rtol = 1e-10;
    Trajectory tr = integrate(f, Vec::Ones(1), 0.0, 1.0, cfg);
    CHECK(std::abs(tr.back()[0] - std::exp(-1.0)) < 10 * cfg.rtol);
    for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr.times[i] > tr.times[i - 1]);
}

TEST_CASE("embedded pair order") {
    Rhs f = [](double, const Vec& s, Vec& d) { d = -s; };
    std::vector<double> err;
    for (double h : {0.2, 0.1, 0.05, 0.025, 0.0125}) {
        IntegratorConfig cfg;
        cfg.fixed_step = h;
        cfg.h_init = h;
        err.push_back(std::abs(integrate(f, Vec::Ones(1), 0.0, 1.0, cfg).back()[0] - std::exp(-1.0)));
    }
    for (std::size_t i = 0; i + 1 < err.size(); ++i) {
        const double slope = std::log2(err[i] / err[i + 1]);
        CHECK(slope > 5.0 - 0.2);
    }
}

TEST_CASE("layer flow settles on the attracting branch") {
    Vec s(2);
    s << 2.0, 0.0;
    Trajectory tr = integrate(field::Layer{}, s, 0.0, 50.0);
    CHECK(tr.back()[0] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-8));
}

TEST_CASE("time reversal over one forcing period") {
    ModelParams p{1.2, 0.01, 0.3, 0.05};
    Vec s0(3);
    s0 << 1.2, cubic_f(1.2), 0.0;
    IntegratorConfig cfg;
    cfg.rtol = 1e-10;
    cfg.atol = 1e-12;
    const double T = 2 * pi / p.omega;
    Trajectory fw = integrate(field::Full{p}, s0, 0.0, T, cfg);
    Trajectory bw = integrate(field::Full{p}, fw.back(), T, 0.0, cfg);
    CHECK((bw.back() - s0).norm() < 100 * (cfg.rtol * s0.norm() + cfg.atol));
    // Dense output inside a backward trajectory.
    CHECK((bw.at(0.5 * T) - fw.at(0.5 * T)).norm() < 1e-6);
}

TEST_CASE("section crossings") {
    ModelParams p{1.2, 0.0, 0.5, 0.05};
    Vec s0(3);
    s0 << 1.2, cubic_f(1.2), 0.0;
    IntegratorConfig cfg;
    Trajectory tr = integrate(field::Full{p}, s0, 0.0, 2 * pi / p.omega, cfg);
    auto ev = section_crossings(tr, pi);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].t == doctest::Approx(pi / p.omega).epsilon(1e-12));
    Trajectory tr5 = integrate(field::Full{p}, s0, 0.0, 5 * 2 * pi / p.omega + 0.1, cfg);
    auto ev5 = section_crossings(tr5, 1.0);
    CHECK(ev5.size() == 5);
    for (std::size_t i = 0; i < ev5.size(); ++i) {
        CHECK(std::abs(std::remainder(ev5[i].s[2] - 1.0, 2 * pi)) < 1e-10);
        if (i) CHECK(ev5[i].t > ev5[i - 1].t);
    }
}

TEST_CASE("variational equations") {
    ModelParams p{0.0, 0.0, 1.0, 0.05};
    const field::ForcedPlanar vf{p, 0.0};
    IntegratorConfig cfg;
    cfg.rtol = 1e-11;
    cfg.atol = 1e-13;
    Vec s0(2);
    s0 << 2.0, cubic_f(2.0);
    SUBCASE("zero span gives the identity") {
        auto r = integrate_with_variational(vf, s0, Mat::Identity(2, 2), 0.0, 0.0, cfg);
        CHECK((r.M - Mat::Identity(2, 2)).norm() == 0.0);
    }
    SUBCASE("multiplicativity and Liouville") {
        auto r1 = integrate_with_variational(vf, s0, Mat::Identity(2, 2), 0.0, 7.0, cfg);
        auto r2 = integrate_with_variational(vf, r1.traj.back(), Mat::Identity(2, 2), 7.0, 19.0, cfg);
        auto r12 = integrate_with_variational(vf, s0, Mat::Identity(2, 2), 0.0, 19.0, cfg);
        CHECK((r2.M * r1.M - r12.M).norm() <= 1e-6 * r12.M.norm());
        CHECK(std::abs(r1.M.determinant() / std::exp(r1.trace_integral) - 1.0) < 1e-6);
    }
    SUBCASE("trivial multiplier of the autonomous cycle") {
        // Settle on the relaxation cycle, then take one period from x = 0 upward crossings.
        Trajectory warm = integrate(vf, s0, 0.0, 300.0, cfg);
        Trajectory tr = integrate(vf, warm.back(), 0.0, 120.0, cfg);
        auto ev = section_crossings(tr, 0.0, +1, 0);
        REQUIRE(ev.size() >= 2);
        const double T = ev[1].t - ev[0].t;
        auto r = integrate_with_variational(vf, ev[0].s, Mat::Identity(2, 2), 0.0, T, cfg);
        Eigen::EigenSolver<Mat> es(r.M);
        double best = 1e9;
        for (int i = 0; i < 2; ++i) best = std::min(best, std::abs(es.eigenvalues()[i] - 1.0));
        CHECK(best < 1e-6);
    }
}

TEST_CASE("attractor classification") {
    ClassifyOptions opt;
    SUBCASE("SAO") {
        auto c = classify_attractor(ModelParams{1.01, 0.01, 0.01, 0.01}, opt);
        CHECK(c.kind == AttractorKind::SAO);
    }
    SUBCASE("MMO") {
        auto c = classify_attractor(ModelParams{0.994, 0.01, 0.01, 0.01}, opt);
        CHECK(c.kind == AttractorKind::MMO);
    }
    SUBCASE("LAO") {
        auto c = classify_attractor(ModelParams{0.987, 0.01, 0.01, 0.01}, opt);
        CHECK(c.kind == AttractorKind::LAO);
        CHECK(c.large_excursions > 0);
    }
    SUBCASE("synthetic samples") {
        std::vector<double> x;
        for (int i = 0; i < 1000; ++i) x.push_back(1.0 + 0.1 * std::sin(0.05 * i));
        CHECK(classify_samples(x, 1.0).kind == AttractorKind::SAO);
    }
}
