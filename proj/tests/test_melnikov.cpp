#include <cmath>
#include <numbers>
#include <random>

#include "canard/melnikov.hpp"
#include "doctest.h"

using namespace canard;
using std::numbers::pi;

TEST_CASE("points on the separatrix") {
    GammaPoint g = gamma_point(0.0);
    CHECK(g.u2 == 0.0);
    CHECK(g.v2 == -0.5);
    CHECK(g.dHdu == 0.0);
    for (double t : {-2.0, 2.0}) {
        GammaPoint q = gamma_point(t);
        CHECK(q.u2 == doctest::Approx(-t / 2));
        CHECK(q.v2 == doctest::Approx(0.5));
        CHECK(std::abs(hamiltonian(q.u2, q.v2)) < 1e-12);
    }
    GammaPoint q = gamma_point(1.0);
    const double h = 1e-6;
    const double du = (hamiltonian(q.u2 + h, q.v2) - hamiltonian(q.u2 - h, q.v2)) / (2 * h);
    const double dv = (hamiltonian(q.u2, q.v2 + h) - hamiltonian(q.u2, q.v2 - h)) / (2 * h);
    CHECK(du == doctest::Approx(q.dHdu).epsilon(1e-6));
    CHECK(dv == doctest::Approx(q.dHdv).epsilon(1e-6));
}

TEST_CASE("d1 oracle") {
    CHECK(std::abs(melnikov_d1_fsn(0.3, 0.0, -0.125, 1.0, 0.0).value) < 1e-10);
    auto r = melnikov_d1_fsn(0.3, 1.0, 0.0, 1.0, 0.0);
    CHECK(r.converged);
    CHECK(std::abs(r.value - r.closed_form) <= 1e-8 * std::abs(r.closed_form));
    CHECK(std::abs(melnikov_d2_fsn(0.3, 1.0, 1.0, 0.7).value) < 1e-12);
    CHECK_THROWS_AS(melnikov_d1_fsn(0.0, 1.0, 0.0, 1.0, 0.0), Error);
}

TEST_CASE("intermediate quadrature against the closed-form bracket") {
    CHECK(std::abs(melnikov_d_intermediate(-0.125, 0.0, 2.0, 0.0).value) < 1e-10);
    const double Om = 2.0, bt = 1.0, th = pi / 3;
    const double at = -0.125 - bt * std::exp(-Om * Om / 2) * std::cos(th);
    CHECK(std::abs(melnikov_d_intermediate(at, bt, Om, th).value) < 1e-10);
    auto r = melnikov_d_intermediate(0.0, bt, Om, th);
    // The integrand integrates to a fixed multiple of the closed-form bracket, so the zero sets agree.
    CHECK(r.value / r.closed_form == doctest::Approx(kIntermediateQuadratureToClosedForm).epsilon(1e-10));
}

TEST_CASE("tail bound and phase symmetry") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int i = 0; i < 10; ++i) {
        const double r2 = 0.2 + 0.3 * std::abs(U(rng)), beta = U(rng), gamma = U(rng), wb = 2 * std::abs(U(rng));
        const double th = 3 * U(rng);
        const auto a = melnikov_d1_fsn(r2, beta, gamma, wb, th, 30.0);
        const auto b = melnikov_d1_fsn(r2, beta, gamma, wb, th, 60.0);
        CHECK(std::abs(a.value - b.value) <= 1e-12 * std::max(1.0, std::abs(a.value)));
        const auto c = melnikov_d1_fsn(r2, beta, gamma, wb, -th, 30.0);
        CHECK(std::abs(a.value - c.value) <= 1e-12 * std::max(1.0, std::abs(a.value)));
        const auto d = melnikov_d_intermediate(gamma, beta, 3 * wb, th, 30.0);
        const auto e = melnikov_d_intermediate(gamma, beta, 3 * wb, -th, 30.0);
        CHECK(std::abs(d.value - e.value) <= 1e-12 * std::max(1.0, std::abs(d.value)));
    }
}

TEST_CASE("canard locus") {
    const double b = 0.01, w = 0.05, eps = 0.01;
    const auto [lo, hi] = fold_curve_theory(b, w, eps);
    for (Regime rg : {Regime::LowFreq, Regime::Intermediate, Regime::HighFreq}) {
        CHECK(canard_locus(rg, b, w, eps, 0.0).a == doctest::Approx(lo).epsilon(1e-13));
        CHECK(canard_locus(rg, b, w, eps, pi).a == doctest::Approx(hi).epsilon(1e-13));
        CHECK(canard_locus(rg, b, w, eps, pi / 2).a == doctest::Approx(1 - eps / 8).epsilon(1e-15));
        double mx = 0.0;
        for (int k = 0; k <= 360; ++k)
            mx = std::max(mx, std::abs(canard_locus(rg, b, w, eps, 2 * pi * k / 360).a - (1 - eps / 8)));
        CHECK(std::abs(mx - b * std::exp(-w * w / (2 * eps))) < 1e-12);
    }
    for (double th : {0.0, 0.3, 2.0})
        CHECK(std::abs(canard_locus(Regime::LowFreq, b, w, eps, th).a - canard_locus(Regime::HighFreq, b, w, eps, th).a) < 1e-15);
    CHECK_FALSE(canard_locus(Regime::LowFreq, 2.0, w, eps, 0.0).warning.empty());
}
