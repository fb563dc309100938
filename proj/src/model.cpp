#include "canard/model.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace canard {

const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::DegenerateInput: return "DegenerateInput";
        case ErrorKind::OutsideValidity: return "OutsideValidity";
        case ErrorKind::Resonance: return "Resonance";
        case ErrorKind::NoBracket: return "NoBracket";
        case ErrorKind::NotANode: return "NotANode";
        case ErrorKind::StepBudget: return "StepBudget";
        case ErrorKind::StepUnderflow: return "StepUnderflow";
        case ErrorKind::NewtonDivergence: return "NewtonDivergence";
        case ErrorKind::SingularMatrix: return "SingularMatrix";
        case ErrorKind::QuadratureFailure: return "QuadratureFailure";
        case ErrorKind::Unclassified: return "Unclassified";
        case ErrorKind::NoFoldedNodeSection: return "NoFoldedNodeSection";
        case ErrorKind::ContinuationTerminated: return "ContinuationTerminated";
    }
    return "Unknown";
}

double ModelParams::Omega() const { return omega / std::sqrt(eps); }
double ModelParams::beta() const { return b / std::sqrt(eps); }

void ModelParams::validate() const {
    if (!(std::isfinite(a) && std::isfinite(b) && std::isfinite(omega) && std::isfinite(eps)))
        throw Error(ErrorKind::InvalidInput, "non-finite model parameter");
    if (!(eps > 0.0)) throw Error(ErrorKind::InvalidInput, "eps must be positive");
    if (!(omega > 0.0)) throw Error(ErrorKind::InvalidInput, "omega must be positive");
    if (b < 0.0) throw Error(ErrorKind::InvalidInput, "b must be non-negative");
}

namespace {

template <class... Ts>
struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_state(const VectorField& vf, const Vec& s) {
    if (s.size() != state_dim(vf))
        throw Error(ErrorKind::DimensionMismatch,
                    field_name(vf) + " expects dimension " + std::to_string(state_dim(vf)) +
                        ", got " + std::to_string(s.size()));
    if (!s.allFinite()) throw Error(ErrorKind::InvalidInput, "non-finite state");
}

}  // namespace

int state_dim(const VectorField& vf) {
    return std::visit(overloaded{
                          [](const field::Full&) { return 3; },
                          [](const field::ChartK1Fsn&) { return 4; },
                          [](const field::ChartK1Torus&) { return 4; },
                          [](const auto&) { return 2; },
                      },
                      vf);
}

std::string field_name(const VectorField& vf) {
    return std::visit(overloaded{
                          [](const field::Full&) { return "Full"; },
                          [](const field::Layer&) { return "Layer"; },
                          [](const field::ReducedProjection&) { return "ReducedProjection"; },
                          [](const field::Desingularized&) { return "Desingularized"; },
                          [](const field::ChartK1Fsn&) { return "ChartK1_FSN"; },
                          [](const field::ChartK2Fsn&) { return "ChartK2_FSN"; },
                          [](const field::ChartK1Torus&) { return "ChartK1_Torus"; },
                          [](const field::ChartK2Torus&) { return "ChartK2_Torus"; },
                          [](const field::UnperturbedHamiltonian&) { return "UnperturbedHamiltonian"; },
                          [](const field::HopfRescaled&) { return "HopfRescaled"; },
                          [](const field::ForcedPlanar&) { return "ForcedPlanar"; },
                      },
                      vf);
}

bool has_analytic_jacobian(const VectorField& vf) {
    return !std::holds_alternative<field::ChartK1Fsn>(vf) &&
           !std::holds_alternative<field::ChartK1Torus>(vf);
}

Vec eval_field(const VectorField& vf, const Vec& s, double t) {
    check_state(vf, s);
    Vec d(s.size());
    std::visit(
        overloaded{
            [&](const field::Full& f) {
                const auto& p = f.p;
                d << s[1] - cubic_f(s[0]), p.eps * (-s[0] + p.a + p.b * std::cos(s[2])), p.omega;
            },
            [&](const field::Layer&) { d << s[1] - cubic_f(s[0]), 0.0; },
            [&](const field::ReducedProjection& f) {
                const auto& p = f.p;
                const double g = cubic_df(s[0]);
                if (std::abs(g) < 1e-14)
                    throw Error(ErrorKind::OutsideValidity, "reduced flow is singular on the fold");
                d << (-s[0] + p.a + p.b * std::cos(s[1])) / g, p.omega_bar();
            },
            [&](const field::Desingularized& f) {
                const auto& p = f.p;
                d << -s[0] + p.a + p.b * std::cos(s[1]), p.omega_bar() * cubic_df(s[0]);
            },
            [&](const field::ChartK1Fsn& c) {
                const double u1 = s[0], r1 = s[1], th1 = s[2], e1 = s[3];
                if (e1 < 0.0) throw Error(ErrorKind::OutsideValidity, "eps1 must be non-negative");
                const double F = -u1 + r1 * r1 * e1 * c.gamma + c.beta * std::sqrt(e1) * (std::cos(r1 * th1) - 1.0);
                d << 1.0 - u1 * u1 - r1 * r1 * u1 * u1 * u1 / 3.0 - 0.5 * e1 * u1 * F,
                    0.25 * r1 * e1 * F, r1 * e1 * c.omega_bar - 0.25 * e1 * th1 * F, -e1 * e1 * F;
            },
            [&](const field::ChartK2Fsn& c) {
                const double u = s[0], v = s[1], r2 = c.r2;
                const double ph = r2 * r2 * c.omega_bar * t, q = r2 * c.theta20;
                d << v - u * u - r2 * r2 * u * u * u / 3.0,
                    -u + r2 * r2 * c.gamma + c.beta * (std::cos(ph) * std::cos(q) - 1.0) -
                        c.beta * std::sin(ph) * std::sin(q);
            },
            [&](const field::ChartK1Torus& c) {
                const double u1 = s[0], r1 = s[1], th = s[2], e1 = s[3];
                if (e1 < 0.0) throw Error(ErrorKind::OutsideValidity, "eps1 must be non-negative");
                const double F = -u1 + e1 * r1 * (c.alpha_t + c.beta_t * std::cos(th));
                d << 1.0 - u1 * u1 - r1 * u1 * u1 * u1 / 3.0 - 0.5 * u1 * e1 * F, 0.5 * r1 * e1 * F,
                    std::sqrt(e1) * c.Omega, -e1 * e1 * F;
            },
            [&](const field::ChartK2Torus& c) {
                const double u = s[0], v = s[1];
                d << v - u * u - c.r2 * u * u * u / 3.0,
                    -u + c.r2 * (c.alpha_t + c.beta_t * std::cos(c.Omega * t + c.theta0));
            },
            [&](const field::UnperturbedHamiltonian&) { d << s[1] - s[0] * s[0], -s[0]; },
            [&](const field::HopfRescaled& c) {
                const double k = c.delta / c.omega;
                d << k * (-s[1] + s[0] * s[0]) - c.delta * k / 3.0 * s[0] * s[0] * s[0],
                    k * (s[0] + c.alpha_bar + c.b_bar * std::cos(c.t0 + t));
            },
            [&](const field::ForcedPlanar& f) {
                const auto& p = f.p;
                d << s[1] - cubic_f(s[0]),
                    p.eps * (-s[0] + p.a + p.b * std::cos(f.theta0 + p.omega * t));
            },
        },
        vf);
    return d;
}

Mat field_jacobian(const VectorField& vf, const Vec& s, double t) {
    check_state(vf, s);
    const int n = state_dim(vf);
    Mat J = Mat::Zero(n, n);
    bool done = true;
    std::visit(overloaded{
                   [&](const field::Full& f) {
                       J << -cubic_df(s[0]), 1.0, 0.0, -f.p.eps, 0.0, -f.p.eps * f.p.b * std::sin(s[2]), 0.0,
                           0.0, 0.0;
                   },
                   [&](const field::Layer&) { J << -cubic_df(s[0]), 1.0, 0.0, 0.0; },
                   [&](const field::ReducedProjection& f) {
                       const auto& p = f.p;
                       const double g = cubic_df(s[0]);
                       const double num = -s[0] + p.a + p.b * std::cos(s[1]);
                       J << (-g - num * 2.0 * s[0]) / (g * g), -p.b * std::sin(s[1]) / g, 0.0, 0.0;
                   },
                   [&](const field::Desingularized& f) {
                       J = desingularized_jacobian(f.p, s[0], s[1]);
                   },
                   [&](const field::ChartK2Fsn& c) {
                       J << -2.0 * s[0] - c.r2 * c.r2 * s[0] * s[0], 1.0, -1.0, 0.0;
                   },
                   [&](const field::ChartK2Torus& c) {
                       J << -2.0 * s[0] - c.r2 * s[0] * s[0], 1.0, -1.0, 0.0;
                   },
                   [&](const field::UnperturbedHamiltonian&) { J << -2.0 * s[0], 1.0, -1.0, 0.0; },
                   [&](const field::HopfRescaled& c) {
                       const double k = c.delta / c.omega;
                       J << k * 2.0 * s[0] - c.delta * k * s[0] * s[0], -k, k, 0.0;
                   },
                   [&](const field::ForcedPlanar& f) { J << -cubic_df(s[0]), 1.0, -f.p.eps, 0.0; },
                   [&](const auto&) { done = false; },
               },
               vf);
    if (done) return J;
    for (int j = 0; j < n; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(s[j]));
        Vec sp = s, sm = s;
        sp[j] += h;
        sm[j] -= h;
        J.col(j) = (eval_field(vf, sp, t) - eval_field(vf, sm, t)) / (2.0 * h);
    }
    return J;
}

double hamiltonian(double u2, double v2) {
    const double e = -2.0 * v2;
    if (e > 700.0) throw Error(ErrorKind::OutsideValidity, "exp(-2v) overflows");
    return std::exp(e) * (u2 * u2 - v2 - 0.5);
}

const char* to_string(SingularityKind k) {
    switch (k) {
        case SingularityKind::FoldedNode: return "FoldedNode";
        case SingularityKind::FoldedSaddle: return "FoldedSaddle";
        case SingularityKind::FoldedFocus: return "FoldedFocus";
        case SingularityKind::FSN_I: return "FSN_I";
        case SingularityKind::Degenerate: return "Degenerate";
    }
    return "Unknown";
}

Eigen::Matrix2d desingularized_jacobian(const ModelParams& p, double x, double theta) {
    Eigen::Matrix2d J;
    J << -1.0, -p.b * std::sin(theta), 2.0 * p.omega_bar() * x, 0.0;
    return J;
}

namespace {

FoldedSingularity classify(const ModelParams& p, double theta, bool fsn) {
    FoldedSingularity fs;
    fs.theta_star = theta;
    fs.fold_branch = +1;
    const Eigen::Matrix2d J = desingularized_jacobian(p, 1.0, theta);
    const double tr = J.trace(), det = J.determinant();
    const double disc = tr * tr - 4.0 * det;
    const std::complex<double> sq = std::sqrt(std::complex<double>(disc, 0.0));
    fs.lambda1 = 0.5 * (tr - sq);
    fs.lambda2 = 0.5 * (tr + sq);
    if (fsn) {
        fs.kind = SingularityKind::FSN_I;
        fs.mu = 0.0;
        return fs;
    }
    const double scale = tr * tr + std::abs(4.0 * det);
    if (std::abs(disc) <= 1e-12 * scale) {
        fs.kind = SingularityKind::Degenerate;
        fs.mu = 1.0;
    } else if (disc < 0.0) {
        fs.kind = SingularityKind::FoldedFocus;
    } else {
        const double l1 = fs.lambda1.real(), l2 = fs.lambda2.real();
        const bool first_weak = std::abs(l1) <= std::abs(l2);
        const double lw = first_weak ? l1 : l2, ls = first_weak ? l2 : l1;
        fs.mu = lw / ls;
        fs.kind = det > 0.0 ? SingularityKind::FoldedNode : SingularityKind::FoldedSaddle;
    }
    return fs;
}

}  // namespace

std::vector<FoldedSingularity> folded_singularities(const ModelParams& p) {
    p.validate();
    if (p.b == 0.0) throw Error(ErrorKind::DegenerateInput, "b = 0 has no folded singularities");
    const double c = (1.0 - p.a) / p.b;
    std::vector<FoldedSingularity> out;
    if (std::abs(std::abs(1.0 - p.a) - p.b) <= kTolFsn * p.b) {
        out.push_back(classify(p, c > 0.0 ? 0.0 : std::numbers::pi, true));
        return out;
    }
    if (std::abs(c) > 1.0) return out;
    const double th = std::acos(c);
    out.push_back(classify(p, th, false));
    out.push_back(classify(p, 2.0 * std::numbers::pi - th, false));
    return out;
}

double eigenvalue_ratio(const FoldedSingularity& fs) {
    if (fs.kind != SingularityKind::FoldedNode && fs.kind != SingularityKind::Degenerate)
        throw Error(ErrorKind::NotANode, std::string("eigenvalue ratio needs a folded node, got ") +
                                             to_string(fs.kind));
    return fs.mu;
}

int s_max(double mu) {
    if (!(mu > 0.0 && mu <= 1.0)) throw Error(ErrorKind::InvalidInput, "mu must lie in (0, 1]");
    // Guard against (mu + 1)/(2 mu) landing just below an integer.
    return static_cast<int>(std::floor((mu + 1.0) / (2.0 * mu) * (1.0 + 1e-12)));
}

bool folded_node_condition(const ModelParams& p) {
    const double d2 = (1.0 - p.a) * (1.0 - p.a), b2 = p.b * p.b, wb = p.omega_bar();
    return d2 < b2 && b2 < d2 + 1.0 / (64.0 * wb * wb);
}

std::pair<double, double> fold_curve_theory(double b, double omega, double eps) {
    if (!(eps > 0.0)) throw Error(ErrorKind::InvalidInput, "eps must be positive");
    const double c = 1.0 - eps / 8.0;
    const double w = b * std::exp(-omega * omega / (2.0 * eps));
    return {c - w, c + w};
}

double fold_curve_theory_phase(double b, double omega, double eps, double theta0) {
    if (!(eps > 0.0)) throw Error(ErrorKind::InvalidInput, "eps must be positive");
    return 1.0 - eps / 8.0 - b * std::cos(theta0) * std::exp(-omega * omega / (2.0 * eps));
}

std::pair<double, double> degenerate_node_locus(double b, double eps, double omega_bar) {
    const double disc = b * b - 1.0 / (64.0 * omega_bar * omega_bar);
    if (disc < 0.0)
        throw Error(ErrorKind::OutsideValidity, "b^2 < 1/(64 omega_bar^2): no degenerate node");
    const double w = std::sqrt(disc) * std::exp(-0.5 * eps * omega_bar * omega_bar);
    const double c = 1.0 - eps / 8.0;
    return {c - w, c + w};
}

double torus_bif_relation(double a, double b, double omega, double eps) {
    const double a21 = a * a - 1.0, r = eps - omega * omega;
    const double D = a21 * a21 * omega * omega + r * r;
    return 1.0 - a * a - 0.5 * b * b * eps * eps / D;
}

double torus_bif_locus(double b, double omega, double eps, double a_lo, double a_hi) {
    if (!(eps > 0.0 && omega > 0.0)) throw Error(ErrorKind::InvalidInput, "eps, omega must be positive");
    if (std::abs(omega - std::sqrt(eps)) <= 1e-9 * std::sqrt(eps))
        throw Error(ErrorKind::Resonance, "omega = sqrt(eps) resonates with the Hopf frequency at a = 1");
    if (b == 0.0) return 1.0;
    auto g = [&](double a) { return torus_bif_relation(a, b, omega, eps); };
    double flo = g(a_lo), fhi = g(a_hi);
    if (fhi == 0.0) return a_hi;
    if (flo * fhi > 0.0) throw Error(ErrorKind::NoBracket, "relation has no sign change in the bracket");
    std::uintmax_t it = 200;
    auto r = boost::math::tools::toms748_solve(g, a_lo, a_hi, flo, fhi,
                                               boost::math::tools::eps_tolerance<double>(52), it);
    return 0.5 * (r.first + r.second);
}

std::vector<ResonancePoint> resonance_curve(int k, double b, const std::vector<double>& omega_bar_grid,
                                            int side) {
    if (k < 0 || !(b > 0.0)) throw Error(ErrorKind::InvalidInput, "need k >= 0 and b > 0");
    if (side != -1 && side != 1) throw Error(ErrorKind::InvalidInput, "side must be -1 or +1");
    const double target = 1.0 / (2.0 * k + 1.0);
    std::vector<ResonancePoint> out;
    for (double wb : omega_bar_grid) {
        ModelParams p{1.0, b, wb * 0.01, 0.01};
        // d = |1 - a|. mu rises from 0 at d = b to 1 on the degenerate boundary.
        auto mu_of = [&](double d) {
            p.a = 1.0 + side * d;
            const auto fs = folded_singularities(p);
            for (const auto& s : fs)
                if (s.kind == SingularityKind::FoldedNode || s.kind == SingularityKind::Degenerate)
                    return s.mu;
            return 1.0;
        };
        const double d_hi = b * (1.0 - 1e-12);
        std::function<double(double)> g;
        double d_lo = 0.0;
        if (k == 0) {
            // mu = 1 is where the node's eigenvalues coincide: discriminant of the Jacobian.
            g = [&](double d) {
                const Eigen::Matrix2d J = desingularized_jacobian(p, 1.0, std::acos(-side * d / b));
                return J.trace() * J.trace() - 4.0 * J.determinant();
            };
        } else {
            const double bound = b * b - 1.0 / (64.0 * wb * wb);
            d_lo = bound > 0.0 ? std::sqrt(bound) * (1.0 + 1e-12) : 0.0;
            g = [&](double d) { return mu_of(d) - target; };
        }
        if (d_lo >= d_hi) continue;
        const double glo = g(d_lo), ghi = g(d_hi);
        if (glo * ghi > 0.0) continue;
        std::uintmax_t it = 200;
        auto r = boost::math::tools::toms748_solve(g, d_lo, d_hi, glo, ghi,
                                                   boost::math::tools::eps_tolerance<double>(50), it);
        out.push_back({wb, 1.0 + side * 0.5 * (r.first + r.second)});
    }
    return out;
}

HarmonicResponse first_order_response(double a, double omega, double eps) {
    const double a21 = a * a - 1.0, r = eps - omega * omega;
    const double D = a21 * a21 * omega * omega + r * r;
    if (D == 0.0) throw Error(ErrorKind::Resonance, "first-order response denominator vanishes");
    HarmonicResponse h;
    h.xc = eps * r / D;
    h.xs = a21 * eps * omega / D;
    h.yc = a21 * eps * eps / D;
    h.ys = eps * omega * (a21 * a21 - eps + omega * omega) / D;
    return h;
}

}  // namespace canard
