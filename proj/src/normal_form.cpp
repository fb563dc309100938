#include "canard/normal_form.hpp"

#include <cmath>
#include <numbers>

#include "canard/errors.hpp"
#include "json.hpp"

namespace canard {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Rhs phi_rhs(const RectifiedFastSystem& sys, double z, const Eigen::VectorXd& lam) {
    const int N = static_cast<int>(lam.size()) - 1;
    return [&sys, z, lam, N](double th, const Vec& s, Vec& ds) {
        ds.resize(s.size());
        const double p0 = s[0], p1 = s[1];
        const double e1 = std::exp(p1);
        const double Fr = sys.fr(p0, th, z);
        ds[0] = sys.f(p0, th, z) + lam[0] * e1;
        if (N == 1) {
            ds[1] = Fr + lam[1];
        } else {
            const double p2 = s[2];
            ds[1] = Fr - 2.0 * lam[0] * p2 / e1 + lam[1];
            ds[2] = Fr * p2 + 0.5 * sys.frr(p0, th, z) * e1 * e1 - 2.0 * lam[1] * p2 + lam[2] * e1;
        }
    };
}

Eigen::VectorXd gaps_from_end(const Vec& s) {
    Eigen::VectorXd g(s.size());
    g[0] = s[0];
    g[1] = s[1];
    if (s.size() == 3) g[2] = s[2] * std::exp(-s[1]);
    return g;
}

}  // namespace

double RectifiedFastSystem::fr(double r, double th, double z) const {
    if (Fr) return Fr(r, th, z);
    const double h = 1e-6;
    return (F(r + h, th, z) - F(r - h, th, z)) / (2 * h);
}

double RectifiedFastSystem::frr(double r, double th, double z) const {
    if (Frr) return Frr(r, th, z);
    if (Fr) {
        const double h = 1e-6;
        return (Fr(r + h, th, z) - Fr(r - h, th, z)) / (2 * h);
    }
    const double h = 1e-4;
    return (F(r + h, th, z) - 2 * F(r, th, z) + F(r - h, th, z)) / (h * h);
}

double RectifiedFastSystem::cycle_defect(int samples) const {
    double m = 0.0;
    for (int k = 0; k < samples; ++k) m = std::max(m, std::abs(F(0.0, kTwoPi * k / samples, 0.0)));
    return m;
}

double RectifiedFastSystem::multiplier_defect(int samples) const {
    double s = 0.0;
    for (int k = 0; k < samples; ++k) s += fr(0.0, kTwoPi * k / samples, 0.0);
    return s / samples;
}

RectifiedFastSystem test_fast_system(double c) {
    RectifiedFastSystem s;
    s.name = "test";
    s.F = [c](double r, double th, double z) { return z - r * r + c * r * std::cos(th); };
    s.Fr = [c](double r, double th, double) { return -2.0 * r + c * std::cos(th); };
    s.Frr = [](double, double, double) { return -2.0; };
    return s;
}

RectifiedFastSystem fold_cycle_system(double k) {
    RectifiedFastSystem s;
    s.name = "fold-cycle";
    s.F = [k](double r, double th, double z) {
        const double q = 2 * r + r * r;
        return (1 + r) * (z - q * q * (1 + k * std::cos(th)));
    };
    return s;
}

Eigen::VectorXd periodicity_gaps(const RectifiedFastSystem& sys, double z, const Eigen::VectorXd& lambdas,
                                 const IntegratorConfig& cfg) {
    if (lambdas.size() != 2 && lambdas.size() != 3)
        throw Error(ErrorKind::DimensionMismatch, "order must be 1 or 2");
    const Vec s0 = Vec::Zero(lambdas.size());
    const auto traj = integrate(phi_rhs(sys, z, lambdas), s0, 0.0, kTwoPi, cfg);
    return gaps_from_end(traj.back());
}

NormalFormSolution solve_lambda(const RectifiedFastSystem& sys, double z, int N, const NormalFormOptions& opt,
                                const Eigen::VectorXd* initial) {
    if (N != 1 && N != 2) throw Error(ErrorKind::InvalidInput, "order must be 1 or 2");
    if (!sys.F) throw Error(ErrorKind::InvalidInput, "F is not set");
    if (sys.cycle_defect() > 1e-10) throw Error(ErrorKind::InvalidInput, "F(0, theta, 0) must vanish");
    if (initial && initial->size() != N + 1) throw Error(ErrorKind::DimensionMismatch, "initial lambdas");
    Eigen::VectorXd lam = initial ? *initial : Eigen::VectorXd::Zero(N + 1);
    NormalFormSolution sol;
    sol.N = N;
    sol.z = z;
    Eigen::MatrixXd DH(N + 1, N + 1);
    auto jac = [&](const Eigen::VectorXd& at, const Eigen::VectorXd& g) {
        for (int j = 0; j <= N; ++j) {
            Eigen::VectorXd l = at;
            l[j] += opt.fd_step;
            DH.col(j) = (periodicity_gaps(sys, z, l, opt.ode) - g) / opt.fd_step;
        }
    };
    Eigen::VectorXd g = periodicity_gaps(sys, z, lam, opt.ode);
    bool done = false;
    for (int it = 0; it < opt.max_iter; ++it) {
        sol.iterations = it;
        if (!g.allFinite()) break;
        if (g.cwiseAbs().maxCoeff() < opt.tol) {
            done = true;
            break;
        }
        jac(lam, g);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(DH);
        if (!lu.isInvertible()) throw Error(ErrorKind::SingularMatrix, "periodicity Jacobian is singular");
        const Eigen::VectorXd step = lu.solve(g);
        lam -= step;
        g = periodicity_gaps(sys, z, lam, opt.ode);
        if (step.cwiseAbs().maxCoeff() < 1e-15 && g.cwiseAbs().maxCoeff() < opt.nf_tol) {
            done = true;
            break;
        }
    }
    if (!done) {
        if (!g.allFinite() || g.cwiseAbs().maxCoeff() >= opt.nf_tol)
            throw Error(ErrorKind::NewtonDivergence, "periodicity gaps did not converge");
    }
    // The reported DH uses central differences; the forward differences above carry
    // an O(fd_step) bias that is large here because H_0 is strongly curved in lambda_0.
    auto central = [&](double h) {
        Eigen::MatrixXd D(N + 1, N + 1);
        for (int j = 0; j <= N; ++j) {
            Eigen::VectorXd lp = lam, lm = lam;
            lp[j] += h;
            lm[j] -= h;
            D.col(j) = (periodicity_gaps(sys, z, lp, opt.ode) - periodicity_gaps(sys, z, lm, opt.ode)) / (2 * h);
        }
        return D;
    };
    DH = central(1e-6);
    sol.DH = DH;
    sol.jacobian_det = DH.determinant();
    sol.periodicity_residual = g.cwiseAbs().maxCoeff();
    sol.lambdas.assign(lam.data(), lam.data() + lam.size());

    // Samples landing on each grid point.
    const int M = std::max(8, opt.samples);
    const Rhs rhs = phi_rhs(sys, z, lam);
    Vec s = Vec::Zero(N + 1);
    sol.phis.assign(N + 1, std::vector<double>(M + 1));
    sol.theta.resize(M + 1);
    for (int k = 0; k <= M; ++k) {
        const double th = kTwoPi * k / M;
        if (k > 0) s = integrate(rhs, s, kTwoPi * (k - 1) / M, th, opt.ode).back();
        sol.theta[k] = th;
        for (int j = 0; j <= N; ++j) sol.phis[j][k] = s[j];
    }
    return sol;
}

double lambda2_quadrature(const RectifiedFastSystem& sys, const NormalFormSolution& sol) {
    const std::size_t M = sol.theta.size() - 1;
    double acc = 0.0;
    // Periodic trapezoid rule: the last sample repeats the first.
    for (std::size_t k = 0; k < M; ++k)
        acc += 0.5 * sys.frr(0.0, sol.theta[k], 0.0) * std::exp(sol.phis[1][k]);
    return -acc / M;
}

NondegeneracyReport check_nondegeneracy(const RectifiedFastSystem& sys, double dz, const NormalFormOptions& opt) {
    if (!(dz > 0)) throw Error(ErrorKind::InvalidInput, "dz must be positive");
    NondegeneracyReport r;
    r.dz = dz;
    r.cycle_defect = sys.cycle_defect();
    r.multiplier_defect = sys.multiplier_defect();
    auto g0 = [&](double z) { return solve_lambda(sys, z, 1, opt).g(0); };
    const double d1 = (g0(dz) - g0(-dz)) / (2 * dz);
    const double d2 = (g0(dz / 2) - g0(-dz / 2)) / dz;
    r.dg0_dz = d1;
    r.dg0_dz_richardson = (4 * d2 - d1) / 3;
    r.g2 = solve_lambda(sys, 0.0, 2, opt).g(2);
    r.transversal = std::abs(r.dg0_dz) > r.threshold;
    r.quadratic = std::abs(r.g2) > r.threshold;
    return r;
}

NormalFormTable reduce_to_normal_form(const RectifiedFastSystem& sys, const std::vector<double>& z_grid,
                                      const NormalFormOptions& opt) {
    NormalFormTable t;
    t.nondegeneracy = check_nondegeneracy(sys, 1e-4, opt);
    if (!t.nondegeneracy.pass()) throw Error(ErrorKind::DegenerateInput, "non-degeneracy conditions fail");
    const double g2_0 = t.nondegeneracy.g2;
    for (double z : z_grid) {
        const auto s = solve_lambda(sys, z, 2, opt);
        NormalFormRow row;
        row.z = z;
        row.g0 = s.g(0);
        row.g1 = s.g(1);
        row.g2 = s.g(2);
        row.jacobian_det = s.jacobian_det;
        row.residual = s.periodicity_residual;
        row.z_tilde = 0.25 * row.g1 * row.g1 - row.g0 * row.g2;
        row.linear_error = std::abs(row.g1);
        row.quadratic_drift = std::abs(row.g2 / g2_0 - 1.0);
        t.rows.push_back(row);
    }
    return t;
}

std::string to_json(const NormalFormTable& t, const NormalFormSolution& n1) {
    using nlohmann::json;
    const auto& nd = t.nondegeneracy;
    json j;
    j["convention"] = "rho' = g0 + g1 rho + g2 rho^2, g_j = -lambda_j";
    j["order1"] = {{"z", n1.z},
                   {"lambdas", n1.lambdas},
                   {"jacobian_det", n1.jacobian_det},
                   {"periodicity_residual", n1.periodicity_residual}};
    j["nondegeneracy"] = {{"dz", nd.dz},
                          {"dg0_dz", nd.dg0_dz},
                          {"dg0_dz_richardson", nd.dg0_dz_richardson},
                          {"g2", nd.g2},
                          {"threshold", nd.threshold},
                          {"transversal", nd.transversal},
                          {"quadratic", nd.quadratic},
                          {"pass", nd.pass()},
                          {"cycle_defect", nd.cycle_defect},
                          {"multiplier_defect", nd.multiplier_defect}};
    json rows = json::array();
    for (const auto& r : t.rows)
        rows.push_back({{"z", r.z},
                        {"lambda0", -r.g0},
                        {"lambda1", -r.g1},
                        {"lambda2", -r.g2},
                        {"g0", r.g0},
                        {"g1", r.g1},
                        {"g2", r.g2},
                        {"z_tilde", r.z_tilde},
                        {"linear_error", r.linear_error},
                        {"quadratic_drift", r.quadratic_drift},
                        {"jacobian_det", r.jacobian_det},
                        {"periodicity_residual", r.residual}});
    j["rows"] = rows;
    return j.dump(2);
}

}  // namespace canard
