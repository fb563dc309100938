#include "canard/colloc.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

namespace canard {

namespace {

using LU = Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>;

// Gauss-Legendre abscissae on [0, 1] by Golub-Welsch.
Vec gauss_points(int m) {
    Mat Jm = Mat::Zero(m, m);
    for (int i = 1; i < m; ++i) {
        const double bi = i / std::sqrt(4.0 * i * i - 1.0);
        Jm(i, i - 1) = Jm(i - 1, i) = bi;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(Jm);
    Vec x = es.eigenvalues();
    std::sort(x.data(), x.data() + m);
    return 0.5 * (x.array() + 1.0);
}

// Lagrange basis on tau_k = k/m and its derivative, evaluated at t.
void lagrange(int m, double t, Vec& l, Vec& dl) {
    l.resize(m + 1);
    dl.resize(m + 1);
    for (int k = 0; k <= m; ++k) {
        const double tk = static_cast<double>(k) / m;
        double v = 1.0, dv = 0.0;
        for (int j = 0; j <= m; ++j) {
            if (j == k) continue;
            const double tj = static_cast<double>(j) / m;
            const double den = tk - tj;
            dv = dv * (t - tj) / den + v / den;
            v *= (t - tj) / den;
        }
        l[k] = v;
        dl[k] = dv;
    }
}

int locate(const Vec& mesh, double s) {
    const int N = static_cast<int>(mesh.size()) - 1;
    const double* b = mesh.data();
    int j = static_cast<int>(std::upper_bound(b, b + N + 1, s) - b) - 1;
    return std::clamp(j, 0, N - 1);
}

SpMat assemble(int rows, int cols, const std::vector<Triplet>& t) {
    SpMat A(rows, cols);
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();
    return A;
}

}  // namespace

int BvpProblem::param_index(const std::string& name) const {
    for (int i = 0; i < q(); ++i)
        if (param_names[i] == name) return i;
    throw Error(ErrorKind::InvalidInput, "unknown parameter '" + name + "'");
}

void BvpProblem::validate() const {
    if (n <= 0) throw Error(ErrorKind::InvalidInput, "BVP state dimension must be positive");
    if (!rhs) throw Error(ErrorKind::InvalidInput, "BVP right-hand side is missing");
    if (!bc || nbc <= 0) throw Error(ErrorKind::InvalidInput, "BVP boundary conditions are missing");
}

Vec uniform_mesh(int N) {
    if (N < 1) throw Error(ErrorKind::InvalidInput, "mesh needs at least one interval");
    return Vec::LinSpaced(N + 1, 0.0, 1.0);
}

Vec OrbitSegment::eval(double s) const {
    const int j = locate(mesh, s);
    const double h = mesh[j + 1] - mesh[j];
    Vec l, dl;
    lagrange(m, (s - mesh[j]) / h, l, dl);
    return U.middleCols(j * m, m + 1) * l;
}

Vec OrbitSegment::eval_derivative(double s) const {
    const int j = locate(mesh, s);
    const double h = mesh[j + 1] - mesh[j];
    Vec l, dl;
    lagrange(m, (s - mesh[j]) / h, l, dl);
    return U.middleCols(j * m, m + 1) * dl / h;
}

double OrbitSegment::node_time(int i) const {
    const int j = std::min(i / m, intervals() - 1);
    const int k = i - j * m;
    return mesh[j] + static_cast<double>(k) / m * (mesh[j + 1] - mesh[j]);
}

double OrbitSegment::param(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return p[static_cast<int>(i)];
    throw Error(ErrorKind::InvalidInput, "unknown parameter '" + name + "'");
}

void OrbitSegment::set_param(const std::string& name, double v) {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) {
            p[static_cast<int>(i)] = v;
            return;
        }
    throw Error(ErrorKind::InvalidInput, "unknown parameter '" + name + "'");
}

OrbitSegment make_segment(const BvpProblem& prob, const Vec& mesh, int m, const Vec& p,
                          const std::function<Vec(double)>& guess) {
    if (p.size() != prob.q()) throw Error(ErrorKind::DimensionMismatch, "parameter vector size mismatch");
    if (m < 1) throw Error(ErrorKind::InvalidInput, "collocation degree must be at least 1");
    OrbitSegment seg;
    seg.mesh = mesh;
    seg.m = m;
    seg.p = p;
    seg.names = prob.param_names;
    const int nn = seg.intervals() * m + 1;
    seg.U.resize(prob.n, nn);
    for (int i = 0; i < nn; ++i) {
        Vec u = guess(seg.node_time(i));
        if (u.size() != prob.n) throw Error(ErrorKind::DimensionMismatch, "initial guess has wrong size");
        seg.U.col(i) = u;
    }
    return seg;
}

Collocation::Collocation(BvpProblem prob, const OrbitSegment& seg, std::vector<int> free)
    : prob_(std::move(prob)), mesh_(seg.mesh), N_(seg.intervals()), m_(seg.m), p_(seg.p),
      free_(std::move(free)) {
    prob_.validate();
    if (p_.size() != prob_.q()) throw Error(ErrorKind::DimensionMismatch, "parameter vector size mismatch");
    if (seg.U.rows() != prob_.n || seg.U.cols() != n_nodes())
        throw Error(ErrorKind::DimensionMismatch, "segment layout does not match the problem");
    param_col_.assign(prob_.q(), -1);
    param_w_.assign(prob_.q(), 1.0);
    for (std::size_t i = 0; i < free_.size(); ++i) {
        if (free_[i] < 0 || free_[i] >= prob_.q())
            throw Error(ErrorKind::InvalidInput, "free parameter index out of range");
        param_col_[free_[i]] = n_state() + static_cast<int>(i);
    }
    c_ = gauss_points(m_);
    L_.resize(m_, m_ + 1);
    D_.resize(m_, m_ + 1);
    Vec l, dl;
    for (int i = 0; i < m_; ++i) {
        lagrange(m_, c_[i], l, dl);
        L_.row(i) = l.transpose();
        D_.row(i) = dl.transpose();
    }
}

int Collocation::column_of_param(int param_index) const { return param_col_.at(param_index); }

Vec Collocation::pack(const OrbitSegment& seg) const {
    Vec X(dim());
    X.head(n_state()) = Eigen::Map<const Vec>(seg.U.data(), n_state());
    for (std::size_t i = 0; i < free_.size(); ++i) X[n_state() + i] = seg.p[free_[i]];
    return X;
}

Vec Collocation::full_params(const Vec& X) const {
    Vec p = p_;
    for (std::size_t i = 0; i < free_.size(); ++i) p[free_[i]] = X[n_state() + i];
    return p;
}

OrbitSegment Collocation::unpack(const Vec& X) const {
    OrbitSegment seg;
    seg.mesh = mesh_;
    seg.m = m_;
    seg.U = Eigen::Map<const Mat>(X.data(), prob_.n, n_nodes());
    seg.p = full_params(X);
    seg.names = prob_.param_names;
    return seg;
}

void Collocation::eval_rhs_jac(double s, const Vec& u, const Vec& p, Mat& Ju, Mat& Jp) const {
    const int n = prob_.n, q = prob_.q();
    Ju.setZero(n, n);
    Jp.setZero(n, q);
    if (prob_.rhs_jac) {
        prob_.rhs_jac(s, u, p, Ju, Jp);
        return;
    }
    Vec fp(n), fm(n);
    Vec uu = u;
    for (int k = 0; k < n; ++k) {
        const double h = 1e-7 * (1.0 + std::abs(u[k]));
        uu[k] = u[k] + h;
        prob_.rhs(s, uu, p, fp);
        uu[k] = u[k] - h;
        prob_.rhs(s, uu, p, fm);
        uu[k] = u[k];
        Ju.col(k) = (fp - fm) / (2 * h);
    }
    Vec pp = p;
    for (int k = 0; k < q; ++k) {
        if (param_col_[k] < 0) continue;
        const double h = 1e-7 * (1.0 + std::abs(p[k]));
        pp[k] = p[k] + h;
        prob_.rhs(s, u, pp, fp);
        pp[k] = p[k] - h;
        prob_.rhs(s, u, pp, fm);
        pp[k] = p[k];
        Jp.col(k) = (fp - fm) / (2 * h);
    }
}

void Collocation::eval_bc_jac(const Vec& u0, const Vec& u1, const Vec& p, Mat& J0, Mat& J1, Mat& Jp) const {
    const int n = prob_.n, q = prob_.q(), r = prob_.nbc;
    J0.setZero(r, n);
    J1.setZero(r, n);
    Jp.setZero(r, q);
    if (prob_.bc_jac) {
        prob_.bc_jac(u0, u1, p, J0, J1, Jp);
        return;
    }
    Vec fp(r), fm(r);
    Vec a = u0, b = u1, pp = p;
    for (int k = 0; k < n; ++k) {
        const double h = 1e-7 * (1.0 + std::abs(u0[k]));
        a[k] = u0[k] + h;
        prob_.bc(a, u1, p, fp);
        a[k] = u0[k] - h;
        prob_.bc(a, u1, p, fm);
        a[k] = u0[k];
        J0.col(k) = (fp - fm) / (2 * h);
        const double h1 = 1e-7 * (1.0 + std::abs(u1[k]));
        b[k] = u1[k] + h1;
        prob_.bc(u0, b, p, fp);
        b[k] = u1[k] - h1;
        prob_.bc(u0, b, p, fm);
        b[k] = u1[k];
        J1.col(k) = (fp - fm) / (2 * h1);
    }
    for (int k = 0; k < q; ++k) {
        if (param_col_[k] < 0) continue;
        const double h = 1e-7 * (1.0 + std::abs(p[k]));
        pp[k] = p[k] + h;
        prob_.bc(u0, u1, pp, fp);
        pp[k] = p[k] - h;
        prob_.bc(u0, u1, pp, fm);
        pp[k] = p[k];
        Jp.col(k) = (fp - fm) / (2 * h);
    }
}

void Collocation::residual(const Vec& X, Vec& F) const {
    if (X.size() != dim()) throw Error(ErrorKind::DimensionMismatch, "collocation unknown vector size mismatch");
    const int n = prob_.n;
    F.resize(rows());
    const Vec p = full_params(X);
    Eigen::Map<const Mat> U(X.data(), n, n_nodes());
    Vec u(n), du(n), f(n);
    for (int j = 0; j < N_; ++j) {
        const double h = mesh_[j + 1] - mesh_[j];
        const auto blk = U.middleCols(j * m_, m_ + 1);
        for (int i = 0; i < m_; ++i) {
            u.noalias() = blk * L_.row(i).transpose();
            du.noalias() = blk * D_.row(i).transpose();
            prob_.rhs(mesh_[j] + c_[i] * h, u, p, f);
            F.segment((j * m_ + i) * n, n) = du - h * f;
        }
    }
    Vec r(prob_.nbc);
    prob_.bc(U.col(0), U.col(n_nodes() - 1), p, r);
    F.tail(prob_.nbc) = r;
}

void Collocation::jacobian(const Vec& X, std::vector<Triplet>& trips) const {
    const int n = prob_.n, q = prob_.q();
    const Vec p = full_params(X);
    Eigen::Map<const Mat> U(X.data(), n, n_nodes());
    trips.reserve(trips.size() + static_cast<std::size_t>(N_ * m_) * n * (n * (m_ + 1) + free_.size()) +
                  prob_.nbc * (2 * n + free_.size()));
    Vec u(n);
    Mat Ju, Jp;
    for (int j = 0; j < N_; ++j) {
        const double h = mesh_[j + 1] - mesh_[j];
        const auto blk = U.middleCols(j * m_, m_ + 1);
        for (int i = 0; i < m_; ++i) {
            u.noalias() = blk * L_.row(i).transpose();
            eval_rhs_jac(mesh_[j] + c_[i] * h, u, p, Ju, Jp);
            const int row0 = (j * m_ + i) * n;
            for (int k = 0; k <= m_; ++k) {
                const int col0 = (j * m_ + k) * n;
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) {
                        double v = -h * L_(i, k) * Ju(a, b);
                        if (a == b) v += D_(i, k);
                        if (v != 0.0) trips.emplace_back(row0 + a, col0 + b, v);
                    }
            }
            for (int k = 0; k < q; ++k) {
                const int c = param_col_[k];
                if (c < 0) continue;
                for (int a = 0; a < n; ++a)
                    if (Jp(a, k) != 0.0) trips.emplace_back(row0 + a, c, -h * Jp(a, k));
            }
        }
    }
    Mat J0, J1, Jbp;
    eval_bc_jac(U.col(0), U.col(n_nodes() - 1), p, J0, J1, Jbp);
    const int rb = n * N_ * m_;
    const int last = (n_nodes() - 1) * n;
    for (int a = 0; a < prob_.nbc; ++a) {
        for (int b = 0; b < n; ++b) {
            if (J0(a, b) != 0.0) trips.emplace_back(rb + a, b, J0(a, b));
            if (J1(a, b) != 0.0) trips.emplace_back(rb + a, last + b, J1(a, b));
        }
        for (int k = 0; k < q; ++k) {
            const int c = param_col_[k];
            if (c >= 0 && Jbp(a, k) != 0.0) trips.emplace_back(rb + a, c, Jbp(a, k));
        }
    }
}

Vec Collocation::weights() const {
    Vec w = Vec::Ones(dim());
    w.head(n_state()).setConstant(1.0 / n_nodes());
    for (std::size_t i = 0; i < free_.size(); ++i) w[n_state() + i] = param_w_[free_[i]];
    return w;
}

Vec Collocation::equidistribute(const Vec& X, int N_new) {
    if (N_new < 1) N_new = N_;
    const OrbitSegment old = unpack(X);
    // Per-interval monitor: length plus weighted solution variation.
    Vec len(N_), var(N_);
    for (int j = 0; j < N_; ++j) {
        len[j] = mesh_[j + 1] - mesh_[j];
        double v = 0.0;
        for (int k = 0; k < m_; ++k) v += (old.U.col(j * m_ + k + 1) - old.U.col(j * m_ + k)).norm();
        var[j] = v;
    }
    const double tv = var.sum();
    const double c = tv > 0 ? len.sum() / tv : 0.0;
    Vec cum(N_ + 1);
    cum[0] = 0.0;
    for (int j = 0; j < N_; ++j) cum[j + 1] = cum[j] + len[j] + c * var[j];
    Vec mesh(N_new + 1);
    mesh[0] = 0.0;
    mesh[N_new] = 1.0;
    int j = 0;
    for (int i = 1; i < N_new; ++i) {
        const double target = cum[N_] * i / N_new;
        while (j < N_ - 1 && cum[j + 1] < target) ++j;
        const double frac = (target - cum[j]) / (cum[j + 1] - cum[j]);
        mesh[i] = mesh_[j] + frac * (mesh_[j + 1] - mesh_[j]);
    }
    mesh_ = mesh;
    N_ = N_new;
    for (std::size_t i = 0; i < free_.size(); ++i) param_col_[free_[i]] = n_state() + static_cast<int>(i);
    OrbitSegment seg = make_segment(prob_, mesh_, m_, old.p, [&](double s) { return old.eval(s); });
    return pack(seg);
}

BvpResult solve_bvp(const BvpProblem& prob, const OrbitSegment& guess, const std::vector<int>& free,
                    const BvpSolveOptions& opt) {
    Collocation col(prob, guess, free);
    if (col.rows() != col.dim())
        throw Error(ErrorKind::InvalidInput, "square BVP solve needs #free = nbc - n (got " +
                                                 std::to_string(free.size()) + ")");
    Vec X = col.pack(guess);
    auto F = [&](const Vec& x, Vec& r) { col.residual(x, r); };
    auto J = [&](const Vec& x, std::vector<Triplet>& t) { col.jacobian(x, t); };
    NewtonReport rep = newton_solve(F, J, X, opt.newton);
    for (int pass = 0; rep.converged && pass < opt.remesh_passes; ++pass) {
        X = col.equidistribute(X, opt.remesh_intervals);
        rep = newton_solve(F, J, X, opt.newton);
    }
    if (!rep.converged)
        throw Error(ErrorKind::NewtonDivergence,
                    "BVP Newton did not converge (residual " + std::to_string(rep.residual) + ")");
    return {col.unpack(X), rep};
}

double CollocationContinuation::solution_norm(const Vec& X) const {
    const int n = col_.problem().n;
    const OrbitSegment seg = col_.unpack(X);
    // L2 norm over s by nodal trapezoid.
    double acc = 0.0;
    for (int i = 0; i + 1 < col_.n_nodes(); ++i) {
        const double ds = seg.node_time(i + 1) - seg.node_time(i);
        acc += 0.5 * ds * (seg.U.col(i).squaredNorm() + seg.U.col(i + 1).squaredNorm());
    }
    (void)n;
    return std::sqrt(acc);
}

FoldContinuation::FoldContinuation(const BvpProblem& prob, const OrbitSegment& seg, std::vector<int> free,
                                   const std::string& fold_param, const std::string& family_param,
                                   const std::string& extra_param)
    : col_(prob, seg, std::move(free)) {
    cf_ = col_.column_of_param(prob.param_index(fold_param));
    cfam_ = col_.column_of_param(prob.param_index(family_param));
    cx_ = col_.column_of_param(prob.param_index(extra_param));
    if (cf_ < 0 || cfam_ < 0 || cx_ < 0)
        throw Error(ErrorKind::InvalidInput, "fold, family and extra parameters must all be free");
    if (col_.rows() + 2 != col_.dim())
        throw Error(ErrorKind::InvalidInput, "fold continuation needs #free = nbc - n + 2");
}

double FoldContinuation::test_function(const Vec& X, Vec* grad) const {
    const int R = col_.rows(), D = col_.dim();
    auto reduced = [&](int c) { return c - (c > cfam_ ? 1 : 0) - (c > cx_ ? 1 : 0); };
    std::vector<Triplet> trips, At;
    col_.jacobian(X, trips);
    Vec b = Vec::Zero(R);
    At.reserve(trips.size());
    for (const auto& t : trips) {
        if (t.col() == cfam_) b[t.row()] += t.value();
        else if (t.col() != cx_) At.emplace_back(t.row(), reduced(t.col()), t.value());
    }
    SpMat A = assemble(R, R, At);
    LU lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) throw Error(ErrorKind::SingularMatrix, "fold bordering matrix is singular");
    const Vec w = lu.solve(-b);
    const int rf = reduced(cf_);
    const double g = w[rf];
    if (grad) {
        Vec ef = Vec::Zero(R);
        ef[rf] = 1.0;
        const Vec psi = lu.transpose().solve(ef);
        Vec tau = Vec::Zero(D);
        for (int c = 0; c < D; ++c)
            if (c != cfam_ && c != cx_) tau[c] = w[reduced(c)];
        tau[cfam_] = 1.0;
        const double h = 1e-7 * (1.0 + X.cwiseAbs().maxCoeff()) / std::max(1.0, tau.cwiseAbs().maxCoeff());
        std::vector<Triplet> tp, tm;
        col_.jacobian(X + h * tau, tp);
        col_.jacobian(X - h * tau, tm);
        const SpMat Jp = assemble(R, D, tp), Jm = assemble(R, D, tm);
        *grad = -((Jp - Jm).transpose() * psi) / (2.0 * h);
    }
    return g;
}

void FoldContinuation::residual(const Vec& X, Vec& F) const {
    Vec r;
    col_.residual(X, r);
    F.resize(r.size() + 1);
    F.head(r.size()) = r;
    F[r.size()] = test_function(X, nullptr);
}

void FoldContinuation::jacobian(const Vec& X, std::vector<Triplet>& t) const {
    col_.jacobian(X, t);
    Vec grad;
    test_function(X, &grad);
    const int R = col_.rows();
    for (int c = 0; c < grad.size(); ++c)
        if (grad[c] != 0.0) t.emplace_back(R, c, grad[c]);
}

NewtonReport FoldContinuation::solve_fixed_extra(Vec& X, const NewtonOptions& opt) const {
    const double target = X[cx_];
    const int R = col_.rows();
    auto F = [&](const Vec& x, Vec& r) {
        Vec a;
        residual(x, a);
        r.resize(a.size() + 1);
        r.head(a.size()) = a;
        r[a.size()] = x[cx_] - target;
    };
    auto J = [&](const Vec& x, std::vector<Triplet>& t) {
        jacobian(x, t);
        t.emplace_back(R + 1, cx_, 1.0);
    };
    return newton_solve(F, J, X, opt);
}

}  // namespace canard
