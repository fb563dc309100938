#include "canard/continuation.hpp"

#include <Eigen/SparseLU>
#include <cmath>

namespace canard {

double ContinuationSystem::solution_norm(const Vec& X) const {
    const Vec w = weights();
    return std::sqrt((w.array() * X.array().square()).sum());
}

namespace {

using LU = Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>;

SpMat assemble(int rows, int cols, const std::vector<Triplet>& t) {
    SpMat A(rows, cols);
    A.setFromTriplets(t.begin(), t.end());
    return A;
}

bool factor(LU& lu, SpMat& A) {
    A.makeCompressed();
    lu.analyzePattern(A);
    lu.factorize(A);
    return lu.info() == Eigen::Success;
}

double wdot(const Vec& w, const Vec& a, const Vec& b) { return (w.array() * a.array() * b.array()).sum(); }

// Newton on [F(X); <t, X - Xc>_w - h] = 0.
NewtonReport correct(const ContinuationSystem& sys, Vec& X, const Vec& Xc, const Vec& t, double h,
                     const NewtonOptions& opt) {
    const int n = sys.dim();
    const Vec w = sys.weights();
    const Vec row = w.cwiseProduct(t);
    Vec F(n - 1), R(n);
    std::vector<Triplet> trips;
    NewtonReport rep;
    LU lu;
    for (int it = 0; it <= opt.max_iter; ++it) {
        sys.residual(X, F);
        R.head(n - 1) = F;
        R[n - 1] = row.dot(X - Xc) - h;
        rep.residual = R.cwiseAbs().maxCoeff();
        rep.iterations = it;
        if (!std::isfinite(rep.residual)) return rep;
        if (rep.residual < opt.tol) {
            rep.converged = true;
            return rep;
        }
        if (it == opt.max_iter) break;
        trips.clear();
        sys.jacobian(X, trips);
        for (int j = 0; j < n; ++j)
            if (row[j] != 0.0) trips.emplace_back(n - 1, j, row[j]);
        SpMat A = assemble(n, n, trips);
        if (!factor(lu, A)) return rep;
        const Vec dx = lu.solve(R);
        if (!dx.allFinite()) return rep;
        X -= dx;
        if (dx.cwiseAbs().maxCoeff() < opt.step_tol * (1.0 + X.cwiseAbs().maxCoeff())) {
            sys.residual(X, F);
            R.head(n - 1) = F;
            R[n - 1] = row.dot(X - Xc) - h;
            rep.residual = R.cwiseAbs().maxCoeff();
            rep.converged = rep.residual < 1e3 * opt.tol;
            rep.iterations = it + 1;
            return rep;
        }
    }
    return rep;
}

}  // namespace

NewtonReport newton_solve(const std::function<void(const Vec&, Vec&)>& F,
                          const std::function<void(const Vec&, std::vector<Triplet>&)>& J, Vec& X,
                          const NewtonOptions& opt) {
    const int n = static_cast<int>(X.size());
    Vec R(n);
    std::vector<Triplet> trips;
    NewtonReport rep;
    LU lu;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it <= opt.max_iter; ++it) {
        F(X, R);
        rep.residual = R.cwiseAbs().maxCoeff();
        rep.iterations = it;
        if (!std::isfinite(rep.residual)) throw Error(ErrorKind::NewtonDivergence, "non-finite residual");
        if (rep.residual < opt.tol) {
            rep.converged = true;
            return rep;
        }
        if (it == opt.max_iter) break;
        trips.clear();
        J(X, trips);
        SpMat A = assemble(n, n, trips);
        if (!factor(lu, A))
            throw Error(ErrorKind::SingularMatrix, "Newton matrix is singular (" + lu.lastErrorMessage() + ")");
        Vec dx = lu.solve(R);
        if (!dx.allFinite()) throw Error(ErrorKind::SingularMatrix, "Newton step is not finite");
        // Backtrack if the full step blows the residual up.
        double lam = 1.0;
        Vec Xt = X - dx;
        for (int k = 0; k < 6; ++k) {
            F(Xt, R);
            const double r = R.cwiseAbs().maxCoeff();
            if (std::isfinite(r) && (r < 2.0 * rep.residual || r < opt.tol)) break;
            lam *= 0.5;
            Xt = X - lam * dx;
        }
        X = Xt;
        if (lam * dx.cwiseAbs().maxCoeff() < opt.step_tol * (1.0 + X.cwiseAbs().maxCoeff())) {
            F(X, R);
            rep.residual = R.cwiseAbs().maxCoeff();
            rep.iterations = it + 1;
            rep.converged = rep.residual < 1e3 * opt.tol;
            return rep;
        }
        prev = rep.residual;
    }
    (void)prev;
    return rep;
}

Vec curve_tangent(const ContinuationSystem& sys, const Vec& X, const Vec* previous) {
    const int n = sys.dim();
    const Vec w = sys.weights();
    std::vector<Triplet> trips;
    sys.jacobian(X, trips);
    Vec ref;
    if (previous && previous->size() == n) {
        ref = *previous;
    } else {
        // Any row not orthogonal to the null vector works; try a few unit directions.
        ref = Vec::Zero(n);
        ref[n - 1] = 1.0;
    }
    auto solve_with = [&](const Vec& r, Vec& t) {
        std::vector<Triplet> tt = trips;
        const Vec row = w.cwiseProduct(r);
        for (int j = 0; j < n; ++j)
            if (row[j] != 0.0) tt.emplace_back(n - 1, j, row[j]);
        SpMat A = assemble(n, n, tt);
        LU lu;
        if (!factor(lu, A)) return false;
        Vec rhs = Vec::Zero(n);
        rhs[n - 1] = 1.0;
        t = lu.solve(rhs);
        return t.allFinite();
    };
    Vec t;
    bool ok = solve_with(ref, t);
    for (int k = 2; !ok && k <= std::min(n, 8); ++k) {
        ref = Vec::Zero(n);
        ref[n - k] = 1.0;
        ok = solve_with(ref, t);
    }
    if (!ok) throw Error(ErrorKind::SingularMatrix, "cannot compute curve tangent");
    t /= std::sqrt(wdot(w, t, t));
    if (previous && previous->size() == n && wdot(w, t, *previous) < 0.0) t = -t;
    return t;
}

Branch continue_curve(ContinuationSystem& sys, const Vec& X0, const Vec* tangent0, int direction,
                      const ContinuationOptions& opt) {
    Branch br;
    br.param_names = sys.param_names();
    Vec X = X0;
    {
        // Make sure the start point is on the curve.
        Vec t0 = curve_tangent(sys, X, tangent0);
        Vec Xc = X;
        NewtonReport r = correct(sys, X, Xc, t0, 0.0, opt.newton);
        if (!r.converged) {
            br.terminated = true;
            br.stop_reason = "start point did not converge";
            return br;
        }
    }
    Vec t = curve_tangent(sys, X, tangent0);
    if (direction < 0) t = -t;
    auto record = [&](const Vec& x, const Vec& tan, double h) {
        BranchPoint p;
        p.X = x;
        p.tangent = tan;
        p.params = sys.param_values(x);
        p.norm = sys.solution_norm(x);
        p.step = h;
        br.points.push_back(std::move(p));
    };
    record(X, t, 0.0);
    const Vec Xstart = X;
    double h = opt.h0;
    int successes = 0;
    double max_dist = 0.0;
    br.stop_reason = "point budget";
    while (static_cast<int>(br.points.size()) < opt.max_points) {
        Vec Xn = X + h * t;
        NewtonReport r = correct(sys, Xn, X, t, h, opt.newton);
        if (!r.converged) {
            h *= 0.5;
            successes = 0;
            if (h < opt.h_min) {
                br.terminated = true;
                br.stop_reason = "step size below h_min";
                break;
            }
            continue;
        }
        Vec tn;
        try {
            tn = curve_tangent(sys, Xn, &t);
        } catch (const Error&) {
            h *= 0.5;
            if (h < opt.h_min) {
                br.terminated = true;
                br.stop_reason = "singular tangent";
                break;
            }
            continue;
        }
        // Reject steps that flip the direction sharply (branch jumping).
        const Vec w = sys.weights();
        if (wdot(w, tn, t) < 0.5 && h > opt.h_min * 4) {
            h *= 0.5;
            successes = 0;
            continue;
        }
        X = Xn;
        t = tn;
        record(X, t, h);
        bool out = false;
        for (const auto& b : opt.bounds)
            if (X[b.index] < b.lo || X[b.index] > b.hi) out = true;
        if (out) {
            br.stop_reason = "parameter bound";
            break;
        }
        if (opt.stop && opt.stop(X)) {
            br.stop_reason = "user stop rule";
            break;
        }
        if (opt.detect_loop && X.size() == Xstart.size()) {
            const Vec d = Xstart - X;
            const double dist = std::sqrt(wdot(w, d, d));
            max_dist = std::max(max_dist, dist);
            if (br.points.size() > 4 && max_dist > 4.0 * h && dist < 1.5 * h && wdot(w, d, t) > 0.0) {
                // Land exactly on the start point's arclength hyperplane.
                const double hl = wdot(w, t, d);
                Vec Xl = X + hl * t;
                NewtonReport rl = correct(sys, Xl, X, t, hl, opt.newton);
                if (rl.converged) {
                    record(Xl, curve_tangent(sys, Xl, &t), hl);
                    br.stop_reason = "closed loop";
                    break;
                }
            }
        }
        if (++successes >= opt.grow_after) {
            h = std::min(h * opt.grow, opt.h_max);
            successes = 0;
        }
        if (opt.adapt_every > 0 && br.points.size() % opt.adapt_every == 0) {
            if (sys.adapt(X, t)) max_dist = std::numeric_limits<double>::infinity();
        }
    }
    return br;
}

std::vector<FoldPoint> detect_folds(const ContinuationSystem& sys, const Branch& branch, int index,
                                    double tol) {
    std::vector<FoldPoint> out;
    const auto& P = branch.points;
    if (P.size() < 3) return out;
    const Vec w = sys.weights();
    for (std::size_t i = 0; i + 1 < P.size(); ++i) {
        if (P[i].X.size() != sys.dim() || P[i + 1].X.size() != sys.dim()) continue;
        const double c0 = P[i].tangent[index], c1 = P[i + 1].tangent[index];
        if (c0 == 0.0 || c0 * c1 >= 0.0) continue;
        const Vec& Xa = P[i].X;
        const Vec& ta = P[i].tangent;
        // Arclength coordinate of the next point measured along ta.
        double s_a = 0.0, f_a = c0;
        double s_b = wdot(w, ta, P[i + 1].X - Xa), f_b = c1;
        Vec Xs = P[i + 1].X, ts = P[i + 1].tangent;
        FoldPoint fp;
        fp.bracket = static_cast<int>(i);
        bool ok = false;
        for (int it = 0; it < 60; ++it) {
            double s = s_b - f_b * (s_b - s_a) / (f_b - f_a);
            if (!(s > std::min(s_a, s_b) && s < std::max(s_a, s_b))) s = 0.5 * (s_a + s_b);
            Vec Xn = Xa + s * ta;
            NewtonReport r = correct(sys, Xn, Xa, ta, s, NewtonOptions{1e-11, 20, 1e-14});
            if (!r.converged) break;
            const Vec tn = curve_tangent(sys, Xn, &ta);
            const double fn = tn[index];
            Xs = Xn;
            ts = tn;
            const double ds = std::abs(s - s_b);
            // Illinois-style update keeps the bracket.
            if ((fn < 0) == (f_b < 0)) {
                f_a *= 0.5;
            } else {
                s_a = s_b;
                f_a = f_b;
            }
            s_b = s;
            f_b = fn;
            if (ds < tol || std::abs(fn) < 1e-14) {
                ok = true;
                break;
            }
        }
        if (!ok) continue;
        fp.X = Xs;
        fp.tangent = ts;
        fp.params = sys.param_values(Xs);
        fp.tangent_component = ts[index];
        out.push_back(std::move(fp));
    }
    return out;
}

}  // namespace canard
