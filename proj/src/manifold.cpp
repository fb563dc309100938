#include "canard/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "canard/atlas.hpp"

namespace canard {

double section_angle(double a, double b, double eps) {
    if (b <= 0.0) throw Error(ErrorKind::NoFoldedNodeSection, "no forcing, no folded node");
    const double c = (1.0 - a - eps / 8.0) / b;
    if (std::abs(c) > 1.0) throw Error(ErrorKind::NoFoldedNodeSection, "no folded-node section for these (a, b, eps)");
    return std::acos(c);
}

bool manifold_point(const ModelParams& p, bool attracting, double theta_n, double t, const ManifoldOptions& opt,
                    Eigen::Vector2d& out) {
    const double x0 = attracting ? opt.x_attr : opt.x_rep;
    const double th0 = attracting ? theta_n - p.omega * t : theta_n + p.omega * t;
    Vec s(3);
    s << x0, slow_manifold_y(x0, th0, p.a, p.b, p.omega, p.eps), th0;
    IntegratorConfig cfg;
    cfg.rtol = opt.rtol;
    cfg.atol = opt.atol;
    cfg.store = false;
    const double lo = opt.x_lo, hi = opt.x_hi;
    // S_r seeds start left of the window; only a later exit on either side counts.
    bool entered = attracting || (x0 >= lo && x0 <= hi);
    cfg.halt = [&](double, const Vec& st) {
        const bool in = st[0] >= lo && st[0] <= hi;
        if (in) entered = true;
        return entered ? !in : std::abs(st[0]) > 3.0;
    };
    Trajectory tr;
    try {
        tr = integrate(field::Full{p}, s, 0.0, attracting ? t : -t, cfg);
    } catch (const Error&) {
        return false;
    }
    if (tr.halted) return false;
    const Vec& e = tr.back();
    if (e[0] < lo || e[0] > hi) return false;
    out = Eigen::Vector2d(e[0], e[1]);
    return true;
}

ManifoldCurve compute_manifold(const ModelParams& p, bool attracting, double theta_n, const ManifoldOptions& opt) {
    p.validate();
    ManifoldCurve c;
    c.attracting = attracting;
    c.theta_n = theta_n;
    double t = opt.t_start;
    Eigen::Vector2d q;
    // Advance to the first flight time that lands in the window.
    while (t <= opt.t_max && !manifold_point(p, attracting, theta_n, t, opt, q)) t += opt.dt0;
    if (t > opt.t_max) return c;
    c.t.push_back(t);
    c.pts.push_back(q);
    double dt = opt.dt0;
    while (t < opt.t_max && static_cast<int>(c.size()) < opt.max_points) {
        const double tn = std::min(t + dt, opt.t_max);
        const bool ok = manifold_point(p, attracting, theta_n, tn, opt, q);
        if (ok && (q - c.pts.back()).norm() <= opt.resolution) {
            t = tn;
            c.t.push_back(t);
            c.pts.push_back(q);
            if ((q - c.pts[c.size() - 2]).norm() < 0.25 * opt.resolution) dt = std::min(2.0 * dt, opt.dt0);
            continue;
        }
        if (dt <= std::max(opt.dt_min, opt.resolution / opt.max_speed)) break;  // end of the piece
        dt = std::max(0.5 * dt, opt.dt_min);
    }
    return c;
}

std::vector<Intersection> intersect_polylines(const std::vector<Eigen::Vector2d>& A, const std::vector<double>& ta,
                                              const std::vector<Eigen::Vector2d>& B, const std::vector<double>& tb) {
    std::vector<Intersection> out;
    if (A.size() < 2 || B.size() < 2) return out;
    auto cross = [](const Eigen::Vector2d& u, const Eigen::Vector2d& v) { return u.x() * v.y() - u.y() * v.x(); };
    // Bounding boxes of runs of B segments prune the quadratic search.
    const std::size_t run = 32;
    std::vector<Eigen::AlignedBox2d> boxes;
    for (std::size_t j0 = 0; j0 + 1 < B.size(); j0 += run) {
        Eigen::AlignedBox2d bx;
        for (std::size_t j = j0; j <= std::min(j0 + run, B.size() - 1); ++j) bx.extend(B[j]);
        boxes.push_back(bx);
    }
    for (std::size_t i = 0; i + 1 < A.size(); ++i) {
        Eigen::AlignedBox2d sa;
        sa.extend(A[i]);
        sa.extend(A[i + 1]);
        for (std::size_t k = 0; k < boxes.size(); ++k) {
            if (!boxes[k].intersects(sa)) continue;
            const std::size_t j0 = k * run, j1 = std::min(j0 + run, B.size() - 1);
            for (std::size_t j = j0; j < j1; ++j) {
                const Eigen::Vector2d r = A[i + 1] - A[i], s = B[j + 1] - B[j], d = B[j] - A[i];
                const double den = cross(r, s);
                if (den == 0.0) continue;
                const double u = cross(d, s) / den, v = cross(d, r) / den;
                // Half-open on the upper end so shared vertices count once.
                if (u < 0.0 || u >= 1.0 || v < 0.0 || v >= 1.0) continue;
                Intersection x;
                x.point = A[i] + u * r;
                x.t_a = ta[i] + u * (ta[i + 1] - ta[i]);
                x.t_b = tb[j] + v * (tb[j + 1] - tb[j]);
                x.angle = std::asin(std::min(1.0, std::abs(den) / (r.norm() * s.norm())));
                out.push_back(x);
            }
        }
    }
    return out;
}

std::vector<Intersection> intersect_in_section(const ManifoldCurve& Sa, const ManifoldCurve& Sr) {
    return intersect_polylines(Sa.pts, Sa.t, Sr.pts, Sr.t);
}

SectionCanardSystem::SectionCanardSystem(ModelParams p, double theta_n, ManifoldOptions opt, double fd_step)
    : p_(p), theta_n_(theta_n), opt_(opt), h_(fd_step) {
    // Continued canards may pass the window edge; only blow-up ends an orbit here.
    opt_.x_lo = -2.5;
    opt_.x_hi = 2.5;
}

Eigen::Vector2d SectionCanardSystem::point(bool attracting, double t, double omega) const {
    ModelParams q = p_;
    q.omega = omega;
    Eigen::Vector2d out;
    if (!manifold_point(q, attracting, theta_n_, t, opt_, out))
        throw Error(ErrorKind::OutsideValidity, "orbit segment left the section neighbourhood");
    return out;
}

void SectionCanardSystem::residual(const Vec& X, Vec& F) const {
    F = point(true, X[0], X[2]) - point(false, X[1], X[2]);
}

void SectionCanardSystem::jacobian(const Vec& X, std::vector<Triplet>& trips) const {
    trips.clear();
    for (int k = 0; k < 3; ++k) {
        const double h = h_ * std::max(1.0, std::abs(X[k]));
        Vec Xp = X, Xm = X, Fp, Fm;
        Xp[k] += h;
        Xm[k] -= h;
        residual(Xp, Fp);
        residual(Xm, Fm);
        const Vec d = (Fp - Fm) / (2.0 * h);
        trips.emplace_back(0, k, d[0]);
        trips.emplace_back(1, k, d[1]);
    }
}

NewtonReport SectionCanardSystem::refine(Vec& X, const NewtonOptions& opt) const {
    NewtonReport rep;
    for (int it = 0; it < opt.max_iter; ++it) {
        Vec F;
        residual(X, F);
        rep.residual = F.norm();
        rep.iterations = it;
        if (rep.residual < opt.tol) {
            rep.converged = true;
            return rep;
        }
        std::vector<Triplet> tr;
        jacobian(X, tr);
        Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
        for (const auto& t : tr)
            if (t.col() < 2) J(t.row(), t.col()) = t.value();
        const Eigen::Vector2d dx = J.partialPivLu().solve(-F);
        X[0] += dx[0];
        X[1] += dx[1];
        if (dx.norm() < opt.step_tol * (1.0 + X.head(2).norm())) {
            residual(X, F);
            rep.residual = F.norm();
            rep.converged = rep.residual < 100 * opt.tol;
            return rep;
        }
    }
    return rep;
}

void refine_crossings(const ModelParams& p, double theta_n, std::vector<Intersection>& hits,
                      const ManifoldOptions& opt, double tol) {
    const SectionCanardSystem sys(p, theta_n, opt);
    ManifoldOptions wide = opt;
    wide.x_lo = -2.5;
    wide.x_hi = 2.5;
    for (auto& h : hits) {
        Vec X(3);
        X << h.t_a, h.t_b, p.omega;
        try {
            if (!sys.refine(X, {tol, 20, 1e-15}).converged) continue;
            // Reject jumps to a different crossing.
            if (std::abs(X[0] - h.t_a) > 1.0 || std::abs(X[1] - h.t_b) > 1.0) continue;
            Eigen::Vector2d q;
            if (!manifold_point(p, true, theta_n, X[0], wide, q)) continue;
            h.t_a = X[0];
            h.t_b = X[1];
            h.point = q;
            h.refined = true;
        } catch (const Error&) {
        }
    }
}

namespace {

int count_hits(double a, double b, double eps, double omega, double theta_n, const ManifoldOptions& mo,
               SweepFrame* frame) {
    const ModelParams p{a, b, omega, eps};
    SweepFrame f;
    f.omega = omega;
    f.Sa = compute_manifold(p, true, theta_n, mo);
    f.Sr = compute_manifold(p, false, theta_n, mo);
    f.hits = intersect_in_section(f.Sa, f.Sr);
    const int n = static_cast<int>(f.hits.size());
    if (frame) *frame = std::move(f);
    return n;
}

// Continues each intersection of `from` toward omega_to; returns the omega of the
// first turning point found between the two frequencies.
bool fold_between(double a, double b, double eps, double theta_n, const SweepFrame& from, double omega_to,
                  const SweepOptions& opt, double& omega_fold) {
    const ModelParams p{a, b, from.omega, eps};
    SectionCanardSystem sys(p, theta_n, opt.manifold);
    const double lo = std::min(from.omega, omega_to), hi = std::max(from.omega, omega_to);
    const int sign = omega_to > from.omega ? +1 : -1;
    bool found = false;
    double best = 0.0;
    for (const auto& h : from.hits) {
        Vec X(3);
        X << h.t_a, h.t_b, from.omega;
        try {
            if (!sys.refine(X).converged) continue;
            Vec t0 = curve_tangent(sys, X);
            if ((t0[2] < 0) == (sign > 0)) t0 = -t0;
            ContinuationOptions co;
            co.h0 = 0.05;
            co.h_max = opt.fold_h_max;
            co.h_min = 1e-7;
            co.max_points = opt.fold_max_points;
            co.detect_loop = false;
            co.newton = {1e-9, 10, 1e-14};
            co.bounds = {{2, lo - 1e-3, hi + 1e-3}};
            const Branch br = continue_curve(sys, X, &t0, +1, co);
            for (const auto& fp : detect_folds(sys, br, 2, 1e-9)) {
                const double w = fp.X[2];
                if (w < lo || w > hi) continue;
                // Nearest turning point to the starting frame.
                if (!found || std::abs(w - from.omega) < std::abs(best - from.omega)) best = w;
                found = true;
                break;
            }
        } catch (const Error&) {
        }
    }
    omega_fold = best;
    return found;
}

}  // namespace

SweepResult track_count_transitions(double a, double b, double eps, const std::vector<double>& omegas,
                                    const SweepOptions& opt) {
    SweepResult res;
    res.theta_n = section_angle(a, b, eps);
    for (double w : omegas) {
        SweepFrame f;
        count_hits(a, b, eps, w, res.theta_n, opt.manifold, &f);
        res.frames.push_back(std::move(f));
    }
    for (std::size_t k = 0; k + 1 < res.frames.size(); ++k) {
        const SweepFrame &A = res.frames[k], &B = res.frames[k + 1];
        const int na = static_cast<int>(A.hits.size()), nb = static_cast<int>(B.hits.size());
        if (na == nb) continue;
        CountTransition ct;
        ct.omega_lo = A.omega;
        ct.omega_hi = B.omega;
        ct.change = nb - na;
        double lo = A.omega, hi = B.omega;
        while (hi - lo > opt.bisect_tol) {
            const double mid = 0.5 * (lo + hi);
            (count_hits(a, b, eps, mid, res.theta_n, opt.manifold, nullptr) == na ? lo : hi) = mid;
        }
        ct.omega_transition = 0.5 * (lo + hi);
        // Lost intersections turn back ahead of the frame that has them; created ones behind.
        ct.fold_found = ct.change < 0 ? fold_between(a, b, eps, res.theta_n, A, B.omega, opt, ct.omega_fold)
                                      : fold_between(a, b, eps, res.theta_n, B, A.omega, opt, ct.omega_fold);
        res.transitions.push_back(ct);
    }
    return res;
}

std::vector<int> spiral_reversals(const std::vector<Eigen::Vector2d>& pts, const Eigen::Vector2d& center,
                                  double min_sweep) {
    std::vector<int> out;
    if (pts.size() < 3) return out;
    // Unwrapped polar angle about the center.
    // Samples on the center carry the previous angle.
    auto angle = [&](std::size_t k, double prev) {
        const Eigen::Vector2d d = pts[k] - center;
        if (d.norm() < 1e-14) return prev;
        return prev + std::remainder(std::atan2(d.y(), d.x()) - prev, 2.0 * std::numbers::pi);
    };
    std::vector<double> phi(pts.size());
    phi[0] = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k)
        if ((pts[k] - center).norm() >= 1e-14) {
            phi[0] = std::atan2(pts[k].y() - center.y(), pts[k].x() - center.x());
            break;
        }
    for (std::size_t k = 1; k < pts.size(); ++k) phi[k] = angle(k, phi[k - 1]);
    // Extrema of phi whose excursion on both sides reaches min_sweep.
    int dir = 0;
    std::size_t ext = 0;
    for (std::size_t k = 1; k < phi.size(); ++k) {
        if (dir == 0) {
            if (std::abs(phi[k] - phi[0]) >= min_sweep) {
                dir = phi[k] > phi[0] ? +1 : -1;
                ext = k;
            }
            continue;
        }
        if (dir * (phi[k] - phi[ext]) > 0) {
            ext = k;
        } else if (dir * (phi[ext] - phi[k]) >= min_sweep) {
            out.push_back(static_cast<int>(ext));
            dir = -dir;
            ext = k;
        }
    }
    return out;
}

std::vector<int> spiral_reversals(const std::vector<Eigen::Vector2d>& pts, double min_sweep) {
    if (pts.size() < 3) return {};
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& q : pts) centroid += q;
    centroid /= static_cast<double>(pts.size());
    const Eigen::Vector2d& c = (pts.front() - centroid).norm() < (pts.back() - centroid).norm() ? pts.front() : pts.back();
    return spiral_reversals(pts, c, min_sweep);
}

}  // namespace canard
