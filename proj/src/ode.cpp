#include "canard/ode.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace canard {

void IntegratorConfig::validate() const {
    if (!(rtol > 0.0 && atol > 0.0)) throw Error(ErrorKind::InvalidInput, "rtol and atol must be positive");
    if (!(h_init > 0.0 && h_max >= h_init)) throw Error(ErrorKind::InvalidInput, "need h_max >= h_init > 0");
    if (max_steps <= 0) throw Error(ErrorKind::InvalidInput, "max_steps must be positive");
}

Vec Trajectory::at(double t) const {
    if (times.empty()) throw Error(ErrorKind::InvalidInput, "empty trajectory");
    const bool fwd = times.back() >= times.front();
    auto lo_t = fwd ? times.front() : times.back(), hi_t = fwd ? times.back() : times.front();
    if (t < lo_t - 1e-12 * (1 + std::abs(lo_t)) || t > hi_t + 1e-12 * (1 + std::abs(hi_t)))
        throw Error(ErrorKind::InvalidInput, "dense output outside the trajectory span");
    if (times.size() == 1) return states.front();
    std::size_t k;
    if (fwd) {
        k = std::upper_bound(times.begin(), times.end(), t) - times.begin();
    } else {
        k = std::upper_bound(times.begin(), times.end(), t, [](double a, double b) { return a > b; }) -
            times.begin();
    }
    k = std::clamp<std::size_t>(k, 1, times.size() - 1);
    const double ta = times[k - 1], tb = times[k], h = tb - ta;
    const double s = (t - ta) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    return h00 * states[k - 1] + h10 * h * derivs[k - 1] + h01 * states[k] + h11 * h * derivs[k];
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

Trajectory integrate(const Rhs& f, const Vec& s0, double t0, double t1, const IntegratorConfig& cfg) {
    cfg.validate();
    if (!s0.allFinite()) throw Error(ErrorKind::InvalidInput, "non-finite initial state");
    Trajectory tr;
    const int n = static_cast<int>(s0.size());
    Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y(n), ynew(n), err(n);
    f(t0, s0, k1);
    tr.times.push_back(t0);
    tr.states.push_back(s0);
    tr.derivs.push_back(k1);
    if (t1 == t0) return tr;

    const double dir = t1 > t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    const bool fixed = cfg.fixed_step > 0.0;
    double h = fixed ? cfg.fixed_step : std::min({cfg.h_init, cfg.h_max, span});
    double t = t0, err_prev = 1e-4;
    y = s0;
    long steps = 0;
    bool last_rejected = false;

    while (dir * (t1 - t) > 0.0) {
        if (++steps > cfg.max_steps) throw Error(ErrorKind::StepBudget, "integrator step budget exhausted");
        double hs = std::min(h, std::abs(t1 - t));
        if (std::abs(t1 - t - dir * hs) <= 1e-13 * std::max(1.0, std::abs(t1))) hs = std::abs(t1 - t);
        if (hs < 1e-14 * std::max(1.0, std::abs(t)))
            throw Error(ErrorKind::StepUnderflow, "step size underflow at t = " + std::to_string(t));
        const double hh = dir * hs;
        f(t + c2 * hh, y + hh * (a21 * k1), k2);
        f(t + c3 * hh, y + hh * (a31 * k1 + a32 * k2), k3);
        f(t + c4 * hh, y + hh * (a41 * k1 + a42 * k2 + a43 * k3), k4);
        f(t + c5 * hh, y + hh * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5);
        f(t + hh, y + hh * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6);
        ynew = y + hh * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const double tnew = (hs == std::abs(t1 - t)) ? t1 : t + hh;
        f(tnew, ynew, k7);
        if (!ynew.allFinite() || !k7.allFinite()) {
            if (fixed) throw Error(ErrorKind::StepUnderflow, "non-finite state with fixed step");
            h = 0.25 * hs;
            ++tr.rejected;
            last_rejected = true;
            continue;
        }
        double en = 0.0;
        if (!fixed) {
            err = hh * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            for (int i = 0; i < n; ++i) {
                const double sc = cfg.atol + cfg.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
                en += (err[i] / sc) * (err[i] / sc);
            }
            en = std::sqrt(en / n);
        }
        if (fixed || en <= 1.0) {
            t = tnew;
            y = ynew;
            k1 = k7;
            const bool halt = cfg.halt && cfg.halt(t, y);
            if (cfg.store || halt || dir * (t1 - t) <= 0.0) {
                tr.times.push_back(t);
                tr.states.push_back(y);
                tr.derivs.push_back(k1);
            }
            if (halt) {
                tr.halted = true;
                break;
            }
            if (!fixed) {
                // PI control.
                const double e = std::max(en, 1e-10);
                double fac = 0.9 * std::pow(e, -0.17) * std::pow(err_prev, 0.04);
                fac = std::clamp(fac, 0.2, 10.0);
                if (last_rejected) fac = std::min(fac, 1.0);
                h = std::min(hs * fac, cfg.h_max);
                err_prev = e;
            }
            last_rejected = false;
        } else {
            ++tr.rejected;
            h = hs * std::max(0.2, 0.9 * std::pow(en, -0.2));
            last_rejected = true;
        }
    }
    if (!cfg.store && tr.times.size() > 2) {
        tr.times.erase(tr.times.begin() + 1, tr.times.end() - 1);
        tr.states.erase(tr.states.begin() + 1, tr.states.end() - 1);
        tr.derivs.erase(tr.derivs.begin() + 1, tr.derivs.end() - 1);
    }
    return tr;
}

Trajectory integrate(const VectorField& vf, const Vec& s0, double t0, double t1, const IntegratorConfig& cfg) {
    if (s0.size() != state_dim(vf))
        throw Error(ErrorKind::DimensionMismatch, field_name(vf) + " state dimension mismatch");
    return integrate([&](double t, const Vec& s, Vec& d) { d = eval_field(vf, s, t); }, s0, t0, t1, cfg);
}

VariationalResult integrate_with_variational(const VectorField& vf, const Vec& s0, const Mat& M0, double t0,
                                             double t1, const IntegratorConfig& cfg) {
    const int n = state_dim(vf);
    if (s0.size() != n || M0.rows() != n)
        throw Error(ErrorKind::DimensionMismatch, "variational initial data dimension mismatch");
    if (!has_analytic_jacobian(vf))
        throw Error(ErrorKind::InvalidInput, field_name(vf) + " has no analytic Jacobian");
    const int m = static_cast<int>(M0.cols());
    // Last component accumulates the trace of the Jacobian.
    Vec z(n + n * m + 1);
    z.head(n) = s0;
    z.segment(n, n * m) = Eigen::Map<const Vec>(M0.data(), n * m);
    z[n + n * m] = 0.0;
    auto rhs = [&](double t, const Vec& w, Vec& d) {
        const Vec s = w.head(n);
        d.resize(w.size());
        d.head(n) = eval_field(vf, s, t);
        const Mat J = field_jacobian(vf, s, t);
        Eigen::Map<const Mat> M(w.data() + n, n, m);
        Eigen::Map<Mat>(d.data() + n, n, m) = J * M;
        d[n + n * m] = J.trace();
    };
    Trajectory full = integrate(rhs, z, t0, t1, cfg);
    VariationalResult r;
    const Vec& zend = full.states.back();
    r.M = Eigen::Map<const Mat>(zend.data() + n, n, m);
    r.trace_integral = zend[n + n * m];
    r.traj.times = std::move(full.times);
    r.traj.rejected = full.rejected;
    r.traj.states.reserve(full.states.size());
    r.traj.derivs.reserve(full.states.size());
    for (std::size_t i = 0; i < full.states.size(); ++i) {
        r.traj.states.push_back(full.states[i].head(n));
        r.traj.derivs.push_back(full.derivs[i].head(n));
    }
    return r;
}

std::vector<Event> section_crossings(const Trajectory& traj, double theta_sec, int direction, int index) {
    std::vector<Event> out;
    if (traj.size() < 2) return out;
    if (index < 0 || index >= traj.states.front().size())
        throw Error(ErrorKind::DimensionMismatch, "section index out of range");
    constexpr double twopi = 2.0 * std::numbers::pi;
    for (std::size_t k = 1; k < traj.size(); ++k) {
        const double ta = traj.times[k - 1], tb = traj.times[k];
        const double qa = traj.states[k - 1][index], qb = traj.states[k][index];
        const double lo = std::min(qa, qb), hi = std::max(qa, qb);
        // Every lift theta_sec + 2 pi j that lies in [lo, hi).
        long j0 = static_cast<long>(std::ceil((lo - theta_sec) / twopi));
        for (long j = j0;; ++j) {
            const double level = theta_sec + twopi * j;
            if (level > hi) break;
            auto g = [&](double t) { return traj.at(t)[index] - level; };
            double a = ta, b = tb, ga = qa - level, gb = qb - level;
            if (ga == 0.0 && k > 1) continue;  // reported as the previous interval's endpoint
            if (ga * gb > 0.0) continue;
            const int sgn = gb > ga ? +1 : -1;
            if (direction != 0 && sgn != direction) continue;
            // Bisection safeguarded secant.
            double tc = a;
            for (int it = 0; it < 200; ++it) {
                double tn = (gb != ga) ? b - gb * (b - a) / (gb - ga) : 0.5 * (a + b);
                if (!(tn > std::min(a, b) && tn < std::max(a, b))) tn = 0.5 * (a + b);
                const double gn = g(tn);
                tc = tn;
                if (std::abs(gn) < 1e-13 || std::abs(b - a) < 1e-12) break;
                if ((gn < 0) == (ga < 0)) {
                    a = tn;
                    ga = gn;
                } else {
                    b = tn;
                    gb = gn;
                }
                if (it % 3 == 2) {  // force a bisection to guarantee progress
                    const double tm = 0.5 * (a + b), gm = g(tm);
                    if ((gm < 0) == (ga < 0)) {
                        a = tm;
                        ga = gm;
                    } else {
                        b = tm;
                        gb = gm;
                    }
                }
            }
            out.push_back({tc, traj.at(tc), sgn});
        }
    }
    std::sort(out.begin(), out.end(), [&](const Event& x, const Event& y) {
        return traj.t1() >= traj.t0() ? x.t < y.t : x.t > y.t;
    });
    return out;
}

const char* to_string(AttractorKind k) {
    switch (k) {
        case AttractorKind::SAO: return "SAO";
        case AttractorKind::MMO: return "MMO";
        case AttractorKind::LAO: return "LAO";
    }
    return "Unknown";
}

AttractorClass classify_samples(const std::vector<double>& x, double periods, const ClassifyOptions& opt) {
    AttractorClass c;
    c.periods = periods;
    // Large excursions: completed passages from x > 1 to x < -1.
    int side = 0;
    for (double v : x) {
        if (v > 1.0) {
            side = +1;
        } else if (v < -1.0) {
            if (side == +1) ++c.large_excursions;
            side = -1;
        }
    }
    // Turning points with a hysteresis of noise_floor.
    std::vector<double> ext;
    std::vector<int> kind;  // +1 max, -1 min
    if (!x.empty()) {
        int dir = 0;
        double cand = x.front();
        for (double v : x) {
            if (dir == 0) {
                if (v - cand > opt.noise_floor) { dir = +1; cand = v; }
                else if (cand - v > opt.noise_floor) { dir = -1; cand = v; }
            } else if (dir == +1) {
                if (v > cand) cand = v;
                else if (cand - v > opt.noise_floor) { ext.push_back(cand); kind.push_back(+1); dir = -1; cand = v; }
            } else {
                if (v < cand) cand = v;
                else if (v - cand > opt.noise_floor) { ext.push_back(cand); kind.push_back(-1); dir = +1; cand = v; }
            }
        }
    }
    for (std::size_t i = 1; i + 1 < ext.size(); ++i) {
        const double drop_l = std::abs(ext[i] - ext[i - 1]), drop_r = std::abs(ext[i] - ext[i + 1]);
        const bool small = drop_l < opt.small_amplitude && drop_r < opt.small_amplitude;
        if (!small) continue;
        if ((kind[i] == +1 && ext[i] > 0.0) || (kind[i] == -1 && ext[i] < 0.0)) ++c.small_oscillations;
    }
    if (c.large_excursions == 0) c.kind = AttractorKind::SAO;
    else if (c.small_oscillations == 0) c.kind = AttractorKind::LAO;
    else c.kind = AttractorKind::MMO;
    return c;
}

AttractorClass classify_attractor(const ModelParams& p, const ClassifyOptions& opt, const IntegratorConfig& cfg) {
    p.validate();
    if (opt.window_periods < 3.0) throw Error(ErrorKind::InvalidInput, "window must cover at least 3 periods");
    const double period = 2.0 * std::numbers::pi / p.omega;
    Vec s0 = opt.s0;
    if (s0.size() == 0) {
        s0.resize(3);
        s0 << 2.0, cubic_f(2.0), 0.0;
    }
    const VectorField vf = field::Full{p};
    IntegratorConfig quiet = cfg;
    quiet.store = false;
    const double tt = opt.transient_periods * period;
    const Vec s1 = integrate(vf, s0, 0.0, tt, quiet).back();
    const Trajectory tr = integrate(vf, s1, tt, tt + opt.window_periods * period, cfg);
    std::vector<double> x;
    x.reserve(tr.size());
    for (const auto& s : tr.states) {
        if (std::abs(s[0]) > 10.0) throw Error(ErrorKind::Unclassified, "trajectory left the bounded region");
        x.push_back(s[0]);
    }
    return classify_samples(x, opt.window_periods, opt);
}

}  // namespace canard
