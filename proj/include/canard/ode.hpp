#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "canard/model.hpp"

namespace canard {

using Rhs = std::function<void(double t, const Vec& s, Vec& ds)>;

struct IntegratorConfig {
    double rtol = 1e-9;
    double atol = 1e-12;
    double h_init = 1e-3;
    double h_max = std::numeric_limits<double>::infinity();
    long max_steps = 2'000'000;
    // > 0 disables step control and marches with this step (order checks).
    double fixed_step = 0.0;
    // false keeps only the endpoints, for long runs where only the end state matters.
    bool store = true;
    // Checked after each accepted step; true ends the run there.
    std::function<bool(double t, const Vec& s)> halt;

    void validate() const;
};

struct Event {
    double t;
    Vec s;
    int id;
};

// Accepted steps with the field value at each node. Between nodes the state is
// the cubic Hermite interpolant.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<Vec> derivs;
    std::vector<Event> events;
    long rejected = 0;
    bool halted = false;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
    double t0() const { return times.front(); }
    double t1() const { return times.back(); }
    const Vec& back() const { return states.back(); }
    // Dense output; t must lie inside the span.
    Vec at(double t) const;
};

Trajectory integrate(const Rhs& f, const Vec& s0, double t0, double t1, const IntegratorConfig& cfg = {});
Trajectory integrate(const VectorField& vf, const Vec& s0, double t0, double t1,
                     const IntegratorConfig& cfg = {});

struct VariationalResult {
    Trajectory traj;  // the state part only
    Mat M;            // fundamental matrix at t1, starting from M0
    double trace_integral = 0.0;  // integral of tr Df along the orbit
};

VariationalResult integrate_with_variational(const VectorField& vf, const Vec& s0, const Mat& M0, double t0,
                                             double t1, const IntegratorConfig& cfg = {});

// Crossings of component `index` through theta_sec (mod 2 pi). direction +1
// keeps increasing crossings, -1 decreasing, 0 both.
std::vector<Event> section_crossings(const Trajectory& traj, double theta_sec, int direction = +1,
                                     int index = 2);

enum class AttractorKind { SAO, MMO, LAO };
const char* to_string(AttractorKind k);

struct AttractorClass {
    AttractorKind kind = AttractorKind::SAO;
    int large_excursions = 0;
    int small_oscillations = 0;
    double periods = 0.0;
    double small_per_large() const {
        return large_excursions ? static_cast<double>(small_oscillations) / large_excursions : 0.0;
    }
    double large_per_period() const { return periods > 0 ? large_excursions / periods : 0.0; }
};

struct ClassifyOptions {
    double transient_periods = 20.0;
    double window_periods = 50.0;
    double small_amplitude = 1.0;  // bound on x-excursion of a small oscillation
    double noise_floor = 1e-6;     // extrema with smaller prominence are ignored
    Vec s0;                        // default (2, f(2), 0) on the upper attracting sheet
};

AttractorClass classify_attractor(const ModelParams& p, const ClassifyOptions& opt = {},
                                  const IntegratorConfig& cfg = {});
AttractorClass classify_samples(const std::vector<double>& x, double periods, const ClassifyOptions& opt = {});

}  // namespace canard
