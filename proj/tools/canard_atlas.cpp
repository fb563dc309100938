// canard-atlas: command-line access to the forced van der Pol canard toolkit.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "canard/atlas.hpp"
#include "canard/manifold.hpp"
#include "canard/melnikov.hpp"
#include "canard/model.hpp"
#include "canard/normal_form.hpp"
#include "canard/ode.hpp"
#include "canard/torus.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace canard;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (v == 0.0) return "0";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

// Rows are accumulated and written once, so output order never depends on scheduling.
class Csv {
public:
    explicit Csv(std::vector<std::string> header) : cols_(header.size()) { add(header); }
    void add(const std::vector<std::string>& row) {
        if (row.size() != cols_) throw Error(ErrorKind::DimensionMismatch, "csv row width");
        for (std::size_t i = 0; i < row.size(); ++i) out_ << (i ? "," : "") << row[i];
        out_ << '\n';
    }
    std::string str() const { return out_.str(); }

private:
    std::size_t cols_;
    std::ostringstream out_;
};

struct Run {
    std::string command;
    fs::path out_dir = ".";
    json params = json::object();
    json tolerances = json::object();
    std::vector<std::string> files;

    void write(const std::string& name, const std::string& content) {
        fs::create_directories(out_dir);
        std::ofstream f(out_dir / name, std::ios::binary);
        if (!f) throw Error(ErrorKind::InvalidInput, "cannot write " + (out_dir / name).string());
        f << content;
        files.push_back(name);
    }
    // One metadata record per data file, enough to re-run the command.
    void finish() const {
        for (const auto& name : files) {
            json m;
            m["command"] = command;
            m["data_file"] = name;
            m["parameters"] = params;
            m["tolerances"] = tolerances;
            m["version"] = {{"canard-atlas", kVersion}, {"library", kVersion}};
            m["determinism"] = "no random numbers or clocks are used; identical flags give identical files";
            std::ofstream f(out_dir / (name + ".meta.json"), std::ios::binary);
            f << m.dump(2) << '\n';
        }
    }
};

unsigned thread_cap() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* e = std::getenv("CANARD_ATLAS_THREADS")) {
        const int v = std::atoi(e);
        if (v >= 1) n = static_cast<unsigned>(v);
    }
    return n;
}

// Evaluates fn over items with at most thread_cap() workers; results keep item order.
template <class T, class Fn>
auto parallel_map(const std::vector<T>& items, Fn fn) {
    using R = decltype(fn(items.front()));
    std::vector<R> out(items.size());
    const unsigned cap = thread_cap();
    for (std::size_t start = 0; start < items.size(); start += cap) {
        std::vector<std::future<R>> batch;
        const std::size_t stop = std::min(items.size(), start + cap);
        for (std::size_t i = start; i < stop; ++i)
            batch.push_back(std::async(std::launch::async, fn, std::cref(items[i])));
        for (std::size_t i = start; i < stop; ++i) out[i] = batch[i - start].get();
    }
    return out;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v;
    if (n == 1) return {a};
    for (int k = 0; k < n; ++k) v.push_back(a + (b - a) * k / (n - 1));
    return v;
}

void require_range(const std::vector<double>& r, const char* what) {
    if (r.size() != 2 || !(r[0] < r[1])) throw Error(ErrorKind::InvalidInput, std::string(what) + " needs lo < hi");
}

// ---- subcommands ----------------------------------------------------------------

struct SimulateArgs {
    double a = 0, b = 0, omega = 0, eps = 0, t_end = 200, theta0 = 0, x0 = 2.0, y0 = NAN;
    double rtol = 1e-9, atol = 1e-12;
};

void run_simulate(Run& run, const SimulateArgs& s) {
    const ModelParams p{s.a, s.b, s.omega, s.eps};
    p.validate();
    if (s.t_end < 0) throw Error(ErrorKind::InvalidInput, "--t-end must be non-negative");
    IntegratorConfig cfg;
    cfg.rtol = s.rtol;
    cfg.atol = s.atol;
    run.params = {{"a", s.a}, {"b", s.b}, {"omega", s.omega}, {"eps", s.eps}, {"t_end", s.t_end},
                  {"theta0", s.theta0}, {"x0", s.x0}, {"y0", std::isnan(s.y0) ? cubic_f(s.x0) : s.y0}};
    run.tolerances = {{"rtol", s.rtol}, {"atol", s.atol}};
    Csv csv({"t", "x", "y", "theta"});
    if (s.t_end == 0) {
        std::cerr << "warning: --t-end 0 gives an empty trajectory\n";
    } else {
        Vec s0(3);
        s0 << s.x0, std::isnan(s.y0) ? cubic_f(s.x0) : s.y0, s.theta0;
        const auto tr = integrate(field::Full{p}, s0, 0.0, s.t_end, cfg);
        for (std::size_t k = 0; k < tr.size(); ++k)
            csv.add({num(tr.times[k]), num(tr.states[k][0]), num(tr.states[k][1]), num(tr.states[k][2])});
    }
    run.write("trajectory.csv", csv.str());
    ClassifyOptions co;
    const auto c = classify_attractor(p, co, cfg);
    json j = {{"class", to_string(c.kind)},
              {"large_excursions", c.large_excursions},
              {"small_oscillations", c.small_oscillations},
              {"periods", c.periods},
              {"small_per_large", c.small_per_large()},
              {"large_per_period", c.large_per_period()},
              {"transient_periods", co.transient_periods},
              {"window_periods", co.window_periods}};
    run.write("attractor.json", j.dump(2) + "\n");
}

struct FoldArgs {
    double eps = 0, b = 0;
    std::vector<double> omega_range{0.05, 0.5};
    int points = 10;
    std::string source = "both";
    int max_points = 1500;
    double h_min = 1e-6;
};

void run_fold_curves(Run& run, const FoldArgs& f) {
    require_range(f.omega_range, "--omega-range");
    if (f.points < 1) throw Error(ErrorKind::InvalidInput, "--points must be positive");
    const auto grid = linspace(f.omega_range[0], f.omega_range[1], f.points);
    run.params = {{"eps", f.eps}, {"b", f.b}, {"omega_range", f.omega_range}, {"points", f.points},
                  {"source", f.source}};
    Csv csv({"omega", "a_lower", "a_upper", "source", "terminated"});
    if (f.source == "theory" || f.source == "both") {
        for (double w : grid) {
            const auto th = fold_curve_theory(f.b, w, f.eps);
            csv.add({num(w), num(th.first), num(th.second), "theory", "0"});
        }
    }
    if (f.source == "continuation" || f.source == "both") {
        FoldCurveOptions o;
        o.max_points = f.max_points;
        o.h_min = f.h_min;
        run.tolerances = {{"newton_tol", 1e-9}, {"max_points", o.max_points}, {"h_min", o.h_min},
                          {"h_max", o.h_max}};
        const auto pair = fold_curves_omega(f.b, f.eps, grid.front(), grid.back(), grid, o);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const auto& lo = pair.lower.samples.at(k);
            const auto& up = pair.upper.samples.at(k);
            const bool ok = lo.ok && up.ok;
            csv.add({num(grid[k]), lo.ok ? num(lo.a) : "nan", up.ok ? num(up.a) : "nan", "continuation",
                     ok ? "0" : "1"});
        }
        json j = {{"lower", {{"terminated", pair.lower.terminated}, {"stop_reason", pair.lower.stop_reason},
                             {"reach", pair.lower.reach}}},
                  {"upper", {{"terminated", pair.upper.terminated}, {"stop_reason", pair.upper.stop_reason},
                             {"reach", pair.upper.reach}}}};
        run.write("fold_curves_status.json", j.dump(2) + "\n");
    } else if (f.source != "theory") {
        throw Error(ErrorKind::InvalidInput, "--source must be theory, continuation or both");
    }
    run.write("fold_curves.csv", csv.str());
}

struct MelnikovArgs {
    std::string regime = "fsn";
    double r2 = 0.3, beta = 1.0, gamma = 0.0, omega_bar = 1.0, theta0 = 0.0;
    double alpha_t = -0.125, beta_t = 0.0, Omega = 1.0;
    double t_max = 30.0;
};

void run_melnikov(Run& run, const MelnikovArgs& m) {
    MelnikovResult r;
    std::string params;
    if (m.regime == "fsn") {
        r = melnikov_d1_fsn(m.r2, m.beta, m.gamma, m.omega_bar, m.theta0, m.t_max);
        params = "r2=" + num(m.r2) + ";beta=" + num(m.beta) + ";gamma=" + num(m.gamma) +
                 ";omega_bar=" + num(m.omega_bar) + ";theta20=" + num(m.theta0);
        run.params = {{"regime", m.regime}, {"r2", m.r2}, {"beta", m.beta}, {"gamma", m.gamma},
                      {"omega_bar", m.omega_bar}, {"theta0", m.theta0}};
    } else if (m.regime == "intermediate") {
        r = melnikov_d_intermediate(m.alpha_t, m.beta_t, m.Omega, m.theta0, m.t_max);
        params = "alpha_t=" + num(m.alpha_t) + ";beta_t=" + num(m.beta_t) + ";Omega=" + num(m.Omega) +
                 ";theta0=" + num(m.theta0);
        run.params = {{"regime", m.regime}, {"alpha_t", m.alpha_t}, {"beta_t", m.beta_t}, {"Omega", m.Omega},
                      {"theta0", m.theta0}};
    } else {
        throw Error(ErrorKind::InvalidInput, "--regime must be fsn or intermediate");
    }
    run.tolerances = {{"t_max", m.t_max}, {"error_estimate", r.error_estimate}};
    Csv csv({"regime", "parameters", "quadrature", "closed_form", "abs_err"});
    csv.add({m.regime, params, num(r.value), num(r.closed_form), num(r.abs_err)});
    run.write("melnikov.csv", csv.str());
}

struct SingArgs {
    double a = 0, b = 0, omega_bar = 0, eps = 0.01;
};

void run_singularities(Run& run, const SingArgs& s) {
    const ModelParams p{s.a, s.b, s.omega_bar * s.eps, s.eps};
    p.validate();
    run.params = {{"a", s.a}, {"b", s.b}, {"omega_bar", s.omega_bar}, {"eps", s.eps}};
    run.tolerances = {{"fsn_tol", kTolFsn}};
    Csv csv({"theta_star", "kind", "lambda1_re", "lambda1_im", "lambda2_re", "lambda2_im", "mu", "fold_branch"});
    for (const auto& f : folded_singularities(p))
        csv.add({num(f.theta_star), to_string(f.kind), num(f.lambda1.real()), num(f.lambda1.imag()),
                 num(f.lambda2.real()), num(f.lambda2.imag()), num(f.mu), std::to_string(f.fold_branch)});
    run.write("singularities.csv", csv.str());
}

struct SectionArgs {
    double a = 0, b = 0, eps = 0, omega = 0, theta_n = NAN, resolution = 1e-3;
    bool refine = true;
};

void run_section(Run& run, const SectionArgs& s) {
    const ModelParams p{s.a, s.b, s.omega, s.eps};
    p.validate();
    const double th = std::isnan(s.theta_n) ? section_angle(s.a, s.b, s.eps) : s.theta_n;
    ManifoldOptions mo;
    mo.resolution = s.resolution;
    run.params = {{"a", s.a}, {"b", s.b}, {"eps", s.eps}, {"omega", s.omega}, {"theta_n", th}};
    run.tolerances = {{"rtol", mo.rtol}, {"atol", mo.atol}, {"resolution", mo.resolution},
                      {"max_speed", mo.max_speed}, {"x_window", {mo.x_lo, mo.x_hi}}};
    const auto Sa = compute_manifold(p, true, th, mo);
    const auto Sr = compute_manifold(p, false, th, mo);
    Csv curves({"manifold", "s", "x", "y"});
    for (const auto* c : {&Sa, &Sr})
        for (std::size_t k = 0; k < c->size(); ++k)
            curves.add({c->attracting ? "S_a" : "S_r", num(c->t[k]), num(c->pts[k].x()), num(c->pts[k].y())});
    auto hits = intersect_in_section(Sa, Sr);
    if (s.refine) refine_crossings(p, th, hits, mo);
    Csv cross({"x", "y", "s_a", "s_r", "angle"});
    for (const auto& h : hits) cross.add({num(h.point.x()), num(h.point.y()), num(h.t_a), num(h.t_b), num(h.angle)});
    run.write("section_curves.csv", curves.str());
    run.write("crossings.csv", cross.str());
}

struct TransArgs {
    double a = 0, b = 0, eps = 0;
    std::vector<double> omegas;
};

void run_transitions(Run& run, const TransArgs& t) {
    if (t.omegas.size() < 2) throw Error(ErrorKind::InvalidInput, "--omegas needs at least two values");
    SweepOptions so;
    run.params = {{"a", t.a}, {"b", t.b}, {"eps", t.eps}, {"omegas", t.omegas}};
    run.tolerances = {{"bisect_tol", so.bisect_tol}, {"rtol", so.manifold.rtol}, {"resolution", so.manifold.resolution}};
    const auto r = track_count_transitions(t.a, t.b, t.eps, t.omegas, so);
    Csv counts({"omega", "count"});
    for (const auto& f : r.frames) counts.add({num(f.omega), std::to_string(f.hits.size())});
    Csv tr({"omega_lo", "omega_hi", "change", "omega_transition", "omega_fold", "fold_found"});
    for (const auto& c : r.transitions)
        tr.add({num(c.omega_lo), num(c.omega_hi), std::to_string(c.change), num(c.omega_transition),
                c.fold_found ? num(c.omega_fold) : "nan", c.fold_found ? "1" : "0"});
    run.write("counts.csv", counts.str());
    run.write("transitions.csv", tr.str());
}

struct WidthArgs {
    double b = 0.01, omega = 0.1;
    std::vector<double> eps_list;
};

void run_width(Run& run, const WidthArgs& w) {
    std::vector<double> eps = w.eps_list;
    if (eps.empty()) eps = linspace(3e-3, 8e-4, 11);
    run.params = {{"b", w.b}, {"omega", w.omega}, {"eps", eps}};
    FoldCurveOptions o;
    run.tolerances = {{"newton_tol", 1e-9}, {"h_min", o.h_min}, {"max_points", o.max_points}};
    const auto r = canard_region_width(eps, w.b, w.omega, o);
    Csv csv({"eps", "width_numeric", "width_theory"});
    for (const auto& p : r.points) csv.add({num(p.eps), p.ok ? num(p.width) : "nan", num(p.width_theory)});
    run.write("width.csv", csv.str());
    json j = {{"slope", r.slope}, {"slope_theory", r.slope_theory},
              {"relative_error", (r.slope - r.slope_theory) / r.slope_theory}};
    run.write("width_fit.json", j.dump(2) + "\n");
}

struct TorusArgs {
    std::vector<double> b{0.0};
    double omega = 1.0, eps = 0.01, a_lo = 0.9, a_hi = 1.05;
};

void run_torus(Run& run, const TorusArgs& t) {
    require_range({t.a_lo, t.a_hi}, "--a-bracket");
    run.params = {{"b", t.b}, {"omega", t.omega}, {"eps", t.eps}, {"a_bracket", {t.a_lo, t.a_hi}}};
    run.tolerances = {{"root_tol", 1e-10}, {"rtol", floquet_integrator().rtol}, {"atol", floquet_integrator().atol}};
    const auto res = parallel_map(t.b, [&](double b) {
        return locate_torus_bifurcation(b, t.omega, t.eps, t.a_lo, t.a_hi);
    });
    Csv csv({"b", "omega", "eps", "a_TB_numeric", "a_TB_formula", "diff"});
    for (std::size_t k = 0; k < t.b.size(); ++k) {
        const double formula = torus_bif_locus(t.b[k], t.omega, t.eps, t.a_lo, t.a_hi);
        csv.add({num(t.b[k]), num(t.omega), num(t.eps), num(res[k].a_tb), num(formula),
                 num(res[k].a_tb - formula)});
    }
    run.write("torus_bif.csv", csv.str());
}

struct NormalArgs {
    std::string system = "test";
    double c = 0.3;
    std::vector<double> z_grid;
};

void run_normal_form(Run& run, const NormalArgs& n) {
    RectifiedFastSystem sys;
    if (n.system == "test")
        sys = test_fast_system(n.c);
    else if (n.system == "fold-cycle")
        sys = fold_cycle_system(n.c);
    else
        throw Error(ErrorKind::InvalidInput, "--system must be test or fold-cycle");
    std::vector<double> z = n.z_grid;
    if (z.empty()) z = linspace(-0.01, 0.01, 5);
    NormalFormOptions o;
    run.params = {{"system", n.system}, {"c", n.c}, {"z_grid", z}};
    run.tolerances = {{"tol", o.tol}, {"nf_tol", o.nf_tol}, {"fd_step", o.fd_step}, {"rtol", o.ode.rtol}};
    const auto n1 = solve_lambda(sys, 0.0, 1, o);
    const auto table = reduce_to_normal_form(sys, z, o);
    run.write("normal_form.json", to_json(table, n1) + "\n");
}

// Appends "--key value" for each key=value line of the --config file whose key is
// not already on the command line, so config keys reach the active subcommand.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string path;
    std::vector<std::string> kept;
    for (std::size_t k = 0; k < args.size(); ++k) {
        if (args[k] == "--config" && k + 1 < args.size()) {
            path = args[++k];
        } else if (args[k].rfind("--config=", 0) == 0) {
            path = args[k].substr(9);
        } else {
            kept.push_back(args[k]);
        }
    }
    if (path.empty()) return kept;
    std::ifstream f(path);
    if (!f) throw CLI::FileError::Missing(path);
    const auto given = [&](const std::string& flag) {
        for (const auto& a : kept)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };
    const auto trim = [](std::string t) {
        const auto b = t.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string{};
        return t.substr(b, t.find_last_not_of(" \t\r") - b + 1);
    };
    std::string line;
    while (std::getline(f, line)) {
        if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw CLI::ParseError("config line without '=': " + line, CLI::ExitCodes::ConfigError);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        const std::string flag = "--" + key;
        if (given(flag)) continue;
        kept.push_back(flag);
        kept.push_back(value);
    }
    return kept;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Canards of the forced van der Pol oscillator"};
    app.set_version_flag("--version", kVersion);
    std::string config_file;
    app.add_option("--config", config_file, "key=value file, '#' starts a comment; flags take precedence");
    app.require_subcommand(1);
    app.fallthrough();
    Run run;
    std::string out = ".";
    app.add_option("--out", out, "output directory")->capture_default_str();

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "integrate the full system and classify the attractor");
    sim->add_option("--a", sa.a)->required();
    sim->add_option("--b", sa.b)->required();
    sim->add_option("--omega", sa.omega)->required();
    sim->add_option("--eps", sa.eps)->required();
    sim->add_option("--t-end", sa.t_end)->capture_default_str();
    sim->add_option("--theta0", sa.theta0)->capture_default_str();
    sim->add_option("--x0", sa.x0)->capture_default_str();
    sim->add_option("--y0", sa.y0, "default f(x0)");
    sim->add_option("--rtol", sa.rtol)->capture_default_str();
    sim->add_option("--atol", sa.atol)->capture_default_str();

    FoldArgs fa;
    auto* fold = app.add_subcommand("fold-curves", "fold curves of the primary canard in (omega, a)");
    fold->add_option("--eps", fa.eps)->required();
    fold->add_option("--b", fa.b)->required();
    fold->add_option("--omega-range", fa.omega_range)->expected(2)->delimiter(',')->capture_default_str();
    fold->add_option("--points", fa.points)->capture_default_str();
    fold->add_option("--source", fa.source)->check(CLI::IsMember({"theory", "continuation", "both"}))
        ->capture_default_str();
    fold->add_option("--max-points", fa.max_points)->capture_default_str();
    fold->add_option("--h-min", fa.h_min)->capture_default_str();

    MelnikovArgs ma;
    auto* mel = app.add_subcommand("melnikov", "splitting integral by quadrature against its closed form");
    mel->add_option("--regime", ma.regime)->check(CLI::IsMember({"fsn", "intermediate"}))->capture_default_str();
    mel->add_option("--r2", ma.r2)->capture_default_str();
    mel->add_option("--beta", ma.beta)->capture_default_str();
    mel->add_option("--gamma", ma.gamma)->capture_default_str();
    mel->add_option("--omega-bar", ma.omega_bar)->capture_default_str();
    mel->add_option("--alpha-t", ma.alpha_t)->capture_default_str();
    mel->add_option("--beta-t", ma.beta_t)->capture_default_str();
    mel->add_option("--Omega", ma.Omega)->capture_default_str();
    mel->add_option("--theta0", ma.theta0)->capture_default_str();
    mel->add_option("--t-max", ma.t_max)->capture_default_str();

    SingArgs ga;
    auto* sing = app.add_subcommand("singularities", "folded singularities of the reduced flow");
    sing->add_option("--a", ga.a)->required();
    sing->add_option("--b", ga.b)->required();
    sing->add_option("--omega-bar", ga.omega_bar)->required();
    sing->add_option("--eps", ga.eps)->capture_default_str();

    SectionArgs se;
    auto* sec = app.add_subcommand("section", "slow manifolds and their crossings in a theta section");
    sec->add_option("--a", se.a)->required();
    sec->add_option("--b", se.b)->required();
    sec->add_option("--eps", se.eps)->required();
    sec->add_option("--omega", se.omega)->required();
    sec->add_option("--theta-n", se.theta_n, "default: folded-node section angle");
    sec->add_option("--resolution", se.resolution)->capture_default_str();
    sec->add_flag("--refine,!--no-refine", se.refine, "polish crossings by Newton")->capture_default_str();

    TransArgs ta;
    auto* trn = app.add_subcommand("transitions", "crossing-count changes over an omega sweep");
    trn->add_option("--a", ta.a)->required();
    trn->add_option("--b", ta.b)->required();
    trn->add_option("--eps", ta.eps)->required();
    trn->add_option("--omegas", ta.omegas)->required()->delimiter(',');

    WidthArgs wa;
    auto* wid = app.add_subcommand("width", "canard-region width against eps");
    wid->add_option("--b", wa.b)->capture_default_str();
    wid->add_option("--omega", wa.omega)->capture_default_str();
    wid->add_option("--eps-list", wa.eps_list, "default: 11 values from 3e-3 to 8e-4")->delimiter(',');

    TorusArgs tba;
    auto* tor = app.add_subcommand("torus-bif", "torus bifurcation from Floquet multipliers");
    tor->add_option("--b", tba.b)->delimiter(',')->capture_default_str();
    tor->add_option("--omega", tba.omega)->capture_default_str();
    tor->add_option("--eps", tba.eps)->capture_default_str();
    tor->add_option("--a-lo", tba.a_lo)->capture_default_str();
    tor->add_option("--a-hi", tba.a_hi)->capture_default_str();

    NormalArgs na;
    auto* nf = app.add_subcommand("normal-form", "normal-form coefficients of a rectified fast system");
    nf->add_option("--system", na.system)->check(CLI::IsMember({"test", "fold-cycle"}))->capture_default_str();
    nf->add_option("--c", na.c, "cos(theta) coefficient")->capture_default_str();
    nf->add_option("--z-grid", na.z_grid)->delimiter(',');

    try {
        auto args = expand_config(argc, argv);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    run.out_dir = out;
    try {
        auto* sub = app.get_subcommands().front();
        run.command = sub->get_name();
        if (sub == sim) run_simulate(run, sa);
        else if (sub == fold) run_fold_curves(run, fa);
        else if (sub == mel) run_melnikov(run, ma);
        else if (sub == sing) run_singularities(run, ga);
        else if (sub == sec) run_section(run, se);
        else if (sub == trn) run_transitions(run, ta);
        else if (sub == wid) run_width(run, wa);
        else if (sub == tor) run_torus(run, tba);
        else if (sub == nf) run_normal_form(run, na);
        run.finish();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.is_usage() ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
