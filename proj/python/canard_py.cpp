#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "canard/atlas.hpp"
#include "canard/manifold.hpp"
#include "canard/melnikov.hpp"
#include "canard/model.hpp"
#include "canard/normal_form.hpp"
#include "canard/ode.hpp"
#include "canard/torus.hpp"

namespace py = pybind11;
using namespace canard;

PYBIND11_MODULE(canard_py, m) {
    m.doc() = "Canards of the forced van der Pol oscillator";

    py::register_exception<Error>(m, "CanardError", PyExc_RuntimeError);

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init([](double a, double b, double omega, double eps) {
                 ModelParams p{a, b, omega, eps};
                 p.validate();
                 return p;
             }),
             py::arg("a"), py::arg("b"), py::arg("omega"), py::arg("eps"))
        .def_readwrite("a", &ModelParams::a)
        .def_readwrite("b", &ModelParams::b)
        .def_readwrite("omega", &ModelParams::omega)
        .def_readwrite("eps", &ModelParams::eps)
        .def_property_readonly("omega_bar", &ModelParams::omega_bar)
        .def("__repr__", [](const ModelParams& p) {
            return "ModelParams(a=" + std::to_string(p.a) + ", b=" + std::to_string(p.b) +
                   ", omega=" + std::to_string(p.omega) + ", eps=" + std::to_string(p.eps) + ")";
        });

    m.def("cubic_f", &cubic_f);

    m.def(
        "folded_singularities",
        [](const ModelParams& p) {
            py::list out;
            for (const auto& s : folded_singularities(p)) {
                py::dict d;
                d["theta_star"] = s.theta_star;
                d["kind"] = to_string(s.kind);
                d["lambda1"] = s.lambda1;
                d["lambda2"] = s.lambda2;
                d["mu"] = s.mu;
                d["fold_branch"] = s.fold_branch;
                out.append(d);
            }
            return out;
        },
        py::arg("p"));

    m.def("fold_curve_theory", &fold_curve_theory, py::arg("b"), py::arg("omega"), py::arg("eps"));
    m.def("degenerate_node_locus", &degenerate_node_locus, py::arg("b"), py::arg("eps"), py::arg("omega_bar"));
    m.def("torus_bif_locus", &torus_bif_locus, py::arg("b"), py::arg("omega"), py::arg("eps"),
          py::arg("a_lo") = 0.5, py::arg("a_hi") = 1.0);
    m.def("section_angle", &section_angle, py::arg("a"), py::arg("b"), py::arg("eps"));

    m.def(
        "melnikov_d1_fsn",
        [](double r2, double beta, double gamma, double omega_bar, double theta20) {
            const auto r = melnikov_d1_fsn(r2, beta, gamma, omega_bar, theta20);
            return py::make_tuple(r.value, r.closed_form);
        },
        py::arg("r2"), py::arg("beta"), py::arg("gamma"), py::arg("omega_bar"), py::arg("theta20"),
        "(quadrature, closed form)");

    m.def(
        "simulate",
        [](const ModelParams& p, double t_end, double x0, double theta0) {
            Vec s0(3);
            s0 << x0, cubic_f(x0), theta0;
            IntegratorConfig cfg;
            const auto tr = integrate(field::Full{p}, s0, 0.0, t_end, cfg);
            Eigen::MatrixXd out(tr.size(), 4);
            for (std::size_t k = 0; k < tr.size(); ++k) {
                out(k, 0) = tr.times[k];
                out.row(k).tail(3) = tr.states[k].transpose();
            }
            return out;
        },
        py::arg("p"), py::arg("t_end"), py::arg("x0") = 2.0, py::arg("theta0") = 0.0,
        "rows (t, x, y, theta) at the accepted steps");

    m.def(
        "classify_attractor",
        [](const ModelParams& p) { return std::string(to_string(classify_attractor(p).kind)); }, py::arg("p"));

    m.def(
        "torus_bifurcation",
        [](double b, double omega, double eps, double a_lo, double a_hi) {
            const auto t = locate_torus_bifurcation(b, omega, eps, a_lo, a_hi);
            py::dict d;
            d["a_tb"] = t.a_tb;
            d["rho1"] = t.at_root.rho1;
            d["rho2"] = t.at_root.rho2;
            d["product_trace_error"] = t.at_root.product_trace_error;
            return d;
        },
        py::arg("b"), py::arg("omega"), py::arg("eps"), py::arg("a_lo") = 0.9, py::arg("a_hi") = 1.05);

    m.def(
        "section_crossings",
        [](const ModelParams& p, double theta_n) {
            const auto Sa = compute_manifold(p, true, theta_n);
            const auto Sr = compute_manifold(p, false, theta_n);
            auto hits = intersect_in_section(Sa, Sr);
            refine_crossings(p, theta_n, hits);
            std::vector<std::array<double, 5>> rows;
            for (const auto& h : hits) rows.push_back({h.point.x(), h.point.y(), h.t_a, h.t_b, h.angle});
            return rows;
        },
        py::arg("p"), py::arg("theta_n"), "rows (x, y, s_a, s_r, angle)");

    m.def(
        "normal_form_lambdas",
        [](double c, double z, int N) {
            const auto s = solve_lambda(test_fast_system(c), z, N);
            return py::make_tuple(s.lambdas, s.jacobian_det);
        },
        py::arg("c") = 0.3, py::arg("z") = 0.0, py::arg("N") = 1,
        "(lambdas, det DH) for F = z - r^2 + c r cos(theta)");
}
