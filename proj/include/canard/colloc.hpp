#pragma once

#include <functional>
#include <string>
#include <vector>

#include "canard/continuation.hpp"
#include "canard/model.hpp"

namespace canard {

// u' = rhs(s, u, p) on s in [0, 1] with nbc boundary conditions bc(u(0), u(1), p) = 0.
struct BvpProblem {
    int n = 0;
    std::vector<std::string> param_names;
    std::function<void(double s, const Vec& u, const Vec& p, Vec& f)> rhs;
    // Optional; central differences when empty. Jp is n x q.
    std::function<void(double s, const Vec& u, const Vec& p, Mat& Ju, Mat& Jp)> rhs_jac;
    int nbc = 0;
    std::function<void(const Vec& u0, const Vec& u1, const Vec& p, Vec& r)> bc;
    std::function<void(const Vec& u0, const Vec& u1, const Vec& p, Mat& J0, Mat& J1, Mat& Jp)> bc_jac;

    int q() const { return static_cast<int>(param_names.size()); }
    int param_index(const std::string& name) const;
    void validate() const;
};

// Piecewise polynomial of degree m on a mesh of [0, 1]; node j*m + k sits at
// mesh[j] + k/m * (mesh[j+1] - mesh[j]).
struct OrbitSegment {
    Vec mesh;
    int m = 4;
    Mat U;  // n x (N m + 1)
    Vec p;
    std::vector<std::string> names;

    int intervals() const { return static_cast<int>(mesh.size()) - 1; }
    Vec eval(double s) const;
    Vec eval_derivative(double s) const;
    double node_time(int i) const;
    double param(const std::string& name) const;
    void set_param(const std::string& name, double v);
};

OrbitSegment make_segment(const BvpProblem& prob, const Vec& mesh, int m, const Vec& p,
                          const std::function<Vec(double)>& guess);
Vec uniform_mesh(int N);

// Gauss-Legendre collocation with the unknown vector X = [vec(U); p(free)].
class Collocation {
public:
    Collocation(BvpProblem prob, const OrbitSegment& seg, std::vector<int> free);

    const BvpProblem& problem() const { return prob_; }
    const std::vector<int>& free() const { return free_; }
    int n_nodes() const { return N_ * m_ + 1; }
    int n_state() const { return prob_.n * n_nodes(); }
    int dim() const { return n_state() + static_cast<int>(free_.size()); }
    int rows() const { return prob_.n * N_ * m_ + prob_.nbc; }
    int intervals() const { return N_; }
    const Vec& mesh() const { return mesh_; }

    Vec pack(const OrbitSegment& seg) const;
    OrbitSegment unpack(const Vec& X) const;
    Vec full_params(const Vec& X) const;
    // Fixed parameter values live here; free ones come from X.
    Vec& fixed_params() { return p_; }
    int column_of_param(int param_index) const;  // -1 when fixed

    void residual(const Vec& X, Vec& F) const;
    void jacobian(const Vec& X, std::vector<Triplet>& trips) const;
    // Arclength weights: state nodes 1/#nodes, parameters 1 unless overridden.
    Vec weights() const;
    void set_param_weight(int param_index, double w) { param_w_.at(param_index) = w; }

    // Redistributes N intervals to equalize the monitor 1 + c |u'| and transfers X.
    Vec equidistribute(const Vec& X, int N_new);

private:
    void eval_rhs_jac(double s, const Vec& u, const Vec& p, Mat& Ju, Mat& Jp) const;
    void eval_bc_jac(const Vec& u0, const Vec& u1, const Vec& p, Mat& J0, Mat& J1, Mat& Jp) const;

    BvpProblem prob_;
    Vec mesh_;
    int N_ = 0;
    int m_ = 4;
    Vec p_;
    std::vector<int> free_;
    std::vector<int> param_col_;
    std::vector<double> param_w_;
    // Lagrange basis on m+1 equispaced nodes at the m Gauss points.
    Mat L_, D_;
    Vec c_;
};

struct BvpSolveOptions {
    NewtonOptions newton{1e-10, 15, 1e-14};
    int remesh_passes = 0;
    int remesh_intervals = 0;  // 0 keeps the current count
};

struct BvpResult {
    OrbitSegment seg;
    NewtonReport report;
};

// Square solve: requires #free = nbc - n. Throws NewtonDivergence on failure.
BvpResult solve_bvp(const BvpProblem& prob, const OrbitSegment& guess, const std::vector<int>& free,
                    const BvpSolveOptions& opt = {});

// One-parameter family: #free = nbc - n + 1.
class CollocationContinuation : public ContinuationSystem {
public:
    CollocationContinuation(const BvpProblem& prob, const OrbitSegment& seg, std::vector<int> free)
        : col_(prob, seg, std::move(free)) {}
    int dim() const override { return col_.dim(); }
    void residual(const Vec& X, Vec& F) const override { col_.residual(X, F); }
    void jacobian(const Vec& X, std::vector<Triplet>& t) const override { col_.jacobian(X, t); }
    Vec weights() const override { return col_.weights(); }
    std::vector<std::string> param_names() const override { return col_.problem().param_names; }
    Vec param_values(const Vec& X) const override { return col_.full_params(X); }
    double solution_norm(const Vec& X) const override;
    Collocation& collocation() { return col_; }
    const Collocation& collocation() const { return col_; }
    int param_column(const std::string& name) const {
        return col_.column_of_param(col_.problem().param_index(name));
    }

private:
    Collocation col_;
};

// Fold of `fold_param` along the family parametrized by `family_param`, continued
// in `extra_param`. The test function is d(fold_param)/d(family_param) evaluated
// by a bordered solve, so it vanishes at the fold.
class FoldContinuation : public ContinuationSystem {
public:
    FoldContinuation(const BvpProblem& prob, const OrbitSegment& seg, std::vector<int> free,
                     const std::string& fold_param, const std::string& family_param,
                     const std::string& extra_param);
    int dim() const override { return col_.dim(); }
    void residual(const Vec& X, Vec& F) const override;
    void jacobian(const Vec& X, std::vector<Triplet>& t) const override;
    Vec weights() const override { return col_.weights(); }
    std::vector<std::string> param_names() const override { return col_.problem().param_names; }
    Vec param_values(const Vec& X) const override { return col_.full_params(X); }
    Collocation& collocation() { return col_; }
    // Test function and its gradient.
    double test_function(const Vec& X, Vec* grad) const;
    // Square solve of the fold system with extra_param held at its current value.
    NewtonReport solve_fixed_extra(Vec& X, const NewtonOptions& opt = {}) const;
    int fold_column() const { return cf_; }
    int family_column() const { return cfam_; }
    int extra_column() const { return cx_; }

private:
    Collocation col_;
    int cf_ = -1, cfam_ = -1, cx_ = -1;
};

}  // namespace canard
