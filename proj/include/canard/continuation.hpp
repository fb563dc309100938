#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <string>
#include <vector>

#include "canard/model.hpp"

namespace canard {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Underdetermined smooth system F: R^dim -> R^(dim-1) whose zero set is a curve.
class ContinuationSystem {
public:
    virtual ~ContinuationSystem() = default;
    virtual int dim() const = 0;
    virtual void residual(const Vec& X, Vec& F) const = 0;
    // Triplets of the (dim-1) x dim Jacobian.
    virtual void jacobian(const Vec& X, std::vector<Triplet>& trips) const = 0;
    // Diagonal weights of the arclength inner product.
    virtual Vec weights() const { return Vec::Ones(dim()); }
    // Named scalar readouts recorded with each branch point.
    virtual std::vector<std::string> param_names() const { return {}; }
    virtual Vec param_values(const Vec& /*X*/) const { return Vec(); }
    virtual double solution_norm(const Vec& X) const;
    // Optional rediscretization; returns true when X and tangent changed dimension or layout.
    virtual bool adapt(Vec& /*X*/, Vec& /*tangent*/) { return false; }
};

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 15;
    double step_tol = 1e-13;
};

struct NewtonReport {
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
};

// Square Newton on F(X) = 0 given as residual/triplet callbacks.
NewtonReport newton_solve(const std::function<void(const Vec&, Vec&)>& F,
                          const std::function<void(const Vec&, std::vector<Triplet>&)>& J, Vec& X,
                          const NewtonOptions& opt);

struct ContinuationOptions {
    double h0 = 1e-3;
    double h_min = 1e-8;
    double h_max = 1e-1;
    double grow = 1.3;
    int grow_after = 3;
    int max_points = 500;
    NewtonOptions newton{1e-10, 8, 1e-13};
    // Component bounds of X: stop when leaving [lo, hi].
    struct Bound { int index; double lo, hi; };
    std::vector<Bound> bounds;
    bool detect_loop = true;
    int adapt_every = 0;
    // Extra user stop rule on accepted points.
    std::function<bool(const Vec&)> stop;
};

struct BranchPoint {
    Vec X;
    Vec tangent;
    Vec params;
    double norm = 0.0;
    double step = 0.0;
    bool is_fold = false;
};

struct Branch {
    std::vector<std::string> param_names;
    std::vector<BranchPoint> points;
    std::vector<int> folds;  // index i: fold between points i and i+1
    bool terminated = false; // h_min underflow or corrector failure
    std::string stop_reason;
};

// Tangent of the curve at X oriented along `previous` (or with positive last component).
Vec curve_tangent(const ContinuationSystem& sys, const Vec& X, const Vec* previous = nullptr);

Branch continue_curve(ContinuationSystem& sys, const Vec& X0, const Vec* tangent0, int direction,
                      const ContinuationOptions& opt);

struct FoldPoint {
    Vec X;
    Vec tangent;
    Vec params;
    double tangent_component = 0.0;
    int bracket = -1;
};

// Sign changes of tangent component `index`, refined by secant iteration in arclength.
std::vector<FoldPoint> detect_folds(const ContinuationSystem& sys, const Branch& branch, int index,
                                    double tol = 1e-10);

}  // namespace canard
