#pragma once

// Bounded x-dependent perturbations B of the model operator and the
// fixed-point iteration L0 u^(k) = f - B u^(k-1).

#include "dirac_bvp/bvp_model.hpp"
#include "dirac_bvp/spectral.hpp"

#include <Eigen/Dense>

#include <vector>

namespace dbvp {

/// B sampled at grid nodes, matrices[i] acting on mode coefficients at x_i.
struct Perturbation {
    Grid grid;
    std::vector<Eigen::MatrixXd> matrices;

    bool is_zero() const;
};

Perturbation constant_perturbation(const Eigen::MatrixXd& b, const Grid& grid);
Perturbation transpose(const Perturbation& b);
Perturbation scaled(const Perturbation& b, double factor);

/// Nodal product (B u)(x_i) = B(x_i) u(x_i). The result has no derivatives.
CylinderField apply(const Perturbation& b, const CylinderField& u);

inline constexpr double kOpNormSafety = 1.01;

struct OpNormEstimate {
    double value = 0.0;  // raw * kOpNormSafety
    double raw = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// ||B||_{H^1_* -> L^2} on P1 trial functions: power iteration on
/// B^T G2 B v = mu G1 v with G1 the per-mode stiffness plus w^2 mass and G2
/// the trapezoid mass. Stops at relative change 1e-6 or 500 iterations.
OpNormEstimate estimate_op_norm(const Perturbation& b, const SpectralPartition& partition);

struct IterationReport {
    CylinderField u;
    int iterations = 0;
    std::vector<double> step_norms;          // ||u^(k) - u^(k-1)||_{H^1_*}
    std::vector<double> contraction_ratios;  // step_norms[k] / step_norms[k-1]
    bool converged = false;
    double c4 = 0.0;
    OpNormEstimate op_norm;
    OpNormEstimate adjoint_op_norm;  // reported, not enforced
    double residual_l2 = 0.0;        // ||u' + A u + B u - f||_{L^2}
    double bc_residual = 0.0;
    double h1_norm = 0.0;
    double bound = 0.0;  // c4 / (1 - c4 ||B||) (||f|| + ||sigma||_{1/2})
};

/// Throws NotContraction when c4 ||B|| >= 1 and MaxIterations when the step
/// norm stays above tol.
IterationReport solve_perturbed(const ModelProblem& problem, const Perturbation& b, double tol,
                                int max_iter);

} // namespace dbvp
