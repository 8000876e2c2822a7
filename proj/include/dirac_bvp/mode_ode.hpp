#pragma once

// Exact-propagator solvers for the scalar mode equation u' + lambda u = f on
// [0, delta]. The source is piecewise linear between grid nodes, so every
// cell update is a closed-form exponential-integrator step and the nodal
// values are exact up to rounding.

#include "dirac_bvp/spectral.hpp"

#include <Eigen/Dense>

namespace dbvp {

struct ModeSolution {
    double lambda = 0.0;
    Grid grid;
    Eigen::VectorXd u;
    Eigen::VectorXd u_prime;  // f - lambda u at the nodes
    Eigen::VectorXd f;
};

/// |lambda h| below which the cell kernels use their Taylor expansions.
inline constexpr double kSeriesSwitch = 1e-4;

/// Cell weights for a linear source: with z = lambda h,
///   int_0^h e^{-lambda (h - s)} f(s) ds = h (w_left f(0) + w_right f(h)).
struct CellWeights {
    double decay = 1.0;  // e^{-z}
    double w_left = 0.5;
    double w_right = 0.5;
};

CellWeights cell_weights(double lambda, double h);
/// Same weights forced through the series or the exponential branch.
CellWeights cell_weights_series(double lambda, double h);
CellWeights cell_weights_exponential(double lambda, double h);

/// Forward sweep from u(0) = u0.
ModeSolution solve_from_left(double lambda, const Eigen::VectorXd& f, double u0,
                             const Grid& grid);

/// Backward sweep with u(delta) = 0:
///   u(x) = -int_x^delta e^{lambda (s - x)} f(s) ds.
ModeSolution solve_to_zero_at_right(double lambda, const Eigen::VectorXd& f, const Grid& grid);

/// |int (u'^2 + lambda^2 u^2) + lambda (u(delta)^2 - u(0)^2) - int f^2|,
/// trapezoid rule for the integrals.
double energy_identity_residual(const ModeSolution& sol);

struct QuadratureBound {
    double lhs = 0.0;
    double rhs = 0.0;
};

/// lhs = int_0^delta (int_x^delta e^{lambda (s - x)} f ds)^2 dx,
/// rhs = delta^2 e^{2 lambda delta} / 2 int f^2   (lambda > 0),
///       delta^2 / 2 int f^2                      (lambda <= 0).
QuadratureBound b2a_bound_check(double lambda, const Eigen::VectorXd& f, const Grid& grid);

} // namespace dbvp
