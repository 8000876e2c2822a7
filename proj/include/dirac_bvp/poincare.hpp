#pragma once

// Radial Rayleigh quotients behind the weighted Poincare inequalities:
//   hardy:  min int (v')^2 r^{n-1} dr / int v^2 r^{n-3} dr  on [r0, R]
//   mckean: min int (x f')^2 x^{-n} dx / int f^2 x^{-n} dx  on [eps, x0]
// discretized by P1 finite elements on a log-spaced grid.

#include <Eigen/Dense>

namespace dbvp {

enum class RayleighKind { Hardy, McKean };

/// Natural: no constraint and no boundary term.
/// LogNeumann: subtracts (n - 1)/2 x^{1-n} f(x)^2 at that end, which turns the
/// log-substituted problem into a Neumann problem there (McKean right end).
enum class EndCondition { Dirichlet, Natural, LogNeumann };

struct RayleighProblem {
    RayleighKind kind = RayleighKind::Hardy;
    int n = 3;
    double left = 1.0;
    double right = 2.0;
    int points = 1024;  // grid nodes
    EndCondition left_bc = EndCondition::Dirichlet;
    EndCondition right_bc = EndCondition::Dirichlet;

    double log_length() const;
};

/// [1, e^L], Dirichlet at both ends.
RayleighProblem hardy_problem(int n, double log_ratio, int points);
/// [e^{-L}, 1], Dirichlet at the left end.
RayleighProblem mckean_problem(int n, double log_ratio, int points,
                               EndCondition right_bc = EndCondition::LogNeumann);

/// Stiffness and mass matrices in the free nodes (Dirichlet nodes removed),
/// stored as symmetric tridiagonals.
struct RayleighPencil {
    Eigen::VectorXd stiff_diag, stiff_off, mass_diag, mass_off;
    Eigen::VectorXd nodes;  // all grid nodes, including constrained ones
};

/// Throws GridTooCoarse below 16 points and InvalidArgument for a bad domain.
RayleighPencil assemble_rayleigh(const RayleighProblem& p);

/// Smallest generalized eigenvalue of a symmetric tridiagonal pencil with
/// positive definite mass, by bisection on the Sylvester inertia of K - mu M.
double smallest_pencil_eigenvalue(const RayleighPencil& pencil, double rel_tol = 1e-13);

double hardy_rayleigh_min(const RayleighProblem& p);
double mckean_rayleigh_min(const RayleighProblem& p);

struct WeightFloor {
    double coefficient = 0.0;  // c in w(r) = c r^{power}
    int power = 0;
};

/// (n-2)^2/4 r^{-2} for hardy, the constant (n-1)^2/4 for mckean.
WeightFloor weight_floor(RayleighKind kind, int n);

/// Floor constant plus the lowest eigenvalue of -d^2/dt^2 on the log interval:
/// (pi/L)^2 with Dirichlet ends, (pi/(2L))^2 for Dirichlet/LogNeumann, and the
/// Robin root for a natural mckean outer end. The left end must be Dirichlet.
double log_substitution_value(const RayleighProblem& p);

} // namespace dbvp
