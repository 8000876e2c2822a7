#pragma once

// Small dense linear-algebra helpers shared by the solvers.

#include <Eigen/Dense>

#include <cmath>
#include <functional>

namespace dbvp {

/// Solves T x = rhs for symmetric tridiagonal T (Thomas algorithm, no pivoting;
/// intended for SPD or diagonally dominant T).
Eigen::VectorXd solve_tridiagonal(const Eigen::VectorXd& diag, const Eigen::VectorXd& off,
                                  const Eigen::VectorXd& rhs);

/// Orthonormal basis of the numerical null space of m: right singular vectors
/// whose singular value is below rel_tol * sigma_max.
Eigen::MatrixXd null_space(const Eigen::MatrixXd& m, double rel_tol);

/// Orthonormal basis of the column span (SVD rank at rel_tol).
Eigen::MatrixXd orthonormal_span(const Eigen::MatrixXd& m, double rel_tol = 1e-12);

/// ||P_a - P_b||_2 for the orthogonal projectors onto two column spans.
/// Both inputs must have orthonormal columns.
double subspace_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

template <typename Scalar>
struct PowerIterationResult {
    double value = 0.0;  // dominant eigenvalue of the normal operator
    int iterations = 0;
    bool converged = false;
};

/// Power iteration for the dominant eigenvalue of an operator that is
/// self-adjoint and nonnegative in the inner product `inner`. The iterate is
/// normalized in that inner product and the Rayleigh quotient is returned;
/// stops once its relative change falls below rel_tol.
template <typename Scalar>
PowerIterationResult<Scalar> power_iteration(
    const std::function<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(
        const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>&)>& apply,
    const std::function<double(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>&,
                               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>&)>& inner,
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v, double rel_tol, int max_iter) {
    PowerIterationResult<Scalar> out;
    double norm = std::sqrt(inner(v, v));
    if (norm == 0.0) return out;
    v /= norm;
    double previous = -1.0;
    for (int it = 1; it <= max_iter; ++it) {
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w = apply(v);
        const double rq = inner(v, w);
        out.value = rq;
        out.iterations = it;
        if (rq <= 0.0) {
            out.value = 0.0;
            out.converged = true;
            return out;
        }
        if (previous > 0.0 && std::abs(rq - previous) <= rel_tol * rq) {
            out.converged = true;
            return out;
        }
        previous = rq;
        norm = std::sqrt(inner(w, w));
        if (norm == 0.0) {
            out.converged = true;
            return out;
        }
        v = w / norm;
    }
    return out;
}

} // namespace dbvp
