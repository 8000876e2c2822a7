#pragma once

// Fully discrete linear system for (d/dx + A + B, graph condition) on the
// cylinder, its kernel and cokernel, and the discrete Fredholm alternative.
//
// Unknowns are nodal mode coefficients, column i * N + a for node i and mode
// position a. Row i * N + a (cell i) is the exponential propagator relation
//   (u_{i+1} - e^{-lambda h} u_i) / h + w_l (B_i u_i)_a + w_r (B_{i+1} u_{i+1})_a
//     = w_l f_{i,a} + w_r f_{i+1,a},
// followed by |P| rows for P u(0) - K (1 - P) u(0) = sigma and |1 - P| rows
// for (1 - P) u(delta) = 0, both scaled by 1 / sqrt(h). The system is square.

#include "dirac_bvp/bvp_model.hpp"
#include "dirac_bvp/bvp_perturbed.hpp"
#include "dirac_bvp/spectral.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace dbvp {

struct DiscreteSystem {
    GraphBoundaryCondition bc;
    Grid grid;
    std::optional<Perturbation> perturbation;
    bool degenerate = false;  // P rows replaced by zero rows
    Eigen::MatrixXd matrix;

    Eigen::Index modes() const { return static_cast<Eigen::Index>(bc.partition.size()); }
    Eigen::Index cell_rows() const { return modes() * grid.cells; }

    Eigen::VectorXd rhs(const CylinderField& f, const BoundaryField& sigma) const;
    Eigen::VectorXd pack(const CylinderField& u) const;
    CylinderField unpack(const Eigen::VectorXd& x) const;
};

/// Throws InvalidArgument for cells < 2.
DiscreteSystem assemble(const GraphBoundaryCondition& bc, const Perturbation* b, int cells,
                        bool degenerate = false);

struct KernelBasis {
    Eigen::MatrixXd vectors;  // orthonormal columns
    double tol_used = 0.0;    // relative singular-value cutoff
    /// Smallest singular value kept in the range and largest one discarded
    /// (the latter is -1 when the kernel is trivial).
    double smallest_kept = 0.0;
    double largest_dropped = -1.0;

    Eigen::Index dim() const { return vectors.cols(); }
};

struct KernelPair {
    KernelBasis kernel;
    KernelBasis cokernel;
    Eigen::VectorXd singular_values;  // descending

    Eigen::Index index() const { return kernel.dim() - cokernel.dim(); }
};

inline constexpr double kKernelCutoff = 1e-8;

KernelPair kernel_and_cokernel(const DiscreteSystem& sys, double rel_cutoff = kKernelCutoff);

/// Adjoint boundary values of cokernel vectors. phi(0) and phi(delta) are read
/// from the columns of the first and last node, and must satisfy
/// (1 - P + K^T P) phi(0) = 0 and P phi(delta) = 0.
struct AdjointTraces {
    Eigen::MatrixXd phi0;      // N x dim coker
    Eigen::MatrixXd phi_delta; // N x dim coker
    double left_residual = 0.0;
    double right_residual = 0.0;
};

AdjointTraces adjoint_traces(const DiscreteSystem& sys, const KernelBasis& cokernel);

/// With B = 0 a cokernel vector propagates as psi_{i} = e^{lambda h} psi_{i-1}
/// between cells. Returns the largest relative violation; vectors supported on
/// the boundary rows only are skipped.
double adjoint_propagation_residual(const DiscreteSystem& sys, const KernelBasis& cokernel);

/// With B = 0, feeds the exact adjoint solutions psi(x) = e^{lambda (x - delta)}
/// of -d/dx + lambda, sampled on the cell rows, through the transposed matrix
/// and returns the largest interior-node entry relative to max|psi| (times h).
/// Zero up to rounding means the transposed propagator is the exact adjoint one.
double transpose_propagator_residual(const DiscreteSystem& sys);

struct SolvabilityReport {
    bool solvable = false;
    double residual_against_cokernel = 0.0;  // ||C^T d||
    double data_norm = 0.0;
    std::optional<Eigen::VectorXd> solution;
    double lsq_residual = 0.0;  // ||A x - d|| / max(1, ||d||), least squares
    bool lsq_consistent = false;  // lsq_residual <= 1e-8
};

/// Projects the data vector on the cokernel: solvable iff the projection is at
/// most 1e-6 ||d||. An independent least-squares solve is reported alongside.
SolvabilityReport solvability_check(const DiscreteSystem& sys, const KernelBasis& cokernel,
                                    const Eigen::VectorXd& data);

struct SplittingReport {
    Eigen::Index n = 0;
    double idempotence_q1 = 0.0;  // ||Q1^2 - Q1||_max
    double idempotence_q2 = 0.0;
    double orthogonality = 0.0;   // ||Z1^T Z2||_max
    Eigen::Index dim_ker_q1 = 0;
    Eigen::Index dim_ker_q2 = 0;
    Eigen::MatrixXd ker_q1;
    Eigen::MatrixXd ker_q2;

    bool holds(double tol = 1e-10) const {
        return idempotence_q1 <= tol && idempotence_q2 <= tol && orthogonality <= tol &&
               dim_ker_q1 + dim_ker_q2 == n;
    }
};

/// Q1 = P - K(1 - P), Q2 = 1 - P + K^T P for a coordinate projection P and an
/// N x N matrix K. Throws KNotOffBlock when K has an entry outside the
/// (P rows, 1 - P columns) block.
SplittingReport splitting_check(const std::vector<bool>& in_p, const Eigen::MatrixXd& k);

} // namespace dbvp
