#pragma once

// Model boundary value problem on the cylinder:
//
//   (d/dx + A) u = f,   P u(0) = sigma + K (1 - P) u(0),   (1 - P) u(delta) = 0,
//
// with A x-independent and diagonal in the mode basis. Modes in the range of
// 1 - P are integrated from the right with zero end value, K couples their
// trace at x = 0 into the left data of the P modes, which are then integrated
// from the left.

#include "dirac_bvp/spectral.hpp"

#include <Eigen/Dense>

namespace dbvp {

/// Graph boundary condition P u(0) = sigma + K (1 - P) u(0).
///
/// K is stored compactly: row j acts on mode p_set()[j], column l reads mode
/// complement_set()[l]. `k_bound` is the H^{1/2}_* operator norm of K.
struct GraphBoundaryCondition {
    SpectralPartition partition;
    Eigen::MatrixXd K;
    BoundaryField sigma;
    double k_bound = 0.0;
};

/// Validates shapes and the support of sigma, and computes k_bound.
/// Throws SigmaNotInRangeP when sigma has a nonzero coefficient outside P.
GraphBoundaryCondition make_graph_condition(SpectralPartition partition, Eigen::MatrixXd K,
                                            BoundaryField sigma);

/// Spectral (APS-type) condition: K = 0.
GraphBoundaryCondition aps_condition(const SpectralPartition& partition,
                                     const BoundaryField& sigma);

/// Same condition with new boundary data.
GraphBoundaryCondition with_sigma(const GraphBoundaryCondition& bc, BoundaryField sigma);

/// Largest singular value of D^{1/2} K D'^{-1/2}, D and D' the H^{1/2}_* weights
/// of the P and 1 - P blocks.
double coupling_bound(const SpectralPartition& partition, const Eigen::MatrixXd& K);

/// K embedded as an N x N matrix in mode coordinates.
Eigen::MatrixXd coupling_matrix_full(const GraphBoundaryCondition& bc);

/// Chirality condition (1 - sign * eps) psi = 0 rewritten as a graph condition.
struct ChiralCondition {
    Eigen::MatrixXd basis;  // eigenvectors of A, column j <-> partition position j
    GraphBoundaryCondition bc;
    Eigen::MatrixXd graph_kernel;   // ker(P - K(1-P)) in original coordinates, orthonormal
    Eigen::MatrixXd chiral_kernel;  // ker(1 - sign * eps), orthonormal
    double kernel_distance = 0.0;   // ||proj(graph_kernel) - proj(chiral_kernel)||_2
};

/// Requires eps^2 = 1, eps^T = eps and eps A + A eps = 0 (to 1e-10 relative),
/// throwing NotChiral otherwise. sign = +1 gives K = +e^{-1} and the kernel
/// ker(1 - eps); sign = -1 gives K = -e^{-1} and ker(1 + eps). Inside ker A
/// the basis is rotated to diagonalize eps, and the eps = -sign half joins P.
ChiralCondition chiral_condition(const Eigen::MatrixXd& a, const Eigen::MatrixXd& eps, int sign,
                                 double kappa, double delta);

double constant_c2(double ell, double theta0);
double constant_c3(double ell, double theta0);
/// c_4 of the a priori estimate (the square root of the explicit c_4^2).
/// theta0 == 0 selects the 2 max(1, k^2) form.
double constant_c4(double ell, double theta0, double k);
/// c_4 for a concrete partition: the 2 max(1, k^2) form only applies when
/// there are no small modes at all.
double constant_c4_for(const SpectralPartition& partition, double k);

struct ModelProblem {
    CylinderField f;
    GraphBoundaryCondition bc;
};

struct SolveReport {
    CylinderField u;
    double h1_norm_sq = 0.0;
    double data_norm_sq = 0.0;  // ||f||^2_{L^2} + ||sigma||^2_{H^{1/2}_*}
    double c4 = 0.0;
    double bc_residual_left = 0.0;
    double bc_residual_right = 0.0;
    double p0_l2_norm = 0.0;

    /// h1_norm_sq <= c4^2 data_norm_sq, up to relative slack `rel`.
    bool estimate_holds(double rel = 1e-8) const {
        return h1_norm_sq <= c4 * c4 * data_norm_sq * (1.0 + rel);
    }
};

/// Throws PartitionMismatch when f does not match the partition.
SolveReport solve_model(const ModelProblem& problem);

} // namespace dbvp
