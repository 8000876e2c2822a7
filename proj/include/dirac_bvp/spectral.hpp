#pragma once

// Spectral data of the boundary operator A on Y, the partition of its
// spectrum at a cutoff kappa, the weighted Sobolev norms built from it, and
// the trace/extension maps between Y and the cylinder Y x [0, delta].
//
// Fields are stored as mode coefficients only. Mode positions 0..N-1 follow
// the ascending eigenvalue order; EigenMode::index is the external label.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

namespace dbvp {

struct EigenMode {
    int index = 0;
    double lambda = 0.0;
};

struct Eigendecomposition {
    std::vector<EigenMode> modes;  // ascending by (lambda, index)
    Eigen::MatrixXd basis;         // column j is the eigenvector of modes[j]
    double residual = 0.0;         // ||A - Q diag(lambda) Q^T||_F / ||A||_F
};

/// Full spectrum and orthonormal eigenbasis of a dense symmetric matrix.
/// Throws NotSymmetric when |a - a^T| exceeds 1e-12 * max|a_ij|.
Eigendecomposition eigendecompose_symmetric(const Eigen::MatrixXd& a);

/// Exact spectrum of J d/dtheta on the circle of length 2 pi, truncated to
/// |n| <= n_max. Each eigenvalue has multiplicity two.
std::vector<EigenMode> circle_dirac_modes(int n_max, bool antiperiodic);

/// Central-difference discretization of J d/dtheta on 2-component fields,
/// `points` nodes on a circle of length 2 pi, J the rotation by pi/2.
/// Unknown ordering is (node, component).
Eigen::MatrixXd circle_dirac_central_difference(int points);

/// Spectral data of the symmetric block operator [[0, a^T], [a, 0]].
Eigendecomposition block_operator(const Eigen::MatrixXd& a);

enum class Region { Plus, Minus, Zero };

class SpectralPartition {
public:
    /// Splits `modes` at the cutoff kappa. `lambda_hat` lists mode labels
    /// (EigenMode::index) of small modes assigned to P; by default every
    /// small mode with lambda >= 0.
    static SpectralPartition build(std::vector<EigenMode> modes, double kappa, double delta,
                                   std::optional<std::vector<int>> lambda_hat = std::nullopt);

    std::size_t size() const { return modes_.size(); }
    const std::vector<EigenMode>& modes() const { return modes_; }
    double lambda(std::size_t pos) const { return modes_[pos].lambda; }

    double kappa() const { return kappa_; }
    double delta() const { return delta_; }
    double theta0() const { return theta0_; }
    double ell() const { return kappa_ * delta_; }

    Region region(std::size_t pos) const { return regions_[pos]; }
    bool in_hat(std::size_t pos) const { return hat_[pos]; }
    /// Membership in Lambda^+ u Lambda-hat, the range of P.
    bool in_p(std::size_t pos) const { return regions_[pos] == Region::Plus || hat_[pos]; }

    const std::vector<std::size_t>& plus() const { return plus_; }
    const std::vector<std::size_t>& minus() const { return minus_; }
    const std::vector<std::size_t>& zero() const { return zero_; }
    const std::vector<std::size_t>& hat() const { return hat_set_; }
    /// Positions in the range of P, ascending.
    const std::vector<std::size_t>& p_set() const { return p_set_; }
    /// Positions in the range of 1 - P, ascending.
    const std::vector<std::size_t>& complement_set() const { return q_set_; }

    /// |lambda| on Lambda', kappa on Lambda^0.
    double weight(std::size_t pos) const;
    /// weight^(2s): the per-mode factor of the H^s_* norm squared.
    double sobolev_weight(std::size_t pos, double s) const;

    /// Position of the mode with label `index`; throws InvalidArgument.
    std::size_t position_of(int index) const;

private:
    std::vector<EigenMode> modes_;
    double kappa_ = 1.0;
    double delta_ = 1.0;
    double theta0_ = 0.0;
    std::vector<Region> regions_;
    std::vector<bool> hat_;
    std::vector<std::size_t> plus_, minus_, zero_, hat_set_, p_set_, q_set_;
};

struct BoundaryField {
    Eigen::VectorXd coeffs;
};

enum class Projection { Plus, Minus, Zero, Prime, P, OneMinusP };

BoundaryField project(const SpectralPartition& partition, const BoundaryField& field,
                      Projection which);

/// ||u||^2 in H^s_*(Y).
double hs_norm_sq(const SpectralPartition& partition, const BoundaryField& field, double s);
double hs_norm(const SpectralPartition& partition, const BoundaryField& field, double s);

/// Uniform grid 0 = x_0 < ... < x_M = delta.
struct Grid {
    double delta = 1.0;
    int cells = 1;

    int nodes() const { return cells + 1; }
    double h() const { return delta / cells; }
    double x(int i) const { return delta * static_cast<double>(i) / cells; }
};

Grid make_grid(double delta, int cells);

/// Mode coefficients sampled on a grid: values(mode, node). `derivs` has the
/// same shape when x-derivatives are known, and is empty otherwise.
struct CylinderField {
    Grid grid;
    Eigen::MatrixXd values;
    Eigen::MatrixXd derivs;

    bool has_derivs() const { return derivs.size() != 0; }
};

CylinderField zero_field(std::size_t modes, const Grid& grid);

/// Composite trapezoid rule on uniform samples.
double trapezoid(const Eigen::Ref<const Eigen::VectorXd>& samples, double h);

/// Second-order finite-difference derivative of each row.
Eigen::MatrixXd finite_difference_derivative(const Eigen::MatrixXd& values, double h);

/// ||u||^2 in L^2(Y x I), trapezoid rule.
double l2_norm_sq(const CylinderField& field);

/// ||u||^2 in H^1_*(Y x I), trapezoid rule. Uses derivative samples when
/// present, finite differences otherwise.
double h1_star_norm_sq(const SpectralPartition& partition, const CylinderField& field);

BoundaryField trace_at_node(const CylinderField& field, int node);
/// Restriction to Y x {x}; throws OffGrid when x is not a grid node.
BoundaryField trace_at(const CylinderField& field, double x);

/// c_1(ell) = (1 + sqrt(1 + ell^2)) / ell, the trace constant.
double trace_constant(double ell);
/// Constant of the extension bound, 2 / sqrt(3).
double extension_constant();

/// Extension e_Y sigma: profile sigma_a * max(0, 1 - x / eta_a) per mode with
/// eta_a = sqrt(3) / weight(a). Derivative samples are one-sided from the
/// left at a kink that falls on a node.
CylinderField extend_boundary(const SpectralPartition& partition, const BoundaryField& sigma,
                              const Grid& grid);

/// Exact ||e_Y sigma||^2 in H^1_*, integrating the piecewise-linear profiles
/// in closed form.
double extension_h1_norm_sq(const SpectralPartition& partition, const BoundaryField& sigma);

} // namespace dbvp
