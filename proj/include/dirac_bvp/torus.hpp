#pragma once

// First-order elliptic systems on the flat torus T^n = R^n / Z^n, n in {1, 2},
// in the Fourier basis e^{2 pi i k.x}. Constant coefficients are inverted per
// lattice point; variable coefficients by a fixed-point iteration around a
// constant-coefficient operator.

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <functional>
#include <vector>

namespace dbvp {

using Wavevector = std::array<int, 2>;

/// Coefficients u_k in C^N for k in the box |k_j| <= cutoff.
struct TorusField {
    int dims = 1;
    int cutoff = 0;
    int components = 1;
    bool real = false;  // set when the coefficients represent a real field
    std::vector<Eigen::VectorXcd> coeffs;

    int side() const { return 2 * cutoff + 1; }
    int lattice_size() const { return dims == 1 ? side() : side() * side(); }
    Wavevector wavevector(int idx) const;
    int index_of(const Wavevector& k) const;
    double norm_k_sq(int idx) const;
};

TorusField zero_torus_field(int dims, int cutoff, int components);

/// x + alpha y on the same lattice.
TorusField axpy(const TorusField& x, double alpha, const TorusField& y);

double l2_norm_sq(const TorusField& u);
/// sum (1 + 4 pi^2 |k|^2) |u_k|^2
double h1_norm_sq(const TorusField& u);
/// Largest |u_{-k} - conj(u_k)|.
double conjugate_symmetry_defect(const TorusField& u);

struct ConstantOperator {
    std::vector<Eigen::MatrixXd> a0;
    double eta = 0.0;
};

/// min over sampled unit xi of min(s_min(xi.a), 1 / s_max(xi.a)); xi in {+-1}
/// for n = 1 and 512 equally spaced directions for n = 2. Throws Degenerate
/// when the result is at most 1e-12.
double ellipticity_constant(const std::vector<Eigen::MatrixXd>& a);

ConstantOperator make_constant_operator(std::vector<Eigen::MatrixXd> a0);

/// Symbol 2 pi i k.a0 + shift.
Eigen::MatrixXcd symbol(const ConstantOperator& op, const Wavevector& k, int dims, double shift);

struct InversionReport {
    TorusField u;
    double min_singular_value = 0.0;
    double max_condition = 0.0;
    /// max over k of pi eta max(1, 2|k| - 1) - s_min(symbol(k)); <= 0 when the
    /// multiplier bound holds.
    double multiplier_excess = 0.0;
};

/// Solves (2 pi i k.a0 + pi eta) u_k = f_k for every lattice point. Throws
/// SingularSymbol when a symbol is numerically singular.
InversionReport invert_constant(const TorusField& f, const ConstantOperator& op);

/// Applies the constant operator with shift pi eta.
TorusField apply_constant(const TorusField& u, const ConstantOperator& op);

/// Variable coefficients a^j(x), b(x) as functions on [0, 1)^n.
struct CoefficientField {
    int dims = 1;
    std::function<Eigen::MatrixXd(int axis, const std::array<double, 2>& x)> a;
    std::function<Eigen::MatrixXd(const std::array<double, 2>& x)> b;  // may be empty
};

/// Pseudo-spectral evaluation of products on a padded grid of
/// ceil(3 (2 cutoff + 1) / 2) points per axis.
class VariableOperator {
public:
    /// b_fraction is the part of b placed in B0; the rest forms B1.
    VariableOperator(const CoefficientField& coeffs, const ConstantOperator& op0, int cutoff,
                     int components, double b_fraction);

    int padded() const { return padded_; }
    /// B0 u = (a^j - a0^j) d_j u + b_fraction b u
    TorusField apply_b0(const TorusField& u) const;
    /// B1 u = (1 - b_fraction) b u
    TorusField apply_b1(const TorusField& u) const;
    /// (L0 + pi eta + B0 + B1) u
    TorusField apply_full(const TorusField& u) const;

    /// ||B0||_{H^1 -> L^2} and the same for the discrete adjoint, from the
    /// dense Fourier matrix by power iteration.
    double b0_norm() const;
    double b0_adjoint_norm() const;
    /// Largest pointwise spectral norm of the B1 coefficient on the padded grid.
    double b1_sup() const;

private:
    TorusField product(const std::vector<std::vector<Eigen::MatrixXd>>& fields,
                       const std::vector<TorusField>& inputs) const;
    Eigen::MatrixXcd b0_matrix() const;

    int dims_;
    int cutoff_;
    int components_;
    int padded_;
    ConstantOperator op0_;
    double b_fraction_;
    std::vector<std::vector<Eigen::MatrixXd>> da_;  // [axis][grid point]
    std::vector<Eigen::MatrixXd> b_;               // [grid point], empty when b is absent
};

struct VariableSolveReport {
    TorusField u;
    int iterations = 0;
    std::vector<double> step_norms;          // H^1 norms of successive differences
    std::vector<double> contraction_ratios;
    bool converged = false;
    double b0_norm = 0.0;
    double b0_adjoint_norm = 0.0;  // reported only
    double guard = 0.0;            // eta / 3 * eta_slack
    double residual_l2 = 0.0;      // ||(L + pi eta) u - f||_{L^2}
    double h1_norm = 0.0;
    double apriori_constant = 0.0;  // C in ||u||_{H^1} <= C (||f|| + ||u||_{L^2})
    double apriori_rhs = 0.0;
};

/// Solves (a^j d_j + b + pi eta) u = f by
///   (L0 + pi eta) u^(k+1) = f - (B0 + B1) u^(k),  u^(0) = 0.
/// Throws PerturbationTooLarge when ||B0|| > eta / 3 * eta_slack and
/// MaxIterations without convergence.
VariableSolveReport solve_variable(const TorusField& f, const CoefficientField& coeffs,
                                   const ConstantOperator& op0, double tol, int max_iter,
                                   double b_fraction = 0.0, double eta_slack = 1.0);

} // namespace dbvp
