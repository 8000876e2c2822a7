#include "dirac_bvp/mode_ode.hpp"

#include "dirac_bvp/error.hpp"

#include <cmath>

namespace dbvp {

namespace {

void check_source(const Eigen::VectorXd& f, const Grid& grid) {
    if (grid.cells < 2) throw Error(ErrorKind::InvalidArgument, "grid needs M >= 2 cells");
    if (f.size() != grid.nodes()) {
        throw Error(ErrorKind::InvalidArgument, "source length does not match grid");
    }
}

} // namespace

// phi1(z) = (1 - e^{-z}) / z = int_0^1 e^{-z t} dt
// psi(z)  = (phi1(z) - e^{-z}) / z = int_0^1 e^{-z t} t dt
// The f(0) weight integrates against tau/h, the f(h) weight against 1 - tau/h.
CellWeights cell_weights_series(double lambda, double h) {
    const double z = lambda * h;
    const double z2 = z * z;
    const double z3 = z2 * z;
    const double phi1 = 1.0 - z / 2.0 + z2 / 6.0 - z3 / 24.0;
    const double psi = 0.5 - z / 3.0 + z2 / 8.0 - z3 / 30.0;
    return CellWeights{std::exp(-z), psi, phi1 - psi};
}

CellWeights cell_weights_exponential(double lambda, double h) {
    const double z = lambda * h;
    const double em1 = std::expm1(-z);  // e^{-z} - 1
    const double decay = 1.0 + em1;
    const double phi1 = -em1 / z;
    const double psi = (phi1 - decay) / z;
    return CellWeights{decay, psi, phi1 - psi};
}

CellWeights cell_weights(double lambda, double h) {
    if (std::abs(lambda * h) < kSeriesSwitch) return cell_weights_series(lambda, h);
    return cell_weights_exponential(lambda, h);
}

ModeSolution solve_from_left(double lambda, const Eigen::VectorXd& f, double u0,
                             const Grid& grid) {
    check_source(f, grid);
    const double h = grid.h();
    const CellWeights w = cell_weights(lambda, h);
    ModeSolution sol{lambda, grid, Eigen::VectorXd(grid.nodes()), {}, f};
    sol.u(0) = u0;
    for (int i = 0; i < grid.cells; ++i) {
        sol.u(i + 1) = w.decay * sol.u(i) + h * (w.w_left * f(i) + w.w_right * f(i + 1));
    }
    sol.u_prime = f - lambda * sol.u;
    return sol;
}

ModeSolution solve_to_zero_at_right(double lambda, const Eigen::VectorXd& f, const Grid& grid) {
    check_source(f, grid);
    const double h = grid.h();
    // Over [x, x+h]: u(x) = e^{lambda h} u(x+h) - int_0^h e^{lambda tau} f(x+tau) dtau.
    // With z' = -lambda h the integral is h (psi(z') f(x+h) + (phi1(z') - psi(z')) f(x)).
    const CellWeights w = cell_weights(-lambda, h);
    ModeSolution sol{lambda, grid, Eigen::VectorXd(grid.nodes()), {}, f};
    sol.u(grid.cells) = 0.0;
    for (int i = grid.cells - 1; i >= 0; --i) {
        sol.u(i) = w.decay * sol.u(i + 1) - h * (w.w_right * f(i) + w.w_left * f(i + 1));
    }
    sol.u_prime = f - lambda * sol.u;
    return sol;
}

double energy_identity_residual(const ModeSolution& sol) {
    const double h = sol.grid.h();
    const Eigen::VectorXd energy =
        sol.u_prime.cwiseAbs2() + sol.lambda * sol.lambda * sol.u.cwiseAbs2();
    const Eigen::Index n = sol.u.size();
    const double boundary = sol.lambda * (sol.u(n - 1) * sol.u(n - 1) - sol.u(0) * sol.u(0));
    return std::abs(trapezoid(energy, h) + boundary - trapezoid(sol.f.cwiseAbs2(), h));
}

QuadratureBound b2a_bound_check(double lambda, const Eigen::VectorXd& f, const Grid& grid) {
    const ModeSolution right = solve_to_zero_at_right(lambda, f, grid);
    const double h = grid.h();
    const double delta = grid.delta;
    const double f2 = trapezoid(f.cwiseAbs2(), h);
    QuadratureBound out;
    out.lhs = trapezoid(right.u.cwiseAbs2(), h);
    out.rhs = 0.5 * delta * delta * f2;
    if (lambda > 0.0) out.rhs *= std::exp(2.0 * lambda * delta);
    return out;
}

} // namespace dbvp
