#pragma once

// Independent reference computations used only by the tests.

#include "dirac_bvp/bvp_perturbed.hpp"
#include "dirac_bvp/poincare.hpp"
#include "dirac_bvp/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

/// ||B||_{H^1_* -> L^2} on P1 trial functions from the dense generalized
/// eigenproblem B^T G2 B v = mu G1 v over all unknowns (node-major).
inline double dense_op_norm(const dbvp::Perturbation& b, const dbvp::SpectralPartition& part) {
    const auto n = static_cast<Eigen::Index>(part.size());
    const int nodes = b.grid.nodes();
    const double h = b.grid.h();
    const Eigen::Index dim = n * nodes;
    Eigen::MatrixXd g1 = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::MatrixXd form = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < nodes; ++i) {
        const double t = (i == 0 || i == nodes - 1) ? 0.5 * h : h;
        const Eigen::MatrixXd& bi = b.matrices[static_cast<std::size_t>(i)];
        form.block(i * n, i * n, n, n) = t * bi.transpose() * bi;
        for (Eigen::Index a = 0; a < n; ++a) {
            const double w = part.weight(static_cast<std::size_t>(a));
            g1(i * n + a, i * n + a) += w * w * t;
        }
    }
    for (int e = 0; e + 1 < nodes; ++e) {
        for (Eigen::Index a = 0; a < n; ++a) {
            const Eigen::Index p = e * n + a, q = (e + 1) * n + a;
            g1(p, p) += 1.0 / h;
            g1(q, q) += 1.0 / h;
            g1(p, q) -= 1.0 / h;
            g1(q, p) -= 1.0 / h;
        }
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(form, g1, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

/// Composite Simpson rule for a smooth function on [a, b] with `panels` even.
inline double simpson(const std::function<double(double)>& g, double a, double b, int panels) {
    const double h = (b - a) / panels;
    double s = g(a) + g(b);
    for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * g(a + i * h);
    return s * h / 3.0;
}

/// Periodic solution of a(x) u' + c u = f(x) on [0, 1) by the integrating
/// factor, with every integral done by Simpson on `panels` panels per unit.
class PeriodicScalarSolution {
public:
    PeriodicScalarSolution(std::function<double(double)> a, double c, std::function<double(double)> f,
                           int panels = 20000)
        : a_(std::move(a)), c_(c), f_(std::move(f)), panels_(panels) {
        const double p1 = phase(1.0);
        const double i1 = source_integral(1.0);
        c0_ = i1 * std::exp(-p1) / (1.0 - std::exp(-p1));
    }

    double operator()(double x) const { return std::exp(-phase(x)) * (c0_ + source_integral(x)); }

private:
    // p(x) = int_0^x c / a
    double phase(double x) const {
        if (x == 0.0) return 0.0;
        const int m = std::max(2, 2 * static_cast<int>(std::ceil(panels_ * x / 2.0)));
        return simpson([this](double s) { return c_ / a_(s); }, 0.0, x, m);
    }
    // int_0^x e^{p(s)} f(s) / a(s) ds, with p evaluated by a running Simpson sum.
    double source_integral(double x) const {
        if (x == 0.0) return 0.0;
        const int m = std::max(2, 2 * static_cast<int>(std::ceil(panels_ * x / 2.0)));
        const double h = x / m;
        std::vector<double> p(static_cast<std::size_t>(m) + 1, 0.0);
        // p on the grid by the trapezoid rule with a midpoint Simpson correction per step
        for (int i = 1; i <= m; ++i) {
            const double s0 = (i - 1) * h, s1 = i * h;
            const double g0 = c_ / a_(s0), gm = c_ / a_(0.5 * (s0 + s1)), g1 = c_ / a_(s1);
            p[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i - 1)] + h * (g0 + 4.0 * gm + g1) / 6.0;
        }
        double s = 0.0;
        for (int i = 0; i <= m; ++i) {
            const double xi = i * h;
            const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            s += w * std::exp(p[static_cast<std::size_t>(i)]) * f_(xi) / a_(xi);
        }
        return s * h / 3.0;
    }

    std::function<double(double)> a_;
    double c_;
    std::function<double(double)> f_;
    int panels_;
    double c0_ = 0.0;
};

/// Smallest generalized eigenvalue of the assembled pencil by a dense solver.
inline double dense_pencil_min(const dbvp::RayleighPencil& pc) {
    const Eigen::Index n = pc.stiff_diag.size();
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n), m = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = pc.stiff_diag(i);
        m(i, i) = pc.mass_diag(i);
        if (i + 1 < n) {
            k(i, i + 1) = k(i + 1, i) = pc.stiff_off(i);
            m(i, i + 1) = m(i + 1, i) = pc.mass_off(i);
        }
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(k, m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = g(rng);
    }
    return m;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

} // namespace oracle
