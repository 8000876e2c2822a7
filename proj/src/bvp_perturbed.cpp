#include "dirac_bvp/bvp_perturbed.hpp"

#include "dirac_bvp/error.hpp"
#include "dirac_bvp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>

namespace dbvp {

bool Perturbation::is_zero() const {
    for (const auto& m : matrices) {
        if (m.size() != 0 && m.cwiseAbs().maxCoeff() != 0.0) return false;
    }
    return true;
}

Perturbation constant_perturbation(const Eigen::MatrixXd& b, const Grid& grid) {
    return Perturbation{grid, std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(grid.nodes()), b)};
}

Perturbation transpose(const Perturbation& b) {
    Perturbation out{b.grid, {}};
    out.matrices.reserve(b.matrices.size());
    for (const auto& m : b.matrices) out.matrices.push_back(m.transpose());
    return out;
}

Perturbation scaled(const Perturbation& b, double factor) {
    Perturbation out = b;
    for (auto& m : out.matrices) m *= factor;
    return out;
}

namespace {

void check_shape(const Perturbation& b, Eigen::Index modes, const Grid& grid) {
    if (static_cast<int>(b.matrices.size()) != grid.nodes() || b.grid.cells != grid.cells ||
        std::abs(b.grid.delta - grid.delta) > 1e-12 * grid.delta) {
        throw Error(ErrorKind::PartitionMismatch, "perturbation grid does not match");
    }
    for (const auto& m : b.matrices) {
        if (m.rows() != modes || m.cols() != modes) {
            throw Error(ErrorKind::PartitionMismatch, "perturbation matrix has wrong size");
        }
    }
}

} // namespace

CylinderField apply(const Perturbation& b, const CylinderField& u) {
    check_shape(b, u.values.rows(), u.grid);
    CylinderField out{u.grid, Eigen::MatrixXd(u.values.rows(), u.values.cols()), {}};
    for (int i = 0; i < u.grid.nodes(); ++i) {
        out.values.col(i) = b.matrices[static_cast<std::size_t>(i)] * u.values.col(i);
    }
    return out;
}

OpNormEstimate estimate_op_norm(const Perturbation& b, const SpectralPartition& partition) {
    const auto n = static_cast<Eigen::Index>(partition.size());
    const Grid& grid = b.grid;
    check_shape(b, n, grid);
    OpNormEstimate out;
    if (b.is_zero()) {
        out.converged = true;
        return out;
    }
    const int nodes = grid.nodes();
    const double h = grid.h();
    Eigen::VectorXd mass = Eigen::VectorXd::Constant(nodes, h);
    mass(0) = mass(nodes - 1) = 0.5 * h;

    // G1 per mode: tridiagonal stiffness / h plus w^2 times lumped mass.
    std::vector<Eigen::VectorXd> g1_diag(static_cast<std::size_t>(n));
    const Eigen::VectorXd g1_off = Eigen::VectorXd::Constant(nodes - 1, -1.0 / h);
    for (Eigen::Index a = 0; a < n; ++a) {
        const double w = partition.weight(static_cast<std::size_t>(a));
        Eigen::VectorXd d = Eigen::VectorXd::Constant(nodes, 2.0 / h);
        d(0) = d(nodes - 1) = 1.0 / h;
        d += w * w * mass;
        g1_diag[static_cast<std::size_t>(a)] = d;
    }
    std::vector<Eigen::MatrixXd> btb(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i) {
        const auto& bi = b.matrices[static_cast<std::size_t>(i)];
        btb[static_cast<std::size_t>(i)] = mass(i) * bi.transpose() * bi;
    }

    using Vec = Eigen::VectorXd;
    auto as_matrix = [n, nodes](const Vec& v) { return Eigen::Map<const Eigen::MatrixXd>(v.data(), n, nodes); };
    auto apply_g1 = [&](const Vec& v) {
        const auto m = as_matrix(v);
        Eigen::MatrixXd out_m(n, nodes);
        for (Eigen::Index a = 0; a < n; ++a) {
            const Eigen::VectorXd& d = g1_diag[static_cast<std::size_t>(a)];
            for (int i = 0; i < nodes; ++i) {
                double s = d(i) * m(a, i);
                if (i > 0) s += g1_off(i - 1) * m(a, i - 1);
                if (i + 1 < nodes) s += g1_off(i) * m(a, i + 1);
                out_m(a, i) = s;
            }
        }
        return Vec(Eigen::Map<const Vec>(out_m.data(), out_m.size()));
    };
    std::function<Vec(const Vec&)> op = [&](const Vec& v) {
        const auto m = as_matrix(v);
        Eigen::MatrixXd rhs(n, nodes);
        for (int i = 0; i < nodes; ++i) rhs.col(i) = btb[static_cast<std::size_t>(i)] * m.col(i);
        Eigen::MatrixXd sol(n, nodes);
        for (Eigen::Index a = 0; a < n; ++a) {
            sol.row(a) = solve_tridiagonal(g1_diag[static_cast<std::size_t>(a)], g1_off,
                                           rhs.row(a).transpose())
                             .transpose();
        }
        return Vec(Eigen::Map<const Vec>(sol.data(), sol.size()));
    };
    std::function<double(const Vec&, const Vec&)> inner = [&](const Vec& x, const Vec& y) {
        return x.dot(apply_g1(y));
    };

    std::mt19937_64 rng(0x5eedULL);
    std::uniform_real_distribution<double> dist(0.5, 1.5);
    Vec start(n * nodes);
    for (Eigen::Index j = 0; j < start.size(); ++j) start(j) = dist(rng);

    const auto result = power_iteration<double>(op, inner, start, 1e-6, 500);
    out.raw = std::sqrt(std::max(0.0, result.value));
    out.value = out.raw * kOpNormSafety;
    out.iterations = result.iterations;
    out.converged = result.converged;
    return out;
}

IterationReport solve_perturbed(const ModelProblem& problem, const Perturbation& b, double tol,
                                int max_iter) {
    if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tol must be positive");
    if (max_iter < 1) throw Error(ErrorKind::InvalidArgument, "max_iter must be positive");
    const SpectralPartition& part = problem.bc.partition;
    check_shape(b, static_cast<Eigen::Index>(part.size()), problem.f.grid);

    IterationReport report;
    report.c4 = constant_c4_for(part, problem.bc.k_bound);
    report.op_norm = estimate_op_norm(b, part);
    report.adjoint_op_norm = estimate_op_norm(transpose(b), part);
    const double q = report.c4 * report.op_norm.value;
    if (q >= 1.0) {
        throw Error(ErrorKind::NotContraction,
                    "c4 * ||B|| = " + std::to_string(q) + " is not below 1");
    }

    const double data = std::sqrt(l2_norm_sq(problem.f)) +
                        hs_norm(part, problem.bc.sigma, 0.5);
    report.bound = report.c4 / (1.0 - q) * data;

    if (b.is_zero()) {
        SolveReport direct = solve_model(problem);
        report.u = std::move(direct.u);
        report.iterations = 1;
        report.converged = true;
        report.bc_residual = std::max(direct.bc_residual_left, direct.bc_residual_right);
        report.residual_l2 = 0.0;
        report.h1_norm = std::sqrt(direct.h1_norm_sq);
        return report;
    }

    CylinderField previous =
        solve_model(ModelProblem{zero_field(part.size(), problem.f.grid), problem.bc}).u;
    SolveReport current;
    for (int k = 1; k <= max_iter; ++k) {
        CylinderField source = problem.f;
        source.derivs.resize(0, 0);
        source.values -= apply(b, previous).values;
        current = solve_model(ModelProblem{source, problem.bc});

        CylinderField diff{current.u.grid, current.u.values - previous.values,
                           current.u.derivs - previous.derivs};
        const double step = std::sqrt(h1_star_norm_sq(part, diff));
        if (!report.step_norms.empty() && report.step_norms.back() > 0.0) {
            report.contraction_ratios.push_back(step / report.step_norms.back());
        }
        report.step_norms.push_back(step);
        report.iterations = k;
        previous = current.u;
        if (step < tol) {
            report.converged = true;
            break;
        }
    }
    if (!report.converged) {
        throw Error(ErrorKind::MaxIterations,
                    "no convergence after " + std::to_string(max_iter) + " iterations");
    }

    report.u = previous;
    report.bc_residual = std::max(current.bc_residual_left, current.bc_residual_right);
    // u' + A u + B u - f at the nodes, with u' from the last model solve.
    CylinderField residual{report.u.grid, report.u.derivs + apply(b, report.u).values -
                                              problem.f.values, {}};
    for (std::size_t pos = 0; pos < part.size(); ++pos) {
        residual.values.row(static_cast<Eigen::Index>(pos)) +=
            part.lambda(pos) * report.u.values.row(static_cast<Eigen::Index>(pos));
    }
    report.residual_l2 = std::sqrt(l2_norm_sq(residual));
    report.h1_norm = std::sqrt(h1_star_norm_sq(part, report.u));
    return report;
}

} // namespace dbvp
