#include "dirac_bvp/bvp_model.hpp"

#include "dirac_bvp/error.hpp"
#include "dirac_bvp/linalg.hpp"
#include "dirac_bvp/mode_ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dbvp {

namespace {

void check_sigma(const SpectralPartition& partition, const BoundaryField& sigma) {
    if (static_cast<std::size_t>(sigma.coeffs.size()) != partition.size()) {
        throw Error(ErrorKind::PartitionMismatch, "sigma length does not match partition");
    }
    for (std::size_t pos : partition.complement_set()) {
        if (sigma.coeffs(static_cast<Eigen::Index>(pos)) != 0.0) {
            throw Error(ErrorKind::SigmaNotInRangeP,
                        "sigma is nonzero on mode " +
                            std::to_string(partition.modes()[pos].index) + " outside P");
        }
    }
}

} // namespace

double coupling_bound(const SpectralPartition& partition, const Eigen::MatrixXd& K) {
    const auto& p = partition.p_set();
    const auto& q = partition.complement_set();
    if (K.rows() != static_cast<Eigen::Index>(p.size()) ||
        K.cols() != static_cast<Eigen::Index>(q.size())) {
        throw Error(ErrorKind::PartitionMismatch, "K must be |P| x |1-P|");
    }
    if (K.size() == 0) return 0.0;
    Eigen::MatrixXd weighted = K;
    for (std::size_t j = 0; j < p.size(); ++j) {
        weighted.row(static_cast<Eigen::Index>(j)) *= std::sqrt(partition.weight(p[j]));
    }
    for (std::size_t l = 0; l < q.size(); ++l) {
        weighted.col(static_cast<Eigen::Index>(l)) /= std::sqrt(partition.weight(q[l]));
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(weighted);
    return svd.singularValues()(0);
}

GraphBoundaryCondition make_graph_condition(SpectralPartition partition, Eigen::MatrixXd K,
                                            BoundaryField sigma) {
    check_sigma(partition, sigma);
    const double k = coupling_bound(partition, K);
    return GraphBoundaryCondition{std::move(partition), std::move(K), std::move(sigma), k};
}

GraphBoundaryCondition aps_condition(const SpectralPartition& partition,
                                     const BoundaryField& sigma) {
    const auto rows = static_cast<Eigen::Index>(partition.p_set().size());
    const auto cols = static_cast<Eigen::Index>(partition.complement_set().size());
    return make_graph_condition(partition, Eigen::MatrixXd::Zero(rows, cols), sigma);
}

GraphBoundaryCondition with_sigma(const GraphBoundaryCondition& bc, BoundaryField sigma) {
    check_sigma(bc.partition, sigma);
    GraphBoundaryCondition out = bc;
    out.sigma = std::move(sigma);
    return out;
}

Eigen::MatrixXd coupling_matrix_full(const GraphBoundaryCondition& bc) {
    const auto n = static_cast<Eigen::Index>(bc.partition.size());
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n, n);
    const auto& p = bc.partition.p_set();
    const auto& q = bc.partition.complement_set();
    for (std::size_t j = 0; j < p.size(); ++j) {
        for (std::size_t l = 0; l < q.size(); ++l) {
            full(static_cast<Eigen::Index>(p[j]), static_cast<Eigen::Index>(q[l])) =
                bc.K(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l));
        }
    }
    return full;
}

ChiralCondition chiral_condition(const Eigen::MatrixXd& a, const Eigen::MatrixXd& eps, int sign,
                                 double kappa, double delta) {
    if (sign != 1 && sign != -1) throw Error(ErrorKind::InvalidArgument, "sign must be +1 or -1");
    const Eigen::Index n = a.rows();
    if (a.cols() != n || eps.rows() != n || eps.cols() != n) {
        throw Error(ErrorKind::NotChiral, "A and eps must be square of equal size");
    }
    const double a_scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    if ((eps - eps.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        throw Error(ErrorKind::NotChiral, "eps is not symmetric");
    }
    if ((eps * eps - id).cwiseAbs().maxCoeff() > 1e-10) {
        throw Error(ErrorKind::NotChiral, "eps^2 != 1");
    }
    if ((eps * a + a * eps).cwiseAbs().maxCoeff() > 1e-10 * a_scale) {
        throw Error(ErrorKind::NotChiral, "eps does not anticommute with A");
    }

    const Eigendecomposition eig = eigendecompose_symmetric(a);
    Eigen::MatrixXd basis = eig.basis;
    std::vector<double> lambdas(static_cast<std::size_t>(n));
    std::vector<Eigen::Index> zero_cols;
    for (Eigen::Index j = 0; j < n; ++j) {
        lambdas[j] = eig.modes[j].lambda;
        if (std::abs(lambdas[j]) <= 1e-10 * a_scale) zero_cols.push_back(j);
    }

    // Rotate ker A so that eps is diagonal there; eps preserves ker A.
    std::vector<double> zero_eps(static_cast<std::size_t>(n), 0.0);
    if (!zero_cols.empty()) {
        const auto z = static_cast<Eigen::Index>(zero_cols.size());
        Eigen::MatrixXd zb(n, z);
        for (Eigen::Index c = 0; c < z; ++c) zb.col(c) = basis.col(zero_cols[c]);
        const Eigen::MatrixXd restricted = zb.transpose() * eps * zb;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (restricted + restricted.transpose()));
        const Eigen::MatrixXd rotated = zb * es.eigenvectors();
        for (Eigen::Index c = 0; c < z; ++c) {
            basis.col(zero_cols[c]) = rotated.col(c);
            lambdas[zero_cols[c]] = 0.0;
            zero_eps[zero_cols[c]] = es.eigenvalues()(c) > 0.0 ? 1.0 : -1.0;
        }
    }

    std::vector<EigenMode> modes;
    std::vector<int> hat;
    for (Eigen::Index j = 0; j < n; ++j) {
        modes.push_back(EigenMode{static_cast<int>(j), lambdas[j]});
        const double l = lambdas[j];
        if (std::abs(l) < kappa) {
            const bool zero = l == 0.0;
            if ((!zero && l > 0.0) || (zero && zero_eps[j] == -sign)) hat.push_back(static_cast<int>(j));
        }
    }
    SpectralPartition partition = SpectralPartition::build(modes, kappa, delta, hat);
    // Labels are ascending by eigenvalue with ties ordered by label, so
    // partition position j is basis column j.
    const auto& p = partition.p_set();
    const auto& q = partition.complement_set();
    Eigen::MatrixXd K(static_cast<Eigen::Index>(p.size()), static_cast<Eigen::Index>(q.size()));
    for (std::size_t j = 0; j < p.size(); ++j) {
        for (std::size_t l = 0; l < q.size(); ++l) {
            K(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) =
                sign * basis.col(static_cast<Eigen::Index>(p[j])).dot(
                           eps * basis.col(static_cast<Eigen::Index>(q[l])));
        }
    }

    ChiralCondition out;
    out.basis = basis;
    out.bc = make_graph_condition(partition, K, BoundaryField{Eigen::VectorXd::Zero(n)});

    Eigen::MatrixXd graph(n, static_cast<Eigen::Index>(q.size()));
    for (std::size_t l = 0; l < q.size(); ++l) {
        Eigen::VectorXd v = basis.col(static_cast<Eigen::Index>(q[l]));
        for (std::size_t j = 0; j < p.size(); ++j) {
            v += K(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) *
                 basis.col(static_cast<Eigen::Index>(p[j]));
        }
        graph.col(static_cast<Eigen::Index>(l)) = v;
    }
    out.graph_kernel = orthonormal_span(graph);
    out.chiral_kernel = null_space(id - sign * eps, 1e-8);
    if (out.graph_kernel.cols() != out.chiral_kernel.cols()) {
        throw Error(ErrorKind::NotChiral, "graph and chiral kernels differ in dimension");
    }
    out.kernel_distance = subspace_distance(out.graph_kernel, out.chiral_kernel);
    return out;
}

double constant_c2(double ell, double theta0) {
    return theta0 * theta0 + 1.5 * ell * ell * std::exp(2.0 * ell * theta0);
}

double constant_c3(double ell, double theta0) { return ell * std::exp(2.0 * ell * theta0); }

double constant_c4(double ell, double theta0, double k) {
    if (ell < 0.0 || theta0 < 0.0 || theta0 >= 1.0 || k < 0.0) {
        throw Error(ErrorKind::InvalidArgument, "c4 needs ell >= 0, 0 <= theta0 < 1, k >= 0");
    }
    if (theta0 == 0.0) return std::sqrt(2.0 * std::max(1.0, k * k));
    const double c2 = constant_c2(ell, theta0);
    const double c3 = constant_c3(ell, theta0);
    return std::sqrt(3.0 * c2 + (k * k + 1.0) * (2.0 + 9.0 * c3));
}

double constant_c4_for(const SpectralPartition& partition, double k) {
    if (partition.zero().empty()) return constant_c4(partition.ell(), 0.0, k);
    const double c2 = constant_c2(partition.ell(), partition.theta0());
    const double c3 = constant_c3(partition.ell(), partition.theta0());
    return std::sqrt(3.0 * c2 + (k * k + 1.0) * (2.0 + 9.0 * c3));
}

SolveReport solve_model(const ModelProblem& problem) {
    const GraphBoundaryCondition& bc = problem.bc;
    const SpectralPartition& part = bc.partition;
    const CylinderField& f = problem.f;
    const auto n = static_cast<Eigen::Index>(part.size());
    if (f.values.rows() != n) {
        throw Error(ErrorKind::PartitionMismatch, "source has " + std::to_string(f.values.rows()) +
                                                      " modes, partition has " + std::to_string(n));
    }
    if (std::abs(f.grid.delta - part.delta()) > 1e-12 * part.delta()) {
        throw Error(ErrorKind::PartitionMismatch, "source grid length differs from delta");
    }
    if (f.values.cols() != f.grid.nodes()) {
        throw Error(ErrorKind::PartitionMismatch, "source samples do not match its grid");
    }
    const auto& p = part.p_set();
    const auto& q = part.complement_set();
    if (bc.K.rows() != static_cast<Eigen::Index>(p.size()) ||
        bc.K.cols() != static_cast<Eigen::Index>(q.size()) || bc.sigma.coeffs.size() != n) {
        throw Error(ErrorKind::PartitionMismatch, "boundary condition does not match partition");
    }

    const Grid& grid = f.grid;
    SolveReport report;
    report.u = zero_field(part.size(), grid);
    report.u.derivs = Eigen::MatrixXd::Zero(n, grid.nodes());

    auto store = [&](std::size_t pos, const ModeSolution& sol) {
        const auto row = static_cast<Eigen::Index>(pos);
        report.u.values.row(row) = sol.u.transpose();
        report.u.derivs.row(row) = sol.u_prime.transpose();
    };

    // Modes of 1 - P: anchored at zero on the right.
    Eigen::VectorXd minus_trace(static_cast<Eigen::Index>(q.size()));
    for (std::size_t l = 0; l < q.size(); ++l) {
        const auto row = static_cast<Eigen::Index>(q[l]);
        const ModeSolution sol = solve_to_zero_at_right(part.lambda(q[l]),
                                                        f.values.row(row).transpose(), grid);
        store(q[l], sol);
        minus_trace(static_cast<Eigen::Index>(l)) = sol.u(0);
    }

    // Coupling, then the P modes from the left.
    const Eigen::VectorXd coupled = bc.K * minus_trace;
    for (std::size_t j = 0; j < p.size(); ++j) {
        const auto row = static_cast<Eigen::Index>(p[j]);
        const double u0 = bc.sigma.coeffs(row) + coupled(static_cast<Eigen::Index>(j));
        store(p[j], solve_from_left(part.lambda(p[j]), f.values.row(row).transpose(), u0, grid));
    }

    const Eigen::VectorXd left = report.u.values.col(0);
    const Eigen::VectorXd right = report.u.values.col(grid.cells);
    Eigen::VectorXd q_trace(static_cast<Eigen::Index>(q.size()));
    for (std::size_t l = 0; l < q.size(); ++l) {
        q_trace(static_cast<Eigen::Index>(l)) = left(static_cast<Eigen::Index>(q[l]));
        report.bc_residual_right =
            std::max(report.bc_residual_right, std::abs(right(static_cast<Eigen::Index>(q[l]))));
    }
    const Eigen::VectorXd kq = bc.K * q_trace;
    for (std::size_t j = 0; j < p.size(); ++j) {
        const auto row = static_cast<Eigen::Index>(p[j]);
        const double r = left(row) - bc.sigma.coeffs(row) - kq(static_cast<Eigen::Index>(j));
        report.bc_residual_left = std::max(report.bc_residual_left, std::abs(r));
    }

    report.h1_norm_sq = h1_star_norm_sq(part, report.u);
    report.data_norm_sq = l2_norm_sq(f) + hs_norm_sq(part, bc.sigma, 0.5);
    report.c4 = constant_c4_for(part, bc.k_bound);

    Eigen::VectorXd p0_density = Eigen::VectorXd::Zero(grid.nodes());
    for (std::size_t pos : part.zero()) {
        p0_density += report.u.values.row(static_cast<Eigen::Index>(pos)).transpose().cwiseAbs2();
    }
    report.p0_l2_norm = std::sqrt(trapezoid(p0_density, grid.h()));
    return report;
}

} // namespace dbvp
