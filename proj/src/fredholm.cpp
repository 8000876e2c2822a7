#include "dirac_bvp/fredholm.hpp"

#include "dirac_bvp/error.hpp"
#include "dirac_bvp/linalg.hpp"
#include "dirac_bvp/mode_ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dbvp {

namespace {

std::vector<CellWeights> mode_weights(const SpectralPartition& part, double h) {
    std::vector<CellWeights> w;
    w.reserve(part.size());
    for (std::size_t a = 0; a < part.size(); ++a) w.push_back(cell_weights(part.lambda(a), h));
    return w;
}

} // namespace

DiscreteSystem assemble(const GraphBoundaryCondition& bc, const Perturbation* b, int cells,
                        bool degenerate) {
    if (cells < 2) throw Error(ErrorKind::InvalidArgument, "assemble needs M >= 2 cells");
    const SpectralPartition& part = bc.partition;
    DiscreteSystem sys;
    sys.bc = bc;
    sys.grid = make_grid(part.delta(), cells);
    sys.degenerate = degenerate;
    const Eigen::Index n = sys.modes();
    if (b != nullptr) {
        if (b->grid.cells != cells || static_cast<Eigen::Index>(b->matrices.size()) != cells + 1) {
            throw Error(ErrorKind::PartitionMismatch, "perturbation grid does not match M");
        }
        for (const auto& m : b->matrices) {
            if (m.rows() != n || m.cols() != n) {
                throw Error(ErrorKind::PartitionMismatch, "perturbation matrix has wrong size");
            }
        }
        sys.perturbation = *b;
    }

    const double h = sys.grid.h();
    const auto w = mode_weights(part, h);
    const Eigen::Index size = n * (cells + 1);
    sys.matrix = Eigen::MatrixXd::Zero(size, size);
    Eigen::MatrixXd& m = sys.matrix;

    for (int i = 0; i < cells; ++i) {
        for (Eigen::Index a = 0; a < n; ++a) {
            const Eigen::Index row = i * n + a;
            const CellWeights& wa = w[static_cast<std::size_t>(a)];
            m(row, i * n + a) -= wa.decay / h;
            m(row, (i + 1) * n + a) += 1.0 / h;
            if (b != nullptr) {
                const auto& bl = b->matrices[static_cast<std::size_t>(i)];
                const auto& br = b->matrices[static_cast<std::size_t>(i + 1)];
                for (Eigen::Index c = 0; c < n; ++c) {
                    m(row, i * n + c) += wa.w_left * bl(a, c);
                    m(row, (i + 1) * n + c) += wa.w_right * br(a, c);
                }
            }
        }
    }

    const double scale = 1.0 / std::sqrt(h);
    const auto& p = part.p_set();
    const auto& q = part.complement_set();
    Eigen::Index row = sys.cell_rows();
    for (std::size_t j = 0; j < p.size(); ++j, ++row) {
        if (degenerate) continue;
        m(row, static_cast<Eigen::Index>(p[j])) = scale;
        for (std::size_t l = 0; l < q.size(); ++l) {
            m(row, static_cast<Eigen::Index>(q[l])) =
                -scale * bc.K(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l));
        }
    }
    for (std::size_t l = 0; l < q.size(); ++l, ++row) {
        m(row, cells * n + static_cast<Eigen::Index>(q[l])) = scale;
    }
    return sys;
}

Eigen::VectorXd DiscreteSystem::rhs(const CylinderField& f, const BoundaryField& sigma) const {
    const Eigen::Index n = modes();
    if (f.values.rows() != n || f.values.cols() != grid.nodes() || sigma.coeffs.size() != n) {
        throw Error(ErrorKind::PartitionMismatch, "data does not match the discrete system");
    }
    const double h = grid.h();
    const auto w = mode_weights(bc.partition, h);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(matrix.rows());
    for (int i = 0; i < grid.cells; ++i) {
        for (Eigen::Index a = 0; a < n; ++a) {
            const CellWeights& wa = w[static_cast<std::size_t>(a)];
            d(i * n + a) = wa.w_left * f.values(a, i) + wa.w_right * f.values(a, i + 1);
        }
    }
    if (!degenerate) {
        const auto& p = bc.partition.p_set();
        for (std::size_t j = 0; j < p.size(); ++j) {
            d(cell_rows() + static_cast<Eigen::Index>(j)) =
                sigma.coeffs(static_cast<Eigen::Index>(p[j])) / std::sqrt(h);
        }
    }
    return d;
}

Eigen::VectorXd DiscreteSystem::pack(const CylinderField& u) const {
    if (u.values.rows() != modes() || u.values.cols() != grid.nodes()) {
        throw Error(ErrorKind::PartitionMismatch, "field does not match the discrete system");
    }
    return Eigen::Map<const Eigen::VectorXd>(u.values.data(), u.values.size());
}

CylinderField DiscreteSystem::unpack(const Eigen::VectorXd& x) const {
    if (x.size() != matrix.cols()) {
        throw Error(ErrorKind::PartitionMismatch, "vector does not match the discrete system");
    }
    CylinderField u{grid, Eigen::Map<const Eigen::MatrixXd>(x.data(), modes(), grid.nodes()), {}};
    return u;
}

KernelPair kernel_and_cokernel(const DiscreteSystem& sys, double rel_cutoff) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(sys.matrix, Eigen::ComputeFullU | Eigen::ComputeFullV);
    KernelPair out;
    out.singular_values = svd.singularValues();
    const Eigen::VectorXd& s = out.singular_values;
    const Eigen::Index size = s.size();
    const double cutoff = size > 0 ? rel_cutoff * s(0) : 0.0;
    Eigen::Index rank = 0;
    while (rank < size && s(rank) > cutoff) ++rank;

    auto fill = [&](KernelBasis& kb, const Eigen::MatrixXd& vectors) {
        kb.vectors = vectors;
        kb.tol_used = rel_cutoff;
        kb.smallest_kept = rank > 0 ? s(rank - 1) : 0.0;
        kb.largest_dropped = rank < size ? s(rank) : -1.0;
    };
    fill(out.kernel, svd.matrixV().rightCols(sys.matrix.cols() - rank));
    fill(out.cokernel, svd.matrixU().rightCols(sys.matrix.rows() - rank));
    return out;
}

AdjointTraces adjoint_traces(const DiscreteSystem& sys, const KernelBasis& cokernel) {
    const Eigen::Index n = sys.modes();
    const int cells = sys.grid.cells;
    const double h = sys.grid.h();
    const auto w = mode_weights(sys.bc.partition, h);
    const Eigen::Index dim = cokernel.dim();
    AdjointTraces out;
    out.phi0 = Eigen::MatrixXd::Zero(n, dim);
    out.phi_delta = Eigen::MatrixXd::Zero(n, dim);

    for (Eigen::Index c = 0; c < dim; ++c) {
        const Eigen::VectorXd& y = cokernel.vectors.col(c);
        const Eigen::VectorXd first = y.segment(0, n);
        const Eigen::VectorXd last = y.segment((cells - 1) * n, n);
        Eigen::VectorXd wl_first(n), wr_last(n);
        for (Eigen::Index a = 0; a < n; ++a) {
            const CellWeights& wa = w[static_cast<std::size_t>(a)];
            out.phi0(a, c) = wa.decay * first(a) / h;
            out.phi_delta(a, c) = last(a) / h;
            wl_first(a) = wa.w_left * first(a);
            wr_last(a) = wa.w_right * last(a);
        }
        if (sys.perturbation) {
            out.phi0.col(c) -= sys.perturbation->matrices.front().transpose() * wl_first;
            out.phi_delta.col(c) += sys.perturbation->matrices.back().transpose() * wr_last;
        }
    }

    const auto& p = sys.bc.partition.p_set();
    const auto& q = sys.bc.partition.complement_set();
    for (Eigen::Index c = 0; c < dim; ++c) {
        for (std::size_t l = 0; l < q.size(); ++l) {
            double r = out.phi0(static_cast<Eigen::Index>(q[l]), c);
            if (!sys.degenerate) {
                for (std::size_t j = 0; j < p.size(); ++j) {
                    r += sys.bc.K(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) *
                         out.phi0(static_cast<Eigen::Index>(p[j]), c);
                }
            }
            out.left_residual = std::max(out.left_residual, std::abs(r) * h);
        }
        for (std::size_t pos : p) {
            out.right_residual = std::max(
                out.right_residual, std::abs(out.phi_delta(static_cast<Eigen::Index>(pos), c)) * h);
        }
    }
    return out;
}

double adjoint_propagation_residual(const DiscreteSystem& sys, const KernelBasis& cokernel) {
    if (sys.perturbation && !sys.perturbation->is_zero()) {
        throw Error(ErrorKind::InvalidArgument, "propagation check needs B = 0");
    }
    const Eigen::Index n = sys.modes();
    const double h = sys.grid.h();
    double worst = 0.0;
    for (Eigen::Index c = 0; c < cokernel.dim(); ++c) {
        const Eigen::VectorXd& y = cokernel.vectors.col(c);
        const double scale = y.head(sys.cell_rows()).cwiseAbs().maxCoeff();
        // Vectors living on the boundary rows only have nothing to propagate.
        if (scale <= 1e-10 * y.cwiseAbs().maxCoeff()) continue;
        for (int i = 1; i < sys.grid.cells; ++i) {
            for (Eigen::Index a = 0; a < n; ++a) {
                const double growth = std::exp(sys.bc.partition.lambda(static_cast<std::size_t>(a)) * h);
                const double r = y(i * n + a) - growth * y((i - 1) * n + a);
                worst = std::max(worst, std::abs(r) / scale);
            }
        }
    }
    return worst;
}

double transpose_propagator_residual(const DiscreteSystem& sys) {
    if (sys.perturbation && !sys.perturbation->is_zero()) {
        throw Error(ErrorKind::InvalidArgument, "propagation check needs B = 0");
    }
    const Eigen::Index n = sys.modes();
    const int cells = sys.grid.cells;
    double worst = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
        const double lambda = sys.bc.partition.lambda(static_cast<std::size_t>(a));
        Eigen::VectorXd psi = Eigen::VectorXd::Zero(sys.matrix.rows());
        double scale = 0.0;
        for (int i = 0; i < cells; ++i) {
            psi(i * n + a) = std::exp(lambda * (sys.grid.x(i) - sys.grid.delta));
            scale = std::max(scale, psi(i * n + a));
        }
        const Eigen::VectorXd image = sys.matrix.transpose() * psi;
        // Interior node columns, scaled by the 1 / h of the cell rows.
        for (int j = 1; j < cells; ++j) {
            worst = std::max(worst, std::abs(image(j * n + a)) * sys.grid.h() / scale);
        }
    }
    return worst;
}

SolvabilityReport solvability_check(const DiscreteSystem& sys, const KernelBasis& cokernel,
                                    const Eigen::VectorXd& data) {
    if (data.size() != sys.matrix.rows()) {
        throw Error(ErrorKind::PartitionMismatch, "data vector does not match the system");
    }
    SolvabilityReport out;
    out.data_norm = data.norm();
    out.residual_against_cokernel =
        cokernel.dim() > 0 ? (cokernel.vectors.transpose() * data).norm() : 0.0;
    out.solvable = out.residual_against_cokernel <= 1e-6 * out.data_norm;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.matrix);
    const Eigen::VectorXd x = qr.solve(data);
    out.lsq_residual = (sys.matrix * x - data).norm() / std::max(1.0, out.data_norm);
    out.lsq_consistent = out.lsq_residual <= 1e-8;
    if (out.solvable) out.solution = x;
    return out;
}

SplittingReport splitting_check(const std::vector<bool>& in_p, const Eigen::MatrixXd& k) {
    const auto n = static_cast<Eigen::Index>(in_p.size());
    if (k.rows() != n || k.cols() != n) {
        throw Error(ErrorKind::InvalidArgument, "K must be N x N");
    }
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) {
            if (k(r, c) != 0.0 && (!in_p[r] || in_p[c])) {
                throw Error(ErrorKind::KNotOffBlock, "K(" + std::to_string(r) + ", " +
                                                         std::to_string(c) +
                                                         ") lies outside the (P, 1 - P) block");
            }
        }
    }
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a) p(a, a) = in_p[a] ? 1.0 : 0.0;
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd q1 = p - k * (id - p);
    const Eigen::MatrixXd q2 = id - p + k.transpose() * p;

    SplittingReport out;
    out.n = n;
    out.idempotence_q1 = n > 0 ? (q1 * q1 - q1).cwiseAbs().maxCoeff() : 0.0;
    out.idempotence_q2 = n > 0 ? (q2 * q2 - q2).cwiseAbs().maxCoeff() : 0.0;
    out.ker_q1 = null_space(q1, 1e-10);
    out.ker_q2 = null_space(q2, 1e-10);
    out.dim_ker_q1 = out.ker_q1.cols();
    out.dim_ker_q2 = out.ker_q2.cols();
    if (out.dim_ker_q1 > 0 && out.dim_ker_q2 > 0) {
        out.orthogonality = (out.ker_q1.transpose() * out.ker_q2).cwiseAbs().maxCoeff();
    }
    return out;
}

} // namespace dbvp
