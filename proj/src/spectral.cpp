#include "dirac_bvp/spectral.hpp"

#include "dirac_bvp/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace dbvp {

namespace {

constexpr double kCutoffCollision = 1e-12;

void sort_modes(std::vector<EigenMode>& modes) {
    std::sort(modes.begin(), modes.end(), [](const EigenMode& a, const EigenMode& b) {
        if (a.lambda != b.lambda) return a.lambda < b.lambda;
        return a.index < b.index;
    });
}

} // namespace

Eigendecomposition eigendecompose_symmetric(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) {
        throw Error(ErrorKind::NotSymmetric, "matrix is not square");
    }
    const double scale = a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
    const double asym = a.size() == 0 ? 0.0 : (a - a.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale) {
        throw Error(ErrorKind::NotSymmetric,
                    "asymmetry " + std::to_string(asym) + " exceeds tolerance");
    }

    Eigendecomposition out;
    const Eigen::Index n = a.rows();
    if (n == 0) return out;

    const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    // Eigen returns ascending eigenvalues; labels follow that order.
    out.modes.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        out.modes[j] = EigenMode{static_cast<int>(j), solver.eigenvalues()(j)};
    }
    out.basis = solver.eigenvectors();

    const Eigen::MatrixXd recon =
        out.basis * solver.eigenvalues().asDiagonal() * out.basis.transpose();
    const double norm = a.norm();
    out.residual = norm > 0.0 ? (a - recon).norm() / norm : (a - recon).norm();
    return out;
}

std::vector<EigenMode> circle_dirac_modes(int n_max, bool antiperiodic) {
    if (n_max < 0) throw Error(ErrorKind::InvalidArgument, "n_max must be >= 0");
    std::vector<EigenMode> modes;
    int label = 0;
    if (antiperiodic) {
        // n + 1/2 for n = -n_max-1 .. n_max
        for (int n = -n_max - 1; n <= n_max; ++n) {
            for (int c = 0; c < 2; ++c) modes.push_back({label++, n + 0.5});
        }
    } else {
        for (int n = -n_max; n <= n_max; ++n) {
            for (int c = 0; c < 2; ++c) modes.push_back({label++, static_cast<double>(n)});
        }
    }
    sort_modes(modes);
    return modes;
}

Eigen::MatrixXd circle_dirac_central_difference(int points) {
    if (points < 3) throw Error(ErrorKind::InvalidArgument, "need at least 3 points");
    const double h = 2.0 * std::numbers::pi / points;
    // J = [[0, -1], [1, 0]]; (J D u)_i = J (u_{i+1} - u_{i-1}) / (2h)
    Eigen::Matrix2d j;
    j << 0.0, -1.0, 1.0, 0.0;
    const Eigen::Index n = 2 * points;
    Eigen::MatrixXd op = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < points; ++i) {
        const int next = (i + 1) % points;
        const int prev = (i + points - 1) % points;
        op.block<2, 2>(2 * i, 2 * next) += j / (2.0 * h);
        op.block<2, 2>(2 * i, 2 * prev) -= j / (2.0 * h);
    }
    return op;
}

Eigendecomposition block_operator(const Eigen::MatrixXd& a) {
    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(m + n, m + n);
    big.topRightCorner(n, m) = a.transpose();
    big.bottomLeftCorner(m, n) = a;
    return eigendecompose_symmetric(big);
}

SpectralPartition SpectralPartition::build(std::vector<EigenMode> modes, double kappa,
                                           double delta,
                                           std::optional<std::vector<int>> lambda_hat) {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) {
        throw Error(ErrorKind::InvalidArgument, "kappa must be positive");
    }
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw Error(ErrorKind::InvalidArgument, "delta must be positive");
    }
    for (const auto& m : modes) {
        if (!std::isfinite(m.lambda)) {
            throw Error(ErrorKind::InvalidArgument, "non-finite eigenvalue");
        }
        if (std::abs(std::abs(m.lambda) - kappa) < kCutoffCollision) {
            throw Error(ErrorKind::CutoffOnEigenvalue,
                        "|lambda| of mode " + std::to_string(m.index) + " equals kappa");
        }
    }
    sort_modes(modes);
    for (std::size_t i = 1; i < modes.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (modes[i].index == modes[j].index) {
                throw Error(ErrorKind::InvalidArgument,
                            "duplicate mode label " + std::to_string(modes[i].index));
            }
        }
    }

    SpectralPartition p;
    p.modes_ = std::move(modes);
    p.kappa_ = kappa;
    p.delta_ = delta;
    const std::size_t n = p.modes_.size();
    p.regions_.resize(n);
    p.hat_.assign(n, false);

    double max_small = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double l = p.modes_[i].lambda;
        if (l >= kappa) {
            p.regions_[i] = Region::Plus;
            p.plus_.push_back(i);
        } else if (l <= -kappa) {
            p.regions_[i] = Region::Minus;
            p.minus_.push_back(i);
        } else {
            p.regions_[i] = Region::Zero;
            p.zero_.push_back(i);
            max_small = std::max(max_small, std::abs(l));
        }
    }
    p.theta0_ = max_small / kappa;

    if (lambda_hat) {
        for (int label : *lambda_hat) {
            const std::size_t pos = p.position_of(label);
            if (p.regions_[pos] != Region::Zero) {
                throw Error(ErrorKind::InvalidArgument,
                            "lambda_hat label " + std::to_string(label) + " is not a small mode");
            }
            p.hat_[pos] = true;
        }
    } else {
        for (std::size_t pos : p.zero_) p.hat_[pos] = p.modes_[pos].lambda >= 0.0;
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (p.hat_[i]) p.hat_set_.push_back(i);
        if (p.in_p(i)) {
            p.p_set_.push_back(i);
        } else {
            p.q_set_.push_back(i);
        }
    }
    return p;
}

double SpectralPartition::weight(std::size_t pos) const {
    return regions_[pos] == Region::Zero ? kappa_ : std::abs(modes_[pos].lambda);
}

double SpectralPartition::sobolev_weight(std::size_t pos, double s) const {
    return std::pow(weight(pos), 2.0 * s);
}

std::size_t SpectralPartition::position_of(int index) const {
    for (std::size_t i = 0; i < modes_.size(); ++i) {
        if (modes_[i].index == index) return i;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown mode label " + std::to_string(index));
}

BoundaryField project(const SpectralPartition& partition, const BoundaryField& field,
                      Projection which) {
    if (static_cast<std::size_t>(field.coeffs.size()) != partition.size()) {
        throw Error(ErrorKind::PartitionMismatch, "field length does not match partition");
    }
    BoundaryField out{Eigen::VectorXd::Zero(field.coeffs.size())};
    for (std::size_t i = 0; i < partition.size(); ++i) {
        const Region r = partition.region(i);
        bool keep = false;
        switch (which) {
            case Projection::Plus: keep = r == Region::Plus; break;
            case Projection::Minus: keep = r == Region::Minus; break;
            case Projection::Zero: keep = r == Region::Zero; break;
            case Projection::Prime: keep = r != Region::Zero; break;
            case Projection::P: keep = partition.in_p(i); break;
            case Projection::OneMinusP: keep = !partition.in_p(i); break;
        }
        if (keep) out.coeffs(i) = field.coeffs(i);
    }
    return out;
}

double hs_norm_sq(const SpectralPartition& partition, const BoundaryField& field, double s) {
    if (s < 0.0) throw Error(ErrorKind::InvalidArgument, "s must be >= 0");
    if (static_cast<std::size_t>(field.coeffs.size()) != partition.size()) {
        throw Error(ErrorKind::PartitionMismatch, "field length does not match partition");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < partition.size(); ++i) {
        sum += partition.sobolev_weight(i, s) * field.coeffs(i) * field.coeffs(i);
    }
    return sum;
}

double hs_norm(const SpectralPartition& partition, const BoundaryField& field, double s) {
    return std::sqrt(hs_norm_sq(partition, field, s));
}

Grid make_grid(double delta, int cells) {
    if (!(delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "delta must be positive");
    if (cells < 1) throw Error(ErrorKind::InvalidArgument, "grid needs at least one cell");
    return Grid{delta, cells};
}

CylinderField zero_field(std::size_t modes, const Grid& grid) {
    CylinderField f;
    f.grid = grid;
    f.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(modes), grid.nodes());
    return f;
}

double trapezoid(const Eigen::Ref<const Eigen::VectorXd>& samples, double h) {
    const Eigen::Index n = samples.size();
    if (n < 2) return 0.0;
    return h * (samples.sum() - 0.5 * (samples(0) + samples(n - 1)));
}

Eigen::MatrixXd finite_difference_derivative(const Eigen::MatrixXd& values, double h) {
    const Eigen::Index n = values.cols();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(values.rows(), n);
    if (n < 2) return d;
    if (n == 2) {
        d.col(0) = (values.col(1) - values.col(0)) / h;
        d.col(1) = d.col(0);
        return d;
    }
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        d.col(i) = (values.col(i + 1) - values.col(i - 1)) / (2.0 * h);
    }
    d.col(0) = (-3.0 * values.col(0) + 4.0 * values.col(1) - values.col(2)) / (2.0 * h);
    d.col(n - 1) =
        (3.0 * values.col(n - 1) - 4.0 * values.col(n - 2) + values.col(n - 3)) / (2.0 * h);
    return d;
}

double l2_norm_sq(const CylinderField& field) {
    const Eigen::VectorXd density = field.values.colwise().squaredNorm().transpose();
    return trapezoid(density, field.grid.h());
}

double h1_star_norm_sq(const SpectralPartition& partition, const CylinderField& field) {
    if (static_cast<std::size_t>(field.values.rows()) != partition.size()) {
        throw Error(ErrorKind::PartitionMismatch, "field mode count does not match partition");
    }
    const Eigen::MatrixXd d = field.has_derivs()
                                  ? field.derivs
                                  : finite_difference_derivative(field.values, field.grid.h());
    Eigen::VectorXd density = d.colwise().squaredNorm().transpose();
    for (std::size_t a = 0; a < partition.size(); ++a) {
        const double w2 = partition.sobolev_weight(a, 1.0);
        density += w2 * field.values.row(static_cast<Eigen::Index>(a)).transpose().cwiseAbs2();
    }
    return trapezoid(density, field.grid.h());
}

BoundaryField trace_at_node(const CylinderField& field, int node) {
    if (node < 0 || node >= field.grid.nodes()) {
        throw Error(ErrorKind::OffGrid, "node index out of range");
    }
    return BoundaryField{field.values.col(node)};
}

BoundaryField trace_at(const CylinderField& field, double x) {
    const double pos = x / field.grid.h();
    const double node = std::round(pos);
    if (std::abs(pos - node) > 1e-9 || node < 0.0 || node > field.grid.cells) {
        throw Error(ErrorKind::OffGrid, "x = " + std::to_string(x) + " is not a grid node");
    }
    return trace_at_node(field, static_cast<int>(node));
}

double trace_constant(double ell) {
    if (!(ell > 0.0)) throw Error(ErrorKind::InvalidArgument, "ell must be positive");
    return (1.0 + std::sqrt(1.0 + ell * ell)) / ell;
}

double extension_constant() { return 2.0 / std::sqrt(3.0); }

CylinderField extend_boundary(const SpectralPartition& partition, const BoundaryField& sigma,
                              const Grid& grid) {
    if (static_cast<std::size_t>(sigma.coeffs.size()) != partition.size()) {
        throw Error(ErrorKind::PartitionMismatch, "sigma length does not match partition");
    }
    CylinderField out = zero_field(partition.size(), grid);
    out.derivs = Eigen::MatrixXd::Zero(out.values.rows(), out.values.cols());
    const double sqrt3 = std::sqrt(3.0);
    for (std::size_t a = 0; a < partition.size(); ++a) {
        const double eta = sqrt3 / partition.weight(a);
        const double s = sigma.coeffs(a);
        const auto row = static_cast<Eigen::Index>(a);
        for (int i = 0; i < grid.nodes(); ++i) {
            const double t = grid.x(i) / eta;
            if (t < 1.0) {
                out.values(row, i) = s * (1.0 - t);
                out.derivs(row, i) = -s / eta;
            } else if (t == 1.0) {
                out.derivs(row, i) = -s / eta;
            }
        }
    }
    return out;
}

double extension_h1_norm_sq(const SpectralPartition& partition, const BoundaryField& sigma) {
    if (static_cast<std::size_t>(sigma.coeffs.size()) != partition.size()) {
        throw Error(ErrorKind::PartitionMismatch, "sigma length does not match partition");
    }
    const double sqrt3 = std::sqrt(3.0);
    double sum = 0.0;
    for (std::size_t a = 0; a < partition.size(); ++a) {
        const double w = partition.weight(a);
        const double eta = sqrt3 / w;
        const double t = std::min(1.0, partition.delta() / eta);
        const double s2 = sigma.coeffs(a) * sigma.coeffs(a);
        // int_0^{t eta} (s/eta)^2 + w^2 s^2 (1 - x/eta)^2 dx
        const double slope_part = s2 * t / eta;
        const double value_part = w * w * s2 * eta * (1.0 - std::pow(1.0 - t, 3)) / 3.0;
        sum += slope_part + value_part;
    }
    return sum;
}

} // namespace dbvp
