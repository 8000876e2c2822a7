#include "dirac_bvp/torus.hpp"

#include "dirac_bvp/error.hpp"
#include "dirac_bvp/linalg.hpp"
#include "dirac_bvp/parallel.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dbvp {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kSphereDirections = 512;

void check_same_lattice(const TorusField& x, const TorusField& y) {
    if (x.dims != y.dims || x.cutoff != y.cutoff || x.components != y.components ||
        x.coeffs.size() != y.coeffs.size()) {
        throw Error(ErrorKind::InvalidArgument, "torus fields live on different lattices");
    }
}

int wrap(int k, int p) { return ((k % p) + p) % p; }

/// In-place unnormalized transform along every axis of a P^dims array:
/// sign -1 is the forward sum e^{-2 pi i k p / P}, +1 its conjugate.
void transform(std::vector<std::complex<double>>& data, int dims, int p, int sign) {
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> line(static_cast<std::size_t>(p)), out;
    auto run_line = [&] {
        if (sign < 0) {
            fft.fwd(out, line);
        } else {
            fft.inv(out, line);
            for (auto& v : out) v *= static_cast<double>(p);
        }
    };
    if (dims == 1) {
        line = data;
        run_line();
        data = out;
        return;
    }
    for (int r = 0; r < p; ++r) {
        for (int c = 0; c < p; ++c) line[static_cast<std::size_t>(c)] = data[static_cast<std::size_t>(r * p + c)];
        run_line();
        for (int c = 0; c < p; ++c) data[static_cast<std::size_t>(r * p + c)] = out[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < p; ++c) {
        for (int r = 0; r < p; ++r) line[static_cast<std::size_t>(r)] = data[static_cast<std::size_t>(r * p + c)];
        run_line();
        for (int r = 0; r < p; ++r) data[static_cast<std::size_t>(r * p + c)] = out[static_cast<std::size_t>(r)];
    }
}

} // namespace

Wavevector TorusField::wavevector(int idx) const {
    if (dims == 1) return {idx - cutoff, 0};
    return {idx / side() - cutoff, idx % side() - cutoff};
}

int TorusField::index_of(const Wavevector& k) const {
    if (dims == 1) return k[0] + cutoff;
    return (k[0] + cutoff) * side() + (k[1] + cutoff);
}

double TorusField::norm_k_sq(int idx) const {
    const Wavevector k = wavevector(idx);
    return static_cast<double>(k[0]) * k[0] + static_cast<double>(k[1]) * k[1];
}

TorusField zero_torus_field(int dims, int cutoff, int components) {
    if (dims != 1 && dims != 2) throw Error(ErrorKind::InvalidArgument, "torus dimension must be 1 or 2");
    if (cutoff < 0 || components < 1) throw Error(ErrorKind::InvalidArgument, "bad torus lattice");
    TorusField f;
    f.dims = dims;
    f.cutoff = cutoff;
    f.components = components;
    f.coeffs.assign(static_cast<std::size_t>(f.lattice_size()), Eigen::VectorXcd::Zero(components));
    return f;
}

TorusField axpy(const TorusField& x, double alpha, const TorusField& y) {
    check_same_lattice(x, y);
    TorusField out = x;
    for (std::size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] += alpha * y.coeffs[i];
    out.real = x.real && y.real;
    return out;
}

double l2_norm_sq(const TorusField& u) {
    double s = 0.0;
    for (const auto& c : u.coeffs) s += c.squaredNorm();
    return s;
}

double h1_norm_sq(const TorusField& u) {
    double s = 0.0;
    for (int i = 0; i < u.lattice_size(); ++i) {
        s += (1.0 + 4.0 * kPi * kPi * u.norm_k_sq(i)) * u.coeffs[static_cast<std::size_t>(i)].squaredNorm();
    }
    return s;
}

double conjugate_symmetry_defect(const TorusField& u) {
    double worst = 0.0;
    for (int i = 0; i < u.lattice_size(); ++i) {
        const Wavevector k = u.wavevector(i);
        const int j = u.index_of({-k[0], -k[1]});
        worst = std::max(worst, (u.coeffs[static_cast<std::size_t>(j)] -
                                 u.coeffs[static_cast<std::size_t>(i)].conjugate())
                                    .cwiseAbs()
                                    .maxCoeff());
    }
    return worst;
}

double ellipticity_constant(const std::vector<Eigen::MatrixXd>& a) {
    if (a.empty() || a.size() > 2) throw Error(ErrorKind::InvalidArgument, "need 1 or 2 coefficient matrices");
    const Eigen::Index n = a.front().rows();
    for (const auto& m : a) {
        if (m.rows() != n || m.cols() != n) {
            throw Error(ErrorKind::InvalidArgument, "coefficient matrices must be square of equal size");
        }
    }
    std::vector<std::array<double, 2>> directions;
    if (a.size() == 1) {
        directions = {{1.0, 0.0}, {-1.0, 0.0}};
    } else {
        for (int j = 0; j < kSphereDirections; ++j) {
            const double t = 2.0 * kPi * j / kSphereDirections;
            directions.push_back({std::cos(t), std::sin(t)});
        }
    }
    double eta = std::numeric_limits<double>::infinity();
    for (const auto& xi : directions) {
        Eigen::MatrixXd m = xi[0] * a[0];
        if (a.size() == 2) m += xi[1] * a[1];
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        const Eigen::VectorXd& s = svd.singularValues();
        const double smax = s(0);
        const double smin = s(s.size() - 1);
        eta = std::min(eta, smax > 0.0 ? std::min(smin, 1.0 / smax) : 0.0);
    }
    if (eta <= 1e-12) throw Error(ErrorKind::Degenerate, "coefficients are not elliptic");
    return eta;
}

ConstantOperator make_constant_operator(std::vector<Eigen::MatrixXd> a0) {
    const double eta = ellipticity_constant(a0);
    return ConstantOperator{std::move(a0), eta};
}

Eigen::MatrixXcd symbol(const ConstantOperator& op, const Wavevector& k, int dims, double shift) {
    const Eigen::Index n = op.a0.front().rows();
    Eigen::MatrixXd ka = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < dims; ++j) ka += static_cast<double>(k[static_cast<std::size_t>(j)]) * op.a0[static_cast<std::size_t>(j)];
    Eigen::MatrixXcd s = std::complex<double>(0.0, 2.0 * kPi) * ka.cast<std::complex<double>>();
    s.diagonal().array() += shift;
    return s;
}

namespace {

void check_operator(const TorusField& f, const ConstantOperator& op) {
    if (static_cast<int>(op.a0.size()) != f.dims) {
        throw Error(ErrorKind::InvalidArgument, "operator has " + std::to_string(op.a0.size()) +
                                                    " coefficients for a " + std::to_string(f.dims) +
                                                    "-torus");
    }
    if (op.a0.front().rows() != f.components) {
        throw Error(ErrorKind::InvalidArgument, "operator size does not match field components");
    }
}

} // namespace

InversionReport invert_constant(const TorusField& f, const ConstantOperator& op) {
    check_operator(f, op);
    const double shift = kPi * op.eta;
    InversionReport report;
    report.u = f;
    const auto count = static_cast<std::size_t>(f.lattice_size());
    std::vector<double> smin(count), cond(count), excess(count);
    std::vector<int> singular(count, 0);
    parallel_for(count, [&](std::size_t i) {
        const Wavevector k = f.wavevector(static_cast<int>(i));
        const Eigen::MatrixXcd s = symbol(op, k, f.dims, shift);
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(s);
        const Eigen::VectorXd& sv = svd.singularValues();
        smin[i] = sv(sv.size() - 1);
        cond[i] = sv(0) / smin[i];
        if (!(smin[i] > 1e-14 * std::max(1.0, sv(0)))) {
            singular[i] = 1;
            return;
        }
        const double knorm = std::sqrt(f.norm_k_sq(static_cast<int>(i)));
        excess[i] = shift * std::max(1.0, 2.0 * knorm - 1.0) - smin[i];
        report.u.coeffs[i] = s.partialPivLu().solve(f.coeffs[i]);
    });
    for (std::size_t i = 0; i < count; ++i) {
        if (singular[i]) throw Error(ErrorKind::SingularSymbol, "symbol is singular at lattice point " + std::to_string(i));
    }
    report.min_singular_value = *std::min_element(smin.begin(), smin.end());
    report.max_condition = *std::max_element(cond.begin(), cond.end());
    report.multiplier_excess = *std::max_element(excess.begin(), excess.end());
    return report;
}

TorusField apply_constant(const TorusField& u, const ConstantOperator& op) {
    check_operator(u, op);
    TorusField out = u;
    for (int i = 0; i < u.lattice_size(); ++i) {
        out.coeffs[static_cast<std::size_t>(i)] =
            symbol(op, u.wavevector(i), u.dims, kPi * op.eta) * u.coeffs[static_cast<std::size_t>(i)];
    }
    return out;
}

VariableOperator::VariableOperator(const CoefficientField& coeffs, const ConstantOperator& op0,
                                   int cutoff, int components, double b_fraction)
    : dims_(coeffs.dims),
      cutoff_(cutoff),
      components_(components),
      padded_((3 * (2 * cutoff + 1) + 1) / 2),
      op0_(op0),
      b_fraction_(b_fraction) {
    if (dims_ != 1 && dims_ != 2) throw Error(ErrorKind::InvalidArgument, "torus dimension must be 1 or 2");
    if (static_cast<int>(op0.a0.size()) != dims_) {
        throw Error(ErrorKind::InvalidArgument, "constant operator dimension mismatch");
    }
    if (b_fraction < 0.0 || b_fraction > 1.0) {
        throw Error(ErrorKind::InvalidArgument, "b_fraction must lie in [0, 1]");
    }
    if (!coeffs.a) throw Error(ErrorKind::InvalidArgument, "coefficient field needs a");
    const int points = dims_ == 1 ? padded_ : padded_ * padded_;
    da_.assign(static_cast<std::size_t>(dims_), std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(points)));
    if (coeffs.b) b_.resize(static_cast<std::size_t>(points));
    for (int p = 0; p < points; ++p) {
        std::array<double, 2> x{};
        if (dims_ == 1) {
            x = {static_cast<double>(p) / padded_, 0.0};
        } else {
            x = {static_cast<double>(p / padded_) / padded_, static_cast<double>(p % padded_) / padded_};
        }
        for (int j = 0; j < dims_; ++j) {
            Eigen::MatrixXd a = coeffs.a(j, x);
            if (a.rows() != components || a.cols() != components) {
                throw Error(ErrorKind::InvalidArgument, "coefficient a has wrong size");
            }
            da_[static_cast<std::size_t>(j)][static_cast<std::size_t>(p)] = a - op0.a0[static_cast<std::size_t>(j)];
        }
        if (coeffs.b) {
            b_[static_cast<std::size_t>(p)] = coeffs.b(x);
            if (b_[static_cast<std::size_t>(p)].rows() != components ||
                b_[static_cast<std::size_t>(p)].cols() != components) {
                throw Error(ErrorKind::InvalidArgument, "coefficient b has wrong size");
            }
        }
    }
}

TorusField VariableOperator::product(const std::vector<std::vector<Eigen::MatrixXd>>& fields,
                                     const std::vector<TorusField>& inputs) const {
    const int p = padded_;
    const auto points = static_cast<std::size_t>(dims_ == 1 ? p : p * p);
    const auto n = static_cast<std::size_t>(components_);
    std::vector<std::vector<std::complex<double>>> acc(n, std::vector<std::complex<double>>(points));
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        const TorusField& u = inputs[t];
        std::vector<std::vector<std::complex<double>>> phys(n, std::vector<std::complex<double>>(points));
        for (std::size_t c = 0; c < n; ++c) {
            for (int i = 0; i < u.lattice_size(); ++i) {
                const Wavevector k = u.wavevector(i);
                const std::size_t slot = dims_ == 1
                                             ? static_cast<std::size_t>(wrap(k[0], p))
                                             : static_cast<std::size_t>(wrap(k[0], p) * p + wrap(k[1], p));
                phys[c][slot] = u.coeffs[static_cast<std::size_t>(i)](static_cast<Eigen::Index>(c));
            }
            transform(phys[c], dims_, p, +1);
        }
        Eigen::VectorXcd v(components_);
        for (std::size_t q = 0; q < points; ++q) {
            for (std::size_t c = 0; c < n; ++c) v(static_cast<Eigen::Index>(c)) = phys[c][q];
            const Eigen::VectorXcd w = fields[t][q].cast<std::complex<double>>() * v;
            for (std::size_t c = 0; c < n; ++c) acc[c][q] += w(static_cast<Eigen::Index>(c));
        }
    }
    TorusField out = zero_torus_field(dims_, cutoff_, components_);
    const double norm = 1.0 / static_cast<double>(points);
    for (std::size_t c = 0; c < n; ++c) {
        transform(acc[c], dims_, p, -1);
        for (int i = 0; i < out.lattice_size(); ++i) {
            const Wavevector k = out.wavevector(i);
            const std::size_t slot = dims_ == 1
                                         ? static_cast<std::size_t>(wrap(k[0], p))
                                         : static_cast<std::size_t>(wrap(k[0], p) * p + wrap(k[1], p));
            out.coeffs[static_cast<std::size_t>(i)](static_cast<Eigen::Index>(c)) = acc[c][slot] * norm;
        }
    }
    return out;
}

namespace {

TorusField derivative(const TorusField& u, int axis) {
    TorusField d = u;
    for (int i = 0; i < u.lattice_size(); ++i) {
        const double k = u.wavevector(i)[static_cast<std::size_t>(axis)];
        d.coeffs[static_cast<std::size_t>(i)] *= std::complex<double>(0.0, 2.0 * kPi * k);
    }
    return d;
}

} // namespace

TorusField VariableOperator::apply_b0(const TorusField& u) const {
    std::vector<std::vector<Eigen::MatrixXd>> fields;
    std::vector<TorusField> inputs;
    for (int j = 0; j < dims_; ++j) {
        fields.push_back(da_[static_cast<std::size_t>(j)]);
        inputs.push_back(derivative(u, j));
    }
    if (!b_.empty() && b_fraction_ > 0.0) {
        std::vector<Eigen::MatrixXd> scaled_b = b_;
        for (auto& m : scaled_b) m *= b_fraction_;
        fields.push_back(std::move(scaled_b));
        inputs.push_back(u);
    }
    return product(fields, inputs);
}

TorusField VariableOperator::apply_b1(const TorusField& u) const {
    if (b_.empty() || b_fraction_ >= 1.0) return zero_torus_field(dims_, cutoff_, components_);
    std::vector<Eigen::MatrixXd> scaled_b = b_;
    for (auto& m : scaled_b) m *= 1.0 - b_fraction_;
    return product({scaled_b}, {u});
}

TorusField VariableOperator::apply_full(const TorusField& u) const {
    return axpy(axpy(apply_constant(u, op0_), 1.0, apply_b0(u)), 1.0, apply_b1(u));
}

Eigen::MatrixXcd VariableOperator::b0_matrix() const {
    const TorusField shape = zero_torus_field(dims_, cutoff_, components_);
    const int lattice = shape.lattice_size();
    const Eigen::Index size = static_cast<Eigen::Index>(lattice) * components_;
    Eigen::MatrixXcd m(size, size);
    parallel_for(static_cast<std::size_t>(size), [&](std::size_t col) {
        TorusField e = shape;
        e.coeffs[col / static_cast<std::size_t>(components_)](
            static_cast<Eigen::Index>(col % static_cast<std::size_t>(components_))) = 1.0;
        const TorusField image = apply_b0(e);
        for (int i = 0; i < lattice; ++i) {
            m.block(static_cast<Eigen::Index>(i) * components_, static_cast<Eigen::Index>(col), components_, 1) =
                image.coeffs[static_cast<std::size_t>(i)];
        }
    });
    return m;
}

namespace {

// Largest singular value of m D^{-1/2}, D the H^1 weights repeated per component.
double weighted_norm(const Eigen::MatrixXcd& m, const TorusField& shape) {
    const Eigen::Index size = m.cols();
    Eigen::VectorXd inv_sqrt_w(size);
    for (int i = 0; i < shape.lattice_size(); ++i) {
        const double w = 1.0 + 4.0 * kPi * kPi * shape.norm_k_sq(i);
        inv_sqrt_w.segment(static_cast<Eigen::Index>(i) * shape.components, shape.components)
            .setConstant(1.0 / std::sqrt(w));
    }
    const Eigen::MatrixXcd x = m * inv_sqrt_w.cast<std::complex<double>>().asDiagonal();
    if (x.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    const Eigen::MatrixXcd normal = x.adjoint() * x;
    using Vec = Eigen::VectorXcd;
    std::function<Vec(const Vec&)> op = [&](const Vec& v) { return Vec(normal * v); };
    std::function<double(const Vec&, const Vec&)> inner = [](const Vec& a, const Vec& b) {
        return a.dot(b).real();
    };
    Vec start(size);
    for (Eigen::Index j = 0; j < size; ++j) {
        start(j) = std::complex<double>(1.0 + 0.37 * std::sin(1.3 * j), 0.21 * std::cos(0.7 * j));
    }
    const auto result = power_iteration<std::complex<double>>(op, inner, start, 1e-12, 5000);
    return std::sqrt(std::max(0.0, result.value));
}

} // namespace

double VariableOperator::b0_norm() const {
    return weighted_norm(b0_matrix(), zero_torus_field(dims_, cutoff_, components_));
}

double VariableOperator::b0_adjoint_norm() const {
    return weighted_norm(b0_matrix().adjoint(), zero_torus_field(dims_, cutoff_, components_));
}

double VariableOperator::b1_sup() const {
    if (b_.empty() || b_fraction_ >= 1.0) return 0.0;
    double worst = 0.0;
    for (const auto& m : b_) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        worst = std::max(worst, svd.singularValues()(0));
    }
    return (1.0 - b_fraction_) * worst;
}

VariableSolveReport solve_variable(const TorusField& f, const CoefficientField& coeffs,
                                   const ConstantOperator& op0, double tol, int max_iter,
                                   double b_fraction, double eta_slack) {
    if (!(tol > 0.0) || max_iter < 1) throw Error(ErrorKind::InvalidArgument, "need tol > 0 and max_iter >= 1");
    if (coeffs.dims != f.dims) throw Error(ErrorKind::InvalidArgument, "coefficient dimension mismatch");
    check_operator(f, op0);
    const VariableOperator op(coeffs, op0, f.cutoff, f.components, b_fraction);
    VariableSolveReport report;
    report.guard = op0.eta / 3.0 * eta_slack;
    report.b0_norm = op.b0_norm();
    if (report.b0_norm > report.guard) {
        throw Error(ErrorKind::PerturbationTooLarge,
                    "||B0|| = " + std::to_string(report.b0_norm) + " exceeds eta/3 = " +
                        std::to_string(report.guard));
    }
    report.b0_adjoint_norm = op.b0_adjoint_norm();

    TorusField u = zero_torus_field(f.dims, f.cutoff, f.components);
    const bool unperturbed = report.b0_norm == 0.0 && op.b1_sup() == 0.0;
    for (int k = 1; k <= max_iter; ++k) {
        const TorusField lagged = unperturbed ? f : axpy(axpy(f, -1.0, op.apply_b0(u)), -1.0, op.apply_b1(u));
        TorusField next = invert_constant(lagged, op0).u;
        const double step = std::sqrt(h1_norm_sq(axpy(next, -1.0, u)));
        if (!report.step_norms.empty() && report.step_norms.back() > 0.0) {
            report.contraction_ratios.push_back(step / report.step_norms.back());
        }
        report.step_norms.push_back(step);
        report.iterations = k;
        u = std::move(next);
        if (unperturbed || step < tol) {
            report.converged = true;
            break;
        }
    }
    if (!report.converged) {
        throw Error(ErrorKind::MaxIterations, "torus iteration did not converge in " +
                                                  std::to_string(max_iter) + " steps");
    }
    u.real = f.real;
    report.residual_l2 = std::sqrt(l2_norm_sq(axpy(op.apply_full(u), -1.0, f)));
    report.h1_norm = std::sqrt(h1_norm_sq(u));
    const double lead = std::sqrt(5.0) / op0.eta;
    const double q = lead * report.b0_norm;
    report.apriori_constant = q < 1.0 ? lead * std::max(1.0, op.b1_sup()) / (1.0 - q)
                                      : std::numeric_limits<double>::infinity();
    report.apriori_rhs = report.apriori_constant * (std::sqrt(l2_norm_sq(f)) + std::sqrt(l2_norm_sq(u)));
    report.u = std::move(u);
    return report;
}

} // namespace dbvp
