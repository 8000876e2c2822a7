#include "dirac_bvp/poincare.hpp"

#include "dirac_bvp/error.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace dbvp {

namespace {

constexpr double kPi = 3.14159265358979323846;

// 4-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 4> kGaussX = {-0.8611363115940526, -0.3399810435848563,
                                           0.3399810435848563, 0.8611363115940526};
constexpr std::array<double, 4> kGaussW = {0.3478548451374538, 0.6521451548625461,
                                           0.6521451548625461, 0.3478548451374538};

double stiffness_weight(const RayleighProblem& p, double r) {
    return p.kind == RayleighKind::Hardy ? std::pow(r, p.n - 1) : std::pow(r, 2 - p.n);
}

double mass_weight(const RayleighProblem& p, double r) {
    return p.kind == RayleighKind::Hardy ? std::pow(r, p.n - 3) : std::pow(r, -p.n);
}

// Coefficient c of the boundary term c x^{1-n} f(x)^2 that makes the end Neumann
// after the log substitution; the sign accounts for the end.
double log_neumann_term(const RayleighProblem& p, double x, bool right_end) {
    const double half = p.kind == RayleighKind::Hardy ? -(p.n - 2) / 2.0 : (p.n - 1) / 2.0;
    const double scale = p.kind == RayleighKind::Hardy ? std::pow(x, p.n - 2) : std::pow(x, 1 - p.n);
    return (right_end ? half : -half) * scale;
}

} // namespace

double RayleighProblem::log_length() const { return std::log(right / left); }

RayleighProblem hardy_problem(int n, double log_ratio, int points) {
    RayleighProblem p;
    p.kind = RayleighKind::Hardy;
    p.n = n;
    p.left = 1.0;
    p.right = std::exp(log_ratio);
    p.points = points;
    return p;
}

RayleighProblem mckean_problem(int n, double log_ratio, int points, EndCondition right_bc) {
    RayleighProblem p;
    p.kind = RayleighKind::McKean;
    p.n = n;
    p.left = std::exp(-log_ratio);
    p.right = 1.0;
    p.points = points;
    p.left_bc = EndCondition::Dirichlet;
    p.right_bc = right_bc;
    return p;
}

RayleighPencil assemble_rayleigh(const RayleighProblem& p) {
    if (p.points < 16) {
        throw Error(ErrorKind::GridTooCoarse, "need at least 16 grid points, got " + std::to_string(p.points));
    }
    if (!(p.left > 0.0) || !(p.right > p.left)) {
        throw Error(ErrorKind::InvalidArgument, "domain must satisfy 0 < left < right");
    }
    if ((p.kind == RayleighKind::Hardy && p.n < 3) || (p.kind == RayleighKind::McKean && p.n < 2)) {
        throw Error(ErrorKind::InvalidArgument, "dimension too small for this weight");
    }
    const int m = p.points;
    RayleighPencil out;
    out.nodes.resize(m);
    const double log_len = p.log_length();
    for (int i = 0; i < m; ++i) out.nodes(i) = p.left * std::exp(log_len * i / (m - 1));
    out.nodes(m - 1) = p.right;

    Eigen::VectorXd kd = Eigen::VectorXd::Zero(m), ko = Eigen::VectorXd::Zero(m - 1);
    Eigen::VectorXd md = Eigen::VectorXd::Zero(m), mo = Eigen::VectorXd::Zero(m - 1);
    for (int e = 0; e + 1 < m; ++e) {
        const double a = out.nodes(e), b = out.nodes(e + 1);
        const double len = b - a;
        double ks = 0.0, m00 = 0.0, m01 = 0.0, m11 = 0.0;
        for (std::size_t g = 0; g < kGaussX.size(); ++g) {
            const double t = 0.5 * (kGaussX[g] + 1.0);
            const double r = a + t * len;
            const double w = 0.5 * len * kGaussW[g];
            ks += w * stiffness_weight(p, r);
            const double mw = w * mass_weight(p, r);
            m00 += mw * (1.0 - t) * (1.0 - t);
            m01 += mw * (1.0 - t) * t;
            m11 += mw * t * t;
        }
        ks /= len * len;
        kd(e) += ks;
        kd(e + 1) += ks;
        ko(e) -= ks;
        md(e) += m00;
        md(e + 1) += m11;
        mo(e) += m01;
    }
    if (p.left_bc == EndCondition::LogNeumann) kd(0) -= log_neumann_term(p, p.left, false);
    if (p.right_bc == EndCondition::LogNeumann) kd(m - 1) -= log_neumann_term(p, p.right, true);

    const int first = p.left_bc == EndCondition::Dirichlet ? 1 : 0;
    const int last = p.right_bc == EndCondition::Dirichlet ? m - 2 : m - 1;
    const int free = last - first + 1;
    out.stiff_diag = kd.segment(first, free);
    out.mass_diag = md.segment(first, free);
    out.stiff_off = ko.segment(first, free - 1);
    out.mass_off = mo.segment(first, free - 1);
    return out;
}

namespace {

// Number of eigenvalues of the pencil below mu: negative pivots of K - mu M.
int count_below(const RayleighPencil& pc, double mu) {
    const Eigen::Index n = pc.stiff_diag.size();
    int negatives = 0;
    double d = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double t = pc.stiff_diag(i) - mu * pc.mass_diag(i);
        if (i > 0) {
            const double off = pc.stiff_off(i - 1) - mu * pc.mass_off(i - 1);
            t -= off * off / d;
        }
        if (t == 0.0) t = -std::numeric_limits<double>::min();
        if (t < 0.0) ++negatives;
        d = t;
    }
    return negatives;
}

} // namespace

double smallest_pencil_eigenvalue(const RayleighPencil& pc, double rel_tol) {
    const Eigen::Index n = pc.stiff_diag.size();
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "empty pencil");
    // Rayleigh quotient of the constant vector bounds the minimum from above.
    double num = pc.stiff_diag.sum() + 2.0 * pc.stiff_off.sum();
    double den = pc.mass_diag.sum() + 2.0 * pc.mass_off.sum();
    double hi = num / den;
    double lo = std::min(0.0, hi);
    double step = std::max(1.0, std::abs(hi));
    while (count_below(pc, lo) > 0) {
        lo -= step;
        step *= 2.0;
    }
    while (count_below(pc, hi) == 0) hi += std::max(1.0, std::abs(hi));
    while (hi - lo > rel_tol * std::max(std::abs(hi), std::numeric_limits<double>::min())) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (count_below(pc, mid) > 0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double hardy_rayleigh_min(const RayleighProblem& p) {
    if (p.kind != RayleighKind::Hardy) throw Error(ErrorKind::InvalidArgument, "expected a hardy problem");
    if (p.left_bc != EndCondition::Dirichlet || p.right_bc != EndCondition::Dirichlet) {
        throw Error(ErrorKind::InvalidArgument, "hardy problem needs Dirichlet ends");
    }
    return smallest_pencil_eigenvalue(assemble_rayleigh(p));
}

double mckean_rayleigh_min(const RayleighProblem& p) {
    if (p.kind != RayleighKind::McKean) throw Error(ErrorKind::InvalidArgument, "expected a mckean problem");
    if (p.left_bc != EndCondition::Dirichlet) {
        throw Error(ErrorKind::InvalidArgument, "mckean problem needs f = 0 at the inner end");
    }
    if (p.right_bc == EndCondition::Dirichlet) {
        throw Error(ErrorKind::InvalidArgument, "mckean problem is free at the outer end");
    }
    return smallest_pencil_eigenvalue(assemble_rayleigh(p));
}

WeightFloor weight_floor(RayleighKind kind, int n) {
    if (kind == RayleighKind::Hardy) return WeightFloor{(n - 2) * (n - 2) / 4.0, -2};
    return WeightFloor{(n - 1) * (n - 1) / 4.0, 0};
}

double log_substitution_value(const RayleighProblem& p) {
    const double floor = weight_floor(p.kind, p.n).coefficient;
    const double len = p.log_length();
    if (p.left_bc != EndCondition::Dirichlet) {
        throw Error(ErrorKind::InvalidArgument, "closed form needs a Dirichlet left end");
    }
    if (p.right_bc == EndCondition::Dirichlet) return floor + (kPi / len) * (kPi / len);
    if (p.right_bc == EndCondition::LogNeumann) return floor + std::pow(kPi / (2.0 * len), 2);
    if (p.kind != RayleighKind::McKean) {
        throw Error(ErrorKind::InvalidArgument, "natural outer end has no closed form for hardy");
    }
    // Robin end phi' + beta phi = 0: root of w cos(w L) + beta sin(w L) in (pi/2L, pi/L).
    const double beta = (p.n - 1) / 2.0;
    double lo = kPi / (2.0 * len), hi = kPi / len;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double g = mid * std::cos(mid * len) + beta * std::sin(mid * len);
        (g > 0.0 ? lo : hi) = mid;
    }
    const double w = 0.5 * (lo + hi);
    return floor + w * w;
}

} // namespace dbvp
