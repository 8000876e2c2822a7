#include "dirac_bvp/error.hpp"
#include "dirac_bvp/torus.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <complex>
#include <random>

using namespace dbvp;

namespace {

using cd = std::complex<double>;

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

std::vector<Eigen::MatrixXd> clifford_pair() {
    Eigen::MatrixXd s1(2, 2), s2(2, 2);
    s1 << 1, 0, 0, -1;
    s2 << 0, 1, 1, 0;
    return {s1, s2};
}

cd evaluate(const TorusField& u, double x, int component = 0) {
    cd s = 0.0;
    for (int idx = 0; idx < u.lattice_size(); ++idx) {
        const auto k = u.wavevector(idx);
        s += u.coeffs[static_cast<std::size_t>(idx)](component) * std::exp(cd(0.0, 2.0 * oracle::kPi * k[0] * x));
    }
    return s;
}

TorusField random_field(std::mt19937_64& rng, int dims, int cutoff, int components) {
    TorusField f = zero_torus_field(dims, cutoff, components);
    for (auto& c : f.coeffs) {
        for (int j = 0; j < components; ++j) c(j) = cd(oracle::uniform(rng, -1, 1), oracle::uniform(rng, -1, 1));
    }
    return f;
}

} // namespace

TEST_CASE("ellipticity constant examples") {
    CHECK(ellipticity_constant({scalar(1.0)}) == doctest::Approx(1.0));
    CHECK(ellipticity_constant({scalar(2.0)}) == doctest::Approx(0.5));
    CHECK(ellipticity_constant(clifford_pair()) == doctest::Approx(1.0));
    try {
        ellipticity_constant({Eigen::MatrixXd::Zero(2, 2)});
        FAIL("expected Degenerate");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Degenerate);
    }
}

TEST_CASE("ellipticity inequality on sampled directions and vectors") {
    std::mt19937_64 rng(1001);
    auto pair = clifford_pair();
    pair[0] *= 1.7;
    pair[1] = 0.6 * pair[1] + 0.2 * pair[0];
    const double eta = ellipticity_constant(pair);
    for (int s = 0; s < 1000; ++s) {
        const double t = 2.0 * oracle::kPi * (s % 512) / 512.0;
        const Eigen::Vector2d xi(std::cos(t), std::sin(t));
        const Eigen::VectorXd v = oracle::random_matrix(rng, 2, 1);
        const Eigen::MatrixXd sym = xi(0) * pair[0] + xi(1) * pair[1];
        const double lhs = (sym * v).squaredNorm();
        CHECK(eta * eta * v.squaredNorm() <= lhs * (1 + 1e-10));
        CHECK(lhs <= v.squaredNorm() / (eta * eta) * (1 + 1e-10));
    }
}

TEST_CASE("constant-coefficient inversion examples") {
    const auto op = make_constant_operator({scalar(1.0)});
    CHECK(op.eta == doctest::Approx(1.0));
    TorusField f = zero_torus_field(1, 4, 1);
    f.coeffs[static_cast<std::size_t>(f.index_of({1, 0}))](0) = 1.0;
    const auto rep = invert_constant(f, op);
    const cd u1 = rep.u.coeffs[static_cast<std::size_t>(f.index_of({1, 0}))](0);
    CHECK(std::abs(u1 - 1.0 / cd(oracle::kPi, 2.0 * oracle::kPi)) <= 1e-15);
    CHECK(std::abs(u1) == doctest::Approx(1.0 / (oracle::kPi * std::sqrt(5.0))));
    CHECK(std::sqrt(h1_norm_sq(rep.u)) == doctest::Approx(std::sqrt(1 + 4 * oracle::kPi * oracle::kPi) / (oracle::kPi * std::sqrt(5.0))));
    CHECK(std::sqrt(h1_norm_sq(rep.u)) <= std::sqrt(5.0));

    TorusField f0 = zero_torus_field(1, 4, 1);
    f0.coeffs[static_cast<std::size_t>(f0.index_of({0, 0}))](0) = 2.0;
    CHECK(std::abs(invert_constant(f0, op).u.coeffs[static_cast<std::size_t>(f0.index_of({0, 0}))](0) - 2.0 / oracle::kPi) <= 1e-15);

    const auto zero = invert_constant(zero_torus_field(2, 3, 2), make_constant_operator(clifford_pair()));
    CHECK(l2_norm_sq(zero.u) == 0.0);
}

TEST_CASE("inversion round trip, multiplier bound and the H1 estimate") {
    std::mt19937_64 rng(1002);
    double sup = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const bool two = trial % 2 == 1;
        std::vector<Eigen::MatrixXd> a;
        if (two) {
            const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(oracle::random_matrix(rng, 2, 2)).householderQ();
            const double s = oracle::uniform(rng, 0.5, 2.0);
            for (const auto& m : clifford_pair()) a.push_back(s * q * m * q.transpose());
        } else {
            const Eigen::MatrixXd m = oracle::random_matrix(rng, 3, 3);
            a.push_back(m + m.transpose());
        }
        ConstantOperator op;
        try {
            op = make_constant_operator(a);
        } catch (const Error&) {
            continue;
        }
        const TorusField f = random_field(rng, two ? 2 : 1, 4, static_cast<int>(a[0].rows()));
        const auto rep = invert_constant(f, op);
        CHECK(rep.multiplier_excess <= 1e-9);
        const TorusField back = apply_constant(rep.u, op);
        CHECK(std::sqrt(l2_norm_sq(axpy(back, -1.0, f))) <= 1e-10 * std::sqrt(l2_norm_sq(f)) * std::max(1.0, rep.max_condition));
        const double ratio = std::sqrt(h1_norm_sq(rep.u) / l2_norm_sq(f));
        CHECK(ratio <= std::sqrt(5.0) / op.eta * (1 + 1e-12));
        sup = std::max(sup, ratio * op.eta);
    }
    CHECK(sup >= 0.3);
}

TEST_CASE("pseudo-spectral product") {
    // (a - a0) d_x u for a = 1 + eps sin(2 pi x), u = e^{2 pi i x}:
    // eps sin(2 pi x) 2 pi i e^{2 pi i x} = eps pi (e^{4 pi i x} - 1).
    const double eps = 0.05;
    CoefficientField coeffs;
    coeffs.dims = 1;
    coeffs.a = [eps](int, const std::array<double, 2>& x) { return scalar(1.0 + eps * std::sin(2.0 * oracle::kPi * x[0])); };
    const auto op0 = make_constant_operator({scalar(1.0)});
    const VariableOperator var(coeffs, op0, 6, 1, 0.0);
    TorusField u = zero_torus_field(1, 6, 1);
    u.coeffs[static_cast<std::size_t>(u.index_of({1, 0}))](0) = 1.0;
    const TorusField bu = var.apply_b0(u);
    for (int idx = 0; idx < bu.lattice_size(); ++idx) {
        const int k = bu.wavevector(idx)[0];
        const cd expected = k == 2 ? cd(eps * oracle::kPi) : k == 0 ? cd(-eps * oracle::kPi) : cd(0.0);
        CHECK(std::abs(bu.coeffs[static_cast<std::size_t>(idx)](0) - expected) <= 1e-13);
    }
    CHECK(var.b0_norm() <= eps * 1.05);
    CHECK(var.b0_norm() >= eps * 0.5);
}

TEST_CASE("variable coefficients against the integrating-factor oracle") {
    const double eps = 0.05;
    CoefficientField coeffs;
    coeffs.dims = 1;
    coeffs.a = [eps](int, const std::array<double, 2>& x) { return scalar(1.0 + eps * std::sin(2.0 * oracle::kPi * x[0])); };
    const auto op0 = make_constant_operator({scalar(1.0)});
    TorusField f = zero_torus_field(1, 24, 1);
    f.real = true;
    f.coeffs[static_cast<std::size_t>(f.index_of({1, 0}))](0) = 0.5;
    f.coeffs[static_cast<std::size_t>(f.index_of({-1, 0}))](0) = 0.5;
    const double tol = 1e-12;
    const auto rep = solve_variable(f, coeffs, op0, tol, 200);
    CHECK(rep.converged);
    CHECK(rep.residual_l2 < 10 * tol);
    CHECK(conjugate_symmetry_defect(rep.u) <= 1e-14);
    for (std::size_t k = 1; k < rep.contraction_ratios.size(); ++k) {
        if (rep.step_norms[k] < 1e-11) break;
        CHECK(rep.contraction_ratios[k] <= std::sqrt(5.0) / 3.0 + 0.05);
    }
    CHECK(rep.h1_norm <= rep.apriori_rhs);

    const oracle::PeriodicScalarSolution exact(
        [eps](double x) { return 1.0 + eps * std::sin(2.0 * oracle::kPi * x); }, oracle::kPi,
        [](double x) { return std::cos(2.0 * oracle::kPi * x); });
    for (double x : {0.0, 0.13, 0.37, 0.5, 0.81}) {
        const cd v = evaluate(rep.u, x);
        CHECK(std::abs(v.imag()) <= 1e-13);
        CHECK(std::abs(v.real() - exact(x)) <= 1e-9);
    }
}

TEST_CASE("exact constant coefficients need a single step") {
    std::mt19937_64 rng(1003);
    const auto op0 = make_constant_operator(clifford_pair());
    CoefficientField coeffs;
    coeffs.dims = 2;
    coeffs.a = [](int axis, const std::array<double, 2>&) { return clifford_pair()[static_cast<std::size_t>(axis)]; };
    const TorusField f = random_field(rng, 2, 3, 2);
    const auto rep = solve_variable(f, coeffs, op0, 1e-12, 10);
    CHECK(rep.iterations <= 2);
    const auto direct = invert_constant(f, op0);
    CHECK(std::sqrt(l2_norm_sq(axpy(rep.u, -1.0, direct.u))) <= 1e-13);
}

TEST_CASE("perturbation guard") {
    CoefficientField coeffs;
    coeffs.dims = 1;
    coeffs.a = [](int, const std::array<double, 2>& x) { return scalar(1.0 + 0.9 * std::sin(2.0 * oracle::kPi * x[0])); };
    TorusField f = zero_torus_field(1, 8, 1);
    f.coeffs[0](0) = 1.0;
    try {
        solve_variable(f, coeffs, make_constant_operator({scalar(1.0)}), 1e-10, 50);
        FAIL("expected PerturbationTooLarge");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::PerturbationTooLarge);
    }
}
