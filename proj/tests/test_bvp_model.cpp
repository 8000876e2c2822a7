#include "dirac_bvp/bvp_model.hpp"
#include "dirac_bvp/error.hpp"
#include "dirac_bvp/linalg.hpp"
#include "dirac_bvp/mode_ode.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace dbvp;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::InvalidArgument;
}

CylinderField constant_source(std::size_t modes, const Grid& g, const Eigen::VectorXd& value) {
    CylinderField f = zero_field(modes, g);
    for (int i = 0; i < g.nodes(); ++i) f.values.col(i) = value;
    return f;
}

} // namespace

TEST_CASE("estimate constants") {
    CHECK(constant_c2(1.0, 0.0) == doctest::Approx(1.5));
    CHECK(constant_c2(1.0, 0.5) == doctest::Approx(0.25 + 1.5 * std::exp(1.0)));
    CHECK(constant_c2(1e-8, 0.0) < 1e-15);
    CHECK(constant_c2(0.5, 0.0) < constant_c2(1.0, 0.0));
    CHECK(constant_c3(1.0, 0.0) == doctest::Approx(1.0));
    CHECK(constant_c3(2.0, 0.0) == doctest::Approx(2.0));
    CHECK(constant_c3(1.0, 0.5) == doctest::Approx(std::exp(1.0)));
    CHECK(constant_c4(3.0, 0.0, 0.0) == doctest::Approx(std::sqrt(2.0)));
    CHECK(constant_c4(0.1, 0.0, 2.0) == doctest::Approx(std::sqrt(8.0)));
    // sqrt(3 c2 + 2 (2 + 9 c3)) = sqrt(12.982 + 52.929)
    CHECK(constant_c4(1.0, 0.5, 1.0) == doctest::Approx(8.11858).epsilon(1e-5));

    auto no_small = SpectralPartition::build({{0, -2}, {1, 2}}, 1.0, 1.0);
    CHECK(constant_c4_for(no_small, 0.0) == doctest::Approx(std::sqrt(2.0)));
    // A zero mode gives theta0 = 0 but still needs the general form.
    auto with_zero = SpectralPartition::build({{0, -2}, {1, 0}, {2, 2}}, 1.0, 1.0);
    CHECK(with_zero.theta0() == 0.0);
    CHECK(constant_c4_for(with_zero, 0.0) == doctest::Approx(std::sqrt(3 * 1.5 + 2 + 9)));
}

TEST_CASE("APS solve closed form") {
    auto part = SpectralPartition::build({{0, -1}, {1, 1}}, 0.5, 1.0);
    const Grid g = make_grid(1.0, 64);
    const auto bc = aps_condition(part, BoundaryField{Eigen::Vector2d(0, 1)});
    CHECK(bc.k_bound == 0.0);
    const auto rep = solve_model({zero_field(2, g), bc});
    CHECK(rep.u.values.row(0).isZero(0.0));
    for (int i = 0; i < g.nodes(); ++i) CHECK(rep.u.values(1, i) == doctest::Approx(std::exp(-g.x(i))));
    CHECK(rep.estimate_holds());

    const auto trivial = solve_model({zero_field(2, g), aps_condition(part, BoundaryField{Eigen::Vector2d::Zero()})});
    CHECK(trivial.u.values.isZero(0.0));
}

TEST_CASE("graph coupling closed form") {
    auto part = SpectralPartition::build({{0, -1}, {1, 1}}, 0.5, 1.0);
    const Grid g = make_grid(1.0, 64);
    Eigen::MatrixXd k(1, 1);
    k << 1.0;
    const auto bc = make_graph_condition(part, k, BoundaryField{Eigen::Vector2d::Zero()});
    CHECK(bc.k_bound == doctest::Approx(1.0));
    const auto rep = solve_model({constant_source(2, g, Eigen::Vector2d(1, 0)), bc});
    const double c = std::exp(-1.0) - 1;
    for (int i = 0; i < g.nodes(); ++i) {
        const double x = g.x(i);
        CHECK(rep.u.values(0, i) == doctest::Approx(std::exp(x - 1) - 1));
        CHECK(rep.u.values(1, i) == doctest::Approx(c * std::exp(-x)));
    }
    CHECK(rep.bc_residual_left <= 1e-12);
    CHECK(rep.bc_residual_right <= 1e-12);
}

TEST_CASE("condition validation") {
    auto part = SpectralPartition::build({{0, -1}, {1, 1}}, 0.5, 1.0);
    CHECK(kind_of([&] { aps_condition(part, BoundaryField{Eigen::Vector2d(0.1, 1)}); }) ==
          ErrorKind::SigmaNotInRangeP);
    auto other = SpectralPartition::build({{0, -1}, {1, 1}, {2, 3}}, 0.5, 1.0);
    const auto bc = aps_condition(other, BoundaryField{Eigen::Vector3d::Zero()});
    CHECK(kind_of([&] { solve_model({zero_field(2, make_grid(1.0, 8)), bc}); }) == ErrorKind::PartitionMismatch);
    CHECK(kind_of([&] { solve_model({zero_field(3, make_grid(2.0, 8)), bc}); }) == ErrorKind::PartitionMismatch);
}

TEST_CASE("coupling bound is the weighted operator norm") {
    std::mt19937_64 rng(404);
    std::vector<EigenMode> modes;
    for (int i = 0; i < 6; ++i) modes.push_back({i, (i % 2 ? -1.0 : 1.0) * (1.5 + i)});
    const auto part = SpectralPartition::build(modes, 1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::MatrixXd k = oracle::random_matrix(rng, 3, 3);
        const double bound = coupling_bound(part, k);
        const auto bc = make_graph_condition(part, k, BoundaryField{Eigen::VectorXd::Zero(6)});
        const Eigen::MatrixXd kf = coupling_matrix_full(bc);
        double sup = 0.0;
        for (int s = 0; s < 200; ++s) {
            BoundaryField w{Eigen::VectorXd::Zero(6)};
            for (auto q : part.complement_set()) w.coeffs(static_cast<Eigen::Index>(q)) = oracle::uniform(rng, -1, 1);
            const BoundaryField kw{kf * w.coeffs};
            const double ratio = hs_norm(part, kw, 0.5) / hs_norm(part, w, 0.5);
            CHECK(ratio <= bound * (1 + 1e-12));
            sup = std::max(sup, ratio);
        }
        CHECK(sup >= 0.5 * bound);
    }
}

TEST_CASE("a priori estimate and boundary exactness on random problems") {
    std::mt19937_64 rng(505);
    for (double ell : {0.25, 1.0, 4.0}) {
        for (bool small_modes : {false, true}) {
            for (double kk : {0.0, 1.0}) {
                for (int trial = 0; trial < 15; ++trial) {
                    std::vector<EigenMode> modes;
                    for (int i = 0; i < 6; ++i) modes.push_back({i, (i % 2 ? -1.0 : 1.0) * oracle::uniform(rng, 1.05, 5)});
                    if (small_modes) {
                        modes.push_back({6, 0.5});
                        modes.push_back({7, -0.3});
                    }
                    const auto part = SpectralPartition::build(modes, 1.0, ell);
                    const Grid g = make_grid(ell, 128);
                    Eigen::MatrixXd k = oracle::random_matrix(rng, static_cast<Eigen::Index>(part.p_set().size()),
                                                              static_cast<Eigen::Index>(part.complement_set().size()));
                    if (kk == 0.0) {
                        k.setZero();
                    } else {
                        k *= kk / coupling_bound(part, k);
                    }
                    BoundaryField sigma{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(part.size()))};
                    for (auto p : part.p_set()) sigma.coeffs(static_cast<Eigen::Index>(p)) = oracle::uniform(rng, -1, 1);
                    CylinderField f = zero_field(part.size(), g);
                    for (Eigen::Index a = 0; a < f.values.rows(); ++a) {
                        const double c0 = oracle::uniform(rng, -1, 1), w = oracle::uniform(rng, 0, 8);
                        for (int i = 0; i < g.nodes(); ++i) f.values(a, i) = c0 * std::cos(w * g.x(i) / ell);
                    }
                    const auto rep = solve_model({f, make_graph_condition(part, k, sigma)});
                    CHECK(rep.h1_norm_sq <= rep.c4 * rep.c4 * rep.data_norm_sq * (1 + 1e-6));
                    CHECK(rep.bc_residual_left <= 1e-12 * std::max(1.0, rep.u.values.cwiseAbs().maxCoeff()));
                    CHECK(rep.bc_residual_right <= 1e-12 * std::max(1.0, rep.u.values.cwiseAbs().maxCoeff()));
                    CHECK(rep.c4 == doctest::Approx(constant_c4_for(part, make_graph_condition(part, k, sigma).k_bound)));
                }
            }
        }
    }
}

TEST_CASE("negative-mode trace estimate") {
    // |lambda| u(0)^2 <= int f^2 - int (u'^2 + lambda^2 u^2) for right-anchored
    // modes; it holds with equality, so the slack is pure quadrature error.
    std::mt19937_64 rng(515);
    for (double ell : {0.25, 1.0, 4.0}) {
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<EigenMode> modes;
            for (int i = 0; i < 6; ++i) modes.push_back({i, (i % 2 ? -1.0 : 1.0) * oracle::uniform(rng, 1.05, 5)});
            const auto part = SpectralPartition::build(modes, 1.0, ell);
            const Grid g = make_grid(ell, 8192);
            CylinderField f = zero_field(part.size(), g);
            for (Eigen::Index a = 0; a < f.values.rows(); ++a) {
                const double c0 = oracle::uniform(rng, -1, 1), w = oracle::uniform(rng, 0, 8);
                for (int i = 0; i < g.nodes(); ++i) f.values(a, i) = c0 * std::cos(w * g.x(i) / ell);
            }
            const auto rep = solve_model({f, aps_condition(part, BoundaryField{Eigen::VectorXd::Zero(6)})});
            for (auto a : part.minus()) {
                const auto r = static_cast<Eigen::Index>(a);
                const double lam = part.lambda(a);
                const Eigen::VectorXd u = rep.u.values.row(r).transpose();
                const Eigen::VectorXd du = rep.u.derivs.row(r).transpose();
                const Eigen::VectorXd ff = f.values.row(r).transpose();
                const double f2 = trapezoid(ff.array().square().matrix(), g.h());
                const double energy = trapezoid((du.array().square() + lam * lam * u.array().square()).matrix(), g.h());
                CHECK(std::abs(lam) * u(0) * u(0) <= f2 - energy + 1e-6 * f2);
            }
        }
    }
}

TEST_CASE("chiral condition on a 2x2 operator") {
    Eigen::MatrixXd a(2, 2), eps(2, 2);
    a << 0, 1, 1, 0;
    eps << 1, 0, 0, -1;
    const auto plus = chiral_condition(a, eps, +1, 0.5, 1.0);
    CHECK(plus.kernel_distance <= 1e-10);
    CHECK(plus.chiral_kernel.cols() == 1);
    // ker(1 - eps) = span(e1).
    CHECK(std::abs(std::abs(plus.chiral_kernel(0, 0)) - 1.0) <= 1e-12);
    const auto minus = chiral_condition(a, eps, -1, 0.5, 1.0);
    CHECK(minus.kernel_distance <= 1e-10);
    CHECK(std::abs(std::abs(minus.chiral_kernel(1, 0)) - 1.0) <= 1e-12);

    CHECK(kind_of([&] { chiral_condition(a, Eigen::MatrixXd::Identity(2, 2), +1, 0.5, 1.0); }) == ErrorKind::NotChiral);
    Eigen::MatrixXd not_involution = 2.0 * eps;
    CHECK(kind_of([&] { chiral_condition(a, not_involution, +1, 0.5, 1.0); }) == ErrorKind::NotChiral);
}

TEST_CASE("chiral kernels of block operators are isotropic") {
    std::mt19937_64 rng(606);
    for (auto [m, n] : {std::pair{2, 2}, std::pair{3, 3}, std::pair{2, 4}, std::pair{4, 2}, std::pair{1, 3}}) {
        const Eigen::MatrixXd a = oracle::random_matrix(rng, m, n);
        Eigen::MatrixXd big = Eigen::MatrixXd::Zero(m + n, m + n);
        big.topRightCorner(n, m) = a.transpose();
        big.bottomLeftCorner(m, n) = a;
        Eigen::MatrixXd eps = Eigen::MatrixXd::Identity(m + n, m + n);
        eps.bottomRightCorner(m, m) *= -1.0;
        for (int sign : {+1, -1}) {
            const auto ch = chiral_condition(big, eps, sign, 0.05, 1.0);
            CHECK(ch.kernel_distance <= 1e-10);
            const Eigen::MatrixXd form = ch.chiral_kernel.transpose() * big * ch.chiral_kernel;
            CHECK(form.cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, big.norm()));
            CHECK(subspace_distance(ch.graph_kernel, ch.chiral_kernel) <= 1e-10);
        }
    }
}
