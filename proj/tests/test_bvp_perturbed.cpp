#include "dirac_bvp/bvp_perturbed.hpp"
#include "dirac_bvp/error.hpp"
#include "dirac_bvp/fredholm.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace dbvp;

namespace {

SpectralPartition mixed_partition(std::mt19937_64& rng, int n) {
    std::vector<EigenMode> modes;
    for (int i = 0; i < n; ++i) modes.push_back({i, (i % 2 ? -1.0 : 1.0) * oracle::uniform(rng, 1.05, 4.0)});
    return SpectralPartition::build(modes, 1.0, 1.0);
}

Perturbation random_perturbation(std::mt19937_64& rng, const Grid& g, Eigen::Index n) {
    const Eigen::MatrixXd b0 = oracle::random_matrix(rng, n, n);
    const Eigen::MatrixXd b1 = oracle::random_matrix(rng, n, n);
    Perturbation b{g, {}};
    for (int i = 0; i < g.nodes(); ++i) b.matrices.push_back(b0 + std::sin(3.0 * g.x(i)) * b1);
    return b;
}

} // namespace

TEST_CASE("operator norm estimates") {
    const Grid g = make_grid(1.0, 64);
    auto single = SpectralPartition::build({{0, 1.0}}, 0.5, 1.0);
    CHECK(estimate_op_norm(constant_perturbation(Eigen::MatrixXd::Zero(1, 1), g), single).value == 0.0);

    // Constant profiles are admissible trial functions, so the norm is at
    // least c / w; it is at most c / w since ||u||_{H^1_*} >= w ||u||.
    const Eigen::MatrixXd c = 0.3 * Eigen::MatrixXd::Identity(1, 1);
    const auto est = estimate_op_norm(constant_perturbation(c, g), single);
    CHECK(est.converged);
    CHECK(est.raw == doctest::Approx(0.3).epsilon(1e-5));
    CHECK(est.value == doctest::Approx(0.3 * kOpNormSafety).epsilon(1e-5));

    std::mt19937_64 rng(707);
    for (int trial = 0; trial < 10; ++trial) {
        const auto part = mixed_partition(rng, 8);
        const Perturbation b = random_perturbation(rng, g, 8);
        const double dense = oracle::dense_op_norm(b, part);
        const auto e = estimate_op_norm(b, part);
        CHECK(std::abs(e.raw - dense) <= 0.02 * dense);
        CHECK(e.value >= dense);
    }

    // Diagonal B with no coupling: the max of the single-mode values.
    const auto part = mixed_partition(rng, 4);
    Eigen::MatrixXd diag = Eigen::Vector4d(0.1, 0.4, 0.2, 0.3).asDiagonal();
    double best = 0.0;
    for (std::size_t a = 0; a < 4; ++a) best = std::max(best, diag(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) / part.weight(a));
    CHECK(estimate_op_norm(constant_perturbation(diag, g), part).raw == doctest::Approx(best).epsilon(1e-4));
}

TEST_CASE("zero perturbation reproduces the model solve in one iteration") {
    std::mt19937_64 rng(808);
    const auto part = mixed_partition(rng, 6);
    const Grid g = make_grid(1.0, 64);
    BoundaryField sigma{Eigen::VectorXd::Zero(6)};
    for (auto p : part.p_set()) sigma.coeffs(static_cast<Eigen::Index>(p)) = 1.0;
    CylinderField f = zero_field(6, g);
    f.values.setConstant(0.5);
    const ModelProblem problem{f, aps_condition(part, sigma)};
    const auto rep = solve_perturbed(problem, constant_perturbation(Eigen::MatrixXd::Zero(6, 6), g), 1e-10, 50);
    CHECK(rep.iterations == 1);
    CHECK(rep.converged);
    CHECK((rep.u.values - solve_model(problem).u.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scalar perturbation converges to the shifted exponential") {
    auto part = SpectralPartition::build({{0, 1.0}}, 0.5, 1.0);
    const double tol = 1e-12;
    std::vector<double> errors;
    for (int m : {64, 128}) {
        const Grid g = make_grid(1.0, m);
        const ModelProblem problem{zero_field(1, g), aps_condition(part, BoundaryField{Eigen::VectorXd::Ones(1)})};
        const auto rep = solve_perturbed(problem, constant_perturbation(0.1 * Eigen::MatrixXd::Identity(1, 1), g), tol, 200);
        CHECK(rep.converged);
        for (std::size_t k = 1; k < rep.contraction_ratios.size(); ++k) {
            CHECK(rep.contraction_ratios[k] <= rep.c4 * rep.op_norm.value * 1.05);
        }
        CHECK(rep.residual_l2 < 10 * tol);
        CHECK(rep.bc_residual <= 1e-12);
        CHECK(rep.h1_norm <= rep.bound);
        double e = 0.0;
        for (int i = 0; i < g.nodes(); ++i) e = std::max(e, std::abs(rep.u.values(0, i) - std::exp(-1.1 * g.x(i))));
        errors.push_back(e);
    }
    CHECK(errors[1] <= 1e-5);
    CHECK(errors[0] / errors[1] == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("contraction guard") {
    auto part = SpectralPartition::build({{0, 1.0}}, 0.5, 1.0);
    const Grid g = make_grid(1.0, 32);
    const ModelProblem problem{zero_field(1, g), aps_condition(part, BoundaryField{Eigen::VectorXd::Ones(1)})};
    // c4 = sqrt(2) and ||c Id|| = c, so c = 1.2 / sqrt(2) gives c4 ||B|| = 1.2.
    const double c = 1.2 / std::sqrt(2.0);
    try {
        solve_perturbed(problem, constant_perturbation(c * Eigen::MatrixXd::Identity(1, 1), g), 1e-10, 50);
        FAIL("expected NotContraction");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotContraction);
    }
}

TEST_CASE("geometric convergence and agreement with the dense solve") {
    std::mt19937_64 rng(909);
    for (int trial = 0; trial < 20; ++trial) {
        const auto part = mixed_partition(rng, 6);
        const Grid g = make_grid(1.0, 32);
        BoundaryField sigma{Eigen::VectorXd::Zero(6)};
        for (auto p : part.p_set()) sigma.coeffs(static_cast<Eigen::Index>(p)) = oracle::uniform(rng, -1, 1);
        CylinderField f = zero_field(6, g);
        for (Eigen::Index a = 0; a < 6; ++a) {
            for (int i = 0; i < g.nodes(); ++i) f.values(a, i) = std::cos((a + 1) * g.x(i));
        }
        const auto bc = aps_condition(part, sigma);
        Perturbation b = random_perturbation(rng, g, 6);
        const double target = oracle::uniform(rng, 0.2, 0.8);
        b = scaled(b, target / (constant_c4_for(part, 0.0) * estimate_op_norm(b, part).value));
        const auto rep = solve_perturbed({f, bc}, b, 1e-12, 500);
        REQUIRE(rep.converged);
        const double rate = rep.c4 * rep.op_norm.value;
        for (std::size_t k = 1; k < rep.contraction_ratios.size(); ++k) {
            if (rep.step_norms[k] < 1e-11) break;
            CHECK(std::log(rep.contraction_ratios[k]) <= std::log(rate) + 0.05);
        }
        CHECK(rep.bc_residual <= 1e-12);

        const auto sys = assemble(bc, &b, g.cells);
        const Eigen::VectorXd x = sys.matrix.partialPivLu().solve(sys.rhs(f, sigma));
        const Eigen::VectorXd mine = sys.pack(rep.u);
        CHECK((x - mine).norm() <= 1e-8 * x.norm());
    }
}
