#include "dirac_bvp/error.hpp"
#include "dirac_bvp/fredholm.hpp"
#include "dirac_bvp/linalg.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace dbvp;

namespace {

GraphBoundaryCondition random_k_condition(std::mt19937_64& rng, int n) {
    std::vector<EigenMode> modes;
    for (int i = 0; i < n; ++i) modes.push_back({i, (i % 2 ? -1.0 : 1.0) * oracle::uniform(rng, 1.05, 4.0)});
    const auto part = SpectralPartition::build(modes, 1.0, 1.0);
    const Eigen::MatrixXd k = oracle::random_matrix(rng, static_cast<Eigen::Index>(part.p_set().size()),
                                                    static_cast<Eigen::Index>(part.complement_set().size()));
    return make_graph_condition(part, k, BoundaryField{Eigen::VectorXd::Zero(n)});
}

CylinderField smooth_source(std::size_t modes, const Grid& g) {
    CylinderField f = zero_field(modes, g);
    for (Eigen::Index a = 0; a < f.values.rows(); ++a) {
        for (int i = 0; i < g.nodes(); ++i) f.values(a, i) = std::cos((a + 1.0) * g.x(i)) + 0.1 * a;
    }
    return f;
}

} // namespace

TEST_CASE("single-mode APS system matches the model solve") {
    auto part = SpectralPartition::build({{0, 1.0}}, 0.5, 1.0);
    const auto bc = aps_condition(part, BoundaryField{Eigen::VectorXd::Ones(1)});
    const auto sys = assemble(bc, nullptr, 8);
    CHECK(sys.matrix.rows() == sys.matrix.cols());
    const Grid g = make_grid(1.0, 8);
    const CylinderField f = smooth_source(1, g);
    const Eigen::VectorXd x = sys.matrix.partialPivLu().solve(sys.rhs(f, bc.sigma));
    const Eigen::VectorXd ref = sys.pack(solve_model({f, bc}).u);
    CHECK((x - ref).cwiseAbs().maxCoeff() <= 1e-10 * ref.cwiseAbs().maxCoeff());
    CHECK((sys.matrix * ref - sys.rhs(f, bc.sigma)).norm() <= 1e-10 * sys.matrix.rows());
}

TEST_CASE("matrix structure") {
    std::mt19937_64 rng(1101);
    const auto aps = aps_condition(random_k_condition(rng, 6).partition, BoundaryField{Eigen::VectorXd::Zero(6)});
    const auto plain = assemble(aps, nullptr, 16);
    // With B = 0 and K = 0 no entry couples two different modes.
    for (Eigen::Index r = 0; r < plain.matrix.rows(); ++r) {
        for (Eigen::Index c = 0; c < plain.matrix.cols(); ++c) {
            if (plain.matrix(r, c) == 0.0) continue;
            const Eigen::Index col_mode = c % 6;
            const Eigen::Index row_mode = r < plain.cell_rows() ? r % 6 : -1;
            if (row_mode >= 0) CHECK(row_mode == col_mode);
        }
    }

    const auto coupled = random_k_condition(rng, 6);
    const auto ksys = assemble(coupled, nullptr, 16);
    const Eigen::MatrixXd diff = ksys.matrix - assemble(with_sigma(aps_condition(coupled.partition, coupled.sigma), coupled.sigma), nullptr, 16).matrix;
    const auto extra = (diff.array() != 0.0).count();
    CHECK(extra == static_cast<Eigen::Index>(coupled.partition.p_set().size() * coupled.partition.complement_set().size()));

    CHECK_THROWS_AS(assemble(aps, nullptr, 1), Error);
}

TEST_CASE("kernels of model and degenerate systems") {
    std::mt19937_64 rng(1102);
    const auto bc = random_k_condition(rng, 6);
    const auto kp = kernel_and_cokernel(assemble(bc, nullptr, 32));
    CHECK(kp.kernel.dim() == 0);
    CHECK(kp.cokernel.dim() == 0);

    const auto degenerate = assemble(bc, nullptr, 32, true);
    const auto kd = kernel_and_cokernel(degenerate);
    CHECK(kd.kernel.dim() >= static_cast<Eigen::Index>(bc.partition.p_set().size()));
    for (Eigen::Index j = 0; j < kd.kernel.dim(); ++j) {
        CHECK((degenerate.matrix * kd.kernel.vectors.col(j)).norm() <= kd.kernel.tol_used * kd.singular_values(0));
    }

    auto part = SpectralPartition::build({{0, 1.0}}, 0.5, 1.0);
    const auto single = aps_condition(part, BoundaryField{Eigen::VectorXd::Zero(1)});
    std::vector<double> smin;
    for (int m : {16, 32, 64}) smin.push_back(kernel_and_cokernel(assemble(single, nullptr, m)).singular_values.tail(1)(0));
    CHECK(std::abs(smin[1] / smin[0] - 1.0) <= 0.2);
    CHECK(std::abs(smin[2] / smin[1] - 1.0) <= 0.2);
}

TEST_CASE("index is stable under refinement") {
    std::mt19937_64 rng(1103);
    const auto bc = random_k_condition(rng, 5);
    for (bool degenerate : {false, true}) {
        Eigen::Index index = 0;
        for (int m : {16, 32, 64}) {
            const auto kp = kernel_and_cokernel(assemble(bc, nullptr, m, degenerate));
            if (m == 16) index = kp.index();
            CHECK(kp.index() == index);
        }
    }
}

TEST_CASE("adjoint boundary structure of the cokernel") {
    std::mt19937_64 rng(1104);
    const auto bc = random_k_condition(rng, 6);
    const auto sys = assemble(bc, nullptr, 32, true);
    const auto kp = kernel_and_cokernel(sys);
    REQUIRE(kp.cokernel.dim() > 0);
    const auto traces = adjoint_traces(sys, kp.cokernel);
    CHECK(traces.left_residual <= 1e-8);
    CHECK(traces.right_residual <= 1e-8);
    CHECK(adjoint_propagation_residual(sys, kp.cokernel) <= 1e-8);
    CHECK(transpose_propagator_residual(assemble(bc, nullptr, 32)) <= 1e-10);
}

TEST_CASE("solvability verdicts") {
    std::mt19937_64 rng(1105);
    const auto bc = random_k_condition(rng, 6);
    const auto full = assemble(bc, nullptr, 16);
    const auto kp = kernel_and_cokernel(full);
    const Eigen::VectorXd data = oracle::random_matrix(rng, full.matrix.rows(), 1);
    const auto ok = solvability_check(full, kp.cokernel, data);
    CHECK(ok.solvable);
    REQUIRE(ok.solution.has_value());
    CHECK((full.matrix * *ok.solution - data).norm() <= 1e-8 * data.norm());

    const auto broken = assemble(bc, nullptr, 16, true);
    const auto kb = kernel_and_cokernel(broken);
    REQUIRE(kb.cokernel.dim() > 0);
    const Eigen::VectorXd phi = kb.cokernel.vectors.col(0);
    const auto bad = solvability_check(broken, kb.cokernel, phi);
    CHECK_FALSE(bad.solvable);
    CHECK(bad.residual_against_cokernel == doctest::Approx(phi.norm()));
    CHECK_FALSE(bad.lsq_consistent);

    const Eigen::VectorXd raw = oracle::random_matrix(rng, broken.matrix.rows(), 1);
    const Eigen::VectorXd projected = raw - kb.cokernel.vectors * (kb.cokernel.vectors.transpose() * raw);
    const auto good = solvability_check(broken, kb.cokernel, projected);
    CHECK(good.solvable);
    CHECK(good.lsq_consistent);
    REQUIRE(good.solution.has_value());
    CHECK((broken.matrix * *good.solution - projected).norm() <= 1e-8 * projected.norm());
}

TEST_CASE("perturbed system matches the iteration limit") {
    std::mt19937_64 rng(1106);
    const auto bc0 = random_k_condition(rng, 4);
    const auto part = bc0.partition;
    BoundaryField sigma{Eigen::VectorXd::Zero(4)};
    for (auto p : part.p_set()) sigma.coeffs(static_cast<Eigen::Index>(p)) = 1.0;
    const auto bc = make_graph_condition(part, bc0.K / std::max(1.0, bc0.k_bound), sigma);
    const Grid g = make_grid(1.0, 32);
    Perturbation b = constant_perturbation(oracle::random_matrix(rng, 4, 4), g);
    b = scaled(b, 0.5 / (constant_c4_for(part, bc.k_bound) * estimate_op_norm(b, part).value));
    const CylinderField f = smooth_source(4, g);
    const auto rep = solve_perturbed({f, bc}, b, 1e-13, 500);
    const auto sys = assemble(bc, &b, g.cells);
    const Eigen::VectorXd x = sys.matrix.partialPivLu().solve(sys.rhs(f, sigma));
    CHECK((x - sys.pack(rep.u)).norm() <= 1e-8 * x.norm());
    CHECK_THROWS_AS(transpose_propagator_residual(sys), Error);
}

TEST_CASE("splitting projections") {
    const auto zero = splitting_check({true, false, true}, Eigen::MatrixXd::Zero(3, 3));
    CHECK(zero.holds());
    CHECK(zero.dim_ker_q1 == 1);
    CHECK(zero.dim_ker_q2 == 2);

    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(2, 2);
    k(0, 1) = 1.0;
    const auto two = splitting_check({true, false}, k);
    CHECK(two.holds());
    REQUIRE(two.dim_ker_q1 == 1);
    REQUIRE(two.dim_ker_q2 == 1);
    const Eigen::Vector2d s = Eigen::Vector2d(1, 1).normalized(), d = Eigen::Vector2d(1, -1).normalized();
    CHECK(subspace_distance(two.ker_q1, Eigen::MatrixXd(s)) <= 1e-12);
    CHECK(subspace_distance(two.ker_q2, Eigen::MatrixXd(d)) <= 1e-12);

    std::mt19937_64 rng(1107);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = trial == 0 ? 20 : 2 + trial % 19;
        std::vector<bool> in_p(static_cast<std::size_t>(n));
        for (auto&& p : in_p) p = oracle::uniform(rng, 0, 1) < 0.5;
        Eigen::MatrixXd kk = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (in_p[static_cast<std::size_t>(i)] && !in_p[static_cast<std::size_t>(j)]) kk(i, j) = oracle::uniform(rng, -1, 1);
            }
        }
        CHECK(splitting_check(in_p, kk).holds());
    }

    try {
        splitting_check({true, false}, Eigen::MatrixXd::Identity(2, 2));
        FAIL("expected KNotOffBlock");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::KNotOffBlock);
    }
}
