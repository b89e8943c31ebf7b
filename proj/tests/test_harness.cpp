#include "test_support.hpp"

#include <doctest.h>

#include <sstream>

using namespace vioc;
using namespace vioc::testing;

namespace {

CostParams params(double weight, double b)
{
    CostParams p;
    p.weight = weight;
    p.dirichlet = b;
    return p;
}

} // namespace

TEST_CASE("fitted rate of an exact power law")
{
    std::vector<double> hs, errors;
    for (int k = 0; k < 5; ++k) {
        hs.push_back(std::pow(0.5, k));
        errors.push_back(3.0 * std::pow(hs.back(), 1.5));
    }
    CHECK(fitted_rate(hs, errors) == doctest::Approx(1.5).epsilon(1e-12));

    // Only the last max(3, n - 1) points enter the fit.
    errors[0] = 100.0;
    CHECK(fitted_rate(hs, errors) == doctest::Approx(1.5).epsilon(1e-12));

    errors[4] = 1e-13;
    CHECK(std::isnan(fitted_rate(hs, errors)));
    CHECK(std::isnan(fitted_rate({1.0}, {1.0})));
}

TEST_CASE("monotonicity helpers")
{
    CHECK(strictly_decreasing({3, 2, 1}));
    CHECK_FALSE(strictly_decreasing({3, 3, 1}));
    CHECK(decreasing_trend({3, 3, 1}));
    CHECK_FALSE(decreasing_trend({3, 4, 5, 1}));
    CHECK_FALSE(strictly_decreasing({3, kNaN}));
}

TEST_CASE("nested prolongation preserves norms")
{
    const std::vector<Mesh> meshes = mesh_hierarchy(unit_square(2, {Side::Bottom}), 4);
    REQUIRE(meshes.size() == 4);
    for (std::size_t k = 1; k < meshes.size(); ++k) CHECK(meshes[k].h == doctest::Approx(meshes[k - 1].h / 2));

    const FemSpace coarse(meshes[0]);
    const FemSpace fine(meshes[3]);
    std::mt19937_64 rng(6);
    const Vector u = uniform_vector(rng, coarse.size(), -3, 3);
    const Vector p = prolongate(coarse.mesh, u, fine.mesh);
    CHECK(std::abs(l2_norm(fine, p) - l2_norm(coarse, u)) <= 1e-12);
    CHECK(std::abs(h1_norm(fine, p) - h1_norm(coarse, u)) <= 1e-12);
    CHECK(std::abs(boundary_l2_norm(fine, p) - boundary_l2_norm(coarse, u)) <= 1e-12);
    CHECK_THROWS_AS(prolongate(fine.mesh, p, coarse.mesh), std::invalid_argument);
}

TEST_CASE("state convergence with the exact constant solution")
{
    const ConvergenceTable t = run_state_convergence(unit_square(2), constant(0.0), params(1.0, 1.0), {}, 3, 2);
    REQUIRE(t.rows.size() == 3);
    for (const auto& r : t.rows) {
        CHECK(r.error_v <= 1e-11);
        CHECK(r.error_h <= 1e-11);
        CHECK(r.cost_gap <= 1e-11);
    }
    CHECK(std::isnan(t.rate_v));
    CHECK(std::isnan(t.rate_cost));
    CHECK(t.oracle_level == 4);

    CHECK_THROWS_AS(run_state_convergence(unit_square(2), constant(0.0), params(1.0, 1.0), {}, 2, 2),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_state_convergence(unit_square(2), constant(0.0), params(1.0, 1.0), {}, 3, 1),
                    std::invalid_argument);
}

TEST_CASE("state convergence in the smooth inactive case")
{
    const ConvergenceTable t = run_state_convergence(unit_square(2), constant(10.0), params(1.0, 1.0), {}, 4, 3);
    CHECK(strictly_decreasing(column(t, &ConvergenceRow::error_v)));
    CHECK(strictly_decreasing(column(t, &ConvergenceRow::cost_gap)));
    CHECK(t.rate_v >= 0.9);
    CHECK(t.rate_cost >= 0.5);
    for (const auto& r : t.rows) CHECK(r.active_size == 0);
}

TEST_CASE("control convergence with zero boundary value")
{
    const ConvergenceTable t =
        run_control_convergence(unit_square(2), params(1.0, 0.0), {}, 2, 1, constant(3.0));
    REQUIRE(t.rows.size() == 2);
    for (const auto& r : t.rows) {
        CHECK(r.control_distance <= 1e-7);
        CHECK(r.control_norm <= 1e-7);
    }
}

TEST_CASE("control norm bound for a large weight")
{
    const ConvergenceTable t = run_control_convergence(unit_square(2), params(1e3, 1.0), {}, 3, 1, constant(0.0));
    for (const auto& r : t.rows) CHECK(r.control_norm <= r.control_bound);
}

TEST_CASE("optimizer failure carries the partial table")
{
    OptimizerOptions opts;
    opts.max_iter = 1;
    opts.gtol = 1e-300;
    try {
        run_control_convergence(unit_square(2), params(1.0, 1.0), {}, 2, 1, constant(5.0), opts);
        FAIL("expected ExperimentError");
    } catch (const ExperimentError& e) {
        CHECK(e.partial().rows.empty());
    }
}

TEST_CASE("Lipschitz check")
{
    const FemSpace space(unit_square(8));
    const ControlProblem problem(space, params(1.0, 1.0));
    const LipschitzReport r = run_lipschitz_check(problem, 50, 42);
    CHECK(r.ratios.size() == 50);
    CHECK(r.worst_ratio <= 1.0 + 1e-9);
    CHECK(r.worst_ratio > 0.0);

    const double lambda = coercivity_constant(space);
    std::mt19937_64 rng(3);
    const ControlField g1 = random_control(space, rng);
    const ControlField g2 = g1 + ControlField::Constant(space.size(), 4.0);
    const double du = h1_norm(space, Vector(problem.solve_state(g2).u - problem.solve_state(g1).u));
    CHECK(lambda * du / l2_norm(space, Vector(g2 - g1)) <= 1.0);

    // Zero amplitude only produces identical pairs.
    CHECK_THROWS_AS(run_lipschitz_check(problem, 1, 1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(run_lipschitz_check(problem, 0, 1), std::invalid_argument);
}

TEST_CASE("random controls")
{
    const FemSpace space(unit_square(4));
    std::mt19937_64 a(5), b(5);
    const ControlField g = random_control(space, a, 2.0);
    CHECK(g == random_control(space, b, 2.0));
    CHECK(g.cwiseAbs().maxCoeff() <= 2.0);
    std::mt19937_64 c(5);
    const ControlField smooth = random_control(space, c, 2.0, true);
    CHECK(smooth.cwiseAbs().maxCoeff() <= 2.0);
    CHECK(l2_norm(space, smooth) < l2_norm(space, g));
    std::mt19937_64 d(5);
    const ControlField constant_field = random_control(space, d, 0.0, true);
    CHECK(constant_field.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("parallelogram residuals")
{
    const FemSpace space(unit_square(6));
    const ControlProblem problem(space, params(1.0, 1.0));
    std::mt19937_64 rng(100);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 20; ++k) {
        const ControlField g1 = random_control(space, rng), g2 = random_control(space, rng);
        const ParallelogramResidual r = parallelogram_residual(problem, g1, g2, unit(rng));
        CHECK(r.state <= 1e-11);
        CHECK(r.control <= 1e-11);
    }
}

TEST_CASE("open problem scan")
{
    const FemSpace space(unit_square(4));
    const ControlProblem problem(space, params(1.0, 1.0));

    const OpenProblemScan ends = run_open_problem_scan(problem, 5, {0.0, 1.0}, 42);
    REQUIRE(ends.records.size() == 10);
    for (const auto& r : ends.records) {
        CHECK(r.order_margin >= -1e-12);
        CHECK(r.norm_margin >= -1e-12);
        CHECK_FALSE(r.violation);
    }

    const OpenProblemScan equal = run_open_problem_scan(problem, 2, {0.3, 0.6}, 42, 0.0);
    for (const auto& r : equal.records) {
        CHECK(r.order_margin >= -1e-12);
        CHECK(std::abs(r.norm_margin) <= 1e-12);
    }

    const OpenProblemScan scan = run_open_problem_scan(problem, 10, {0.1, 0.5, 0.9}, 7);
    CHECK(scan.summary.records == 30);
    CHECK(scan.summary.implication_failures == 0);
    for (const auto& r : scan.records) {
        CHECK(r.implication_holds);
        CHECK(r.violation == (r.pointwise_violation || r.norm_violation));
    }

    std::ostringstream first, second;
    write_open_problem_csv(first, scan);
    write_open_problem_csv(second, run_open_problem_scan(problem, 10, {0.1, 0.5, 0.9}, 7));
    CHECK(first.str() == second.str());
    CHECK(first.str().rfind("trial,mu,level,", 0) == 0);

    CHECK_THROWS_AS(run_open_problem_scan(problem, 1, {1.2}, 1), std::invalid_argument);
}

TEST_CASE("convergence CSV layout")
{
    ConvergenceTable t;
    ConvergenceRow r;
    r.level = 1;
    r.h = 0.5;
    r.error_v = 0.25;
    t.rows.push_back(r);
    std::ostringstream os;
    write_convergence_csv(os, t);
    CHECK(os.str() ==
          "level,h,error_v,error_h,cost,cost_gap,control_distance,control_norm,control_bound,active_size\n"
          "1,0.5,0.25,nan,nan,nan,nan,nan,nan,0\n");
}
