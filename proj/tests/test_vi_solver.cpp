#include "test_support.hpp"

#include <doctest.h>

#include <Eigen/SparseCholesky>

#include <sstream>

using namespace vioc;
using namespace vioc::testing;

namespace {

ObstacleProblem problem_for(const FemSpace& space, double g, double b, const ScalarFunction& q = constant(0.0))
{
    return make_obstacle_problem(space, Vector::Constant(space.size(), g), assemble_boundary_flux(space.mesh, q), b);
}

PsorOptions tight_psor()
{
    PsorOptions o;
    o.tol = 1e-13;
    o.max_iter = 200000;
    return o;
}

PdasOptions tight_pdas()
{
    PdasOptions o;
    o.tol = 1e-12;
    return o;
}

// Checks the solution invariants of a VISolution.
void check_invariants(const ObstacleProblem& problem, const VISolution& sol, double tol)
{
    const DofMap& dofs = problem.dofs();
    for (Index v : dofs.dirichlet_nodes) CHECK(sol.u[v] == problem.dirichlet_value);
    CHECK(sol.u.minCoeff() >= -tol);
    const Vector r = multiplier(problem, sol.u);
    const double scale = problem.residual_scale();
    for (Index v : dofs.free_nodes) {
        const bool active = std::binary_search(sol.active_set.begin(), sol.active_set.end(), v);
        if (active) {
            CHECK(sol.u[v] <= tol);
            CHECK(r[v] >= -tol * scale);
        } else {
            CHECK(std::abs(r[v]) <= tol * scale);
        }
    }
}

} // namespace

TEST_CASE("zero control gives the constant Dirichlet value")
{
    const FemSpace space(unit_square(4));
    const ObstacleProblem p = problem_for(space, 0.0, 1.0);
    const VISolution psor = solve_psor(p);
    const VISolution pdas = solve_pdas(p);
    CHECK(psor.converged);
    CHECK(pdas.converged);
    CHECK((psor.u.array() - 1.0).abs().maxCoeff() == 0.0);
    CHECK((pdas.u.array() - 1.0).abs().maxCoeff() <= 1e-13);
    CHECK(pdas.active_set.empty());

    const Mesh small = unit_square(2);
    const FemSpace small_space(small);
    const VISolution oracle = brute_force_oracle(problem_for(small_space, 0.0, 1.0));
    CHECK(oracle.active_set.empty());
    CHECK((oracle.u.array() - 1.0).abs().maxCoeff() <= 1e-13);
}

TEST_CASE("large positive control leaves the constraint inactive")
{
    const FemSpace space(unit_square(6));
    const ObstacleProblem p = problem_for(space, 10.0, 1.0);

    // Direct sparse solve on the free nodes.
    const auto& free = space.dofs.free_nodes;
    Vector lift = Vector::Zero(space.size());
    for (Index v : space.dofs.dirichlet_nodes) lift[v] = 1.0;
    const SparseMatrix a_ff = restrict_operator(space.stiffness, free, free);
    Eigen::SimplicialLLT<SparseMatrix> chol(a_ff);
    Vector direct = lift;
    scatter(chol.solve(gather(Vector(p.load - space.stiffness * lift), free)), free, direct);

    const VISolution psor = solve_psor(p, tight_psor());
    const VISolution pdas = solve_pdas(p);
    CHECK(psor.active_set.empty());
    CHECK(pdas.active_set.empty());
    CHECK(pdas.iterations == 1);
    CHECK((psor.u - direct).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK((pdas.u - direct).lpNorm<Eigen::Infinity>() <= 1e-9);
    check_invariants(p, pdas, 1e-10);
}

TEST_CASE("strongly negative control touches the obstacle and matches the oracle")
{
    const FemSpace space(unit_square(3));
    const ObstacleProblem p = problem_for(space, -50.0, 0.05);
    REQUIRE(space.dofs.num_free() <= 16);

    CHECK(kkt_partitions(p).size() >= 1);
    const VISolution oracle = brute_force_oracle(p);
    CHECK_FALSE(oracle.active_set.empty());

    const VISolution psor = solve_psor(p, tight_psor());
    const VISolution pdas = solve_pdas(p, tight_pdas());
    REQUIRE(psor.converged);
    REQUIRE(pdas.converged);
    CHECK((psor.u - oracle.u).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK((pdas.u - oracle.u).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK(pdas.active_set == oracle.active_set);
    check_invariants(p, pdas, 1e-10);
    check_invariants(p, psor, 1e-10);
}

TEST_CASE("zero Dirichlet value with negative control is fully active")
{
    const FemSpace space(unit_square(3));
    const ObstacleProblem p = problem_for(space, -1.0, 0.0);
    const VISolution pdas = solve_pdas(p);
    CHECK(pdas.converged);
    CHECK(pdas.u.cwiseAbs().maxCoeff() == 0.0);
    CHECK(pdas.active_set == space.dofs.free_nodes);

    const VISolution oracle = brute_force_oracle(p);
    CHECK(oracle.active_set == space.dofs.free_nodes);
    CHECK(kkt_partitions(p).size() == 1);

    const VISolution psor = solve_psor(p);
    CHECK(psor.converged);
    CHECK(psor.u.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("random small problems have exactly one KKT partition")
{
    const FemSpace space(unit_square(3, {Side::Left, Side::Bottom}));
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        const Vector g = uniform_vector(rng, space.size(), -40, 20);
        const ObstacleProblem p = make_obstacle_problem(space, g, Vector::Zero(space.size()), 0.1);
        CHECK(kkt_partitions(p).size() == 1);
        const VISolution oracle = brute_force_oracle(p);
        const VISolution pdas = solve_pdas(p, tight_pdas());
        CHECK((pdas.u - oracle.u).lpNorm<Eigen::Infinity>() <= 1e-9);
    }
}

TEST_CASE("verify_vi probes")
{
    const FemSpace space(unit_square(3));
    const ObstacleProblem p = problem_for(space, -50.0, 0.05);
    const VISolution oracle = brute_force_oracle(p);

    CHECK(verify_vi(p, oracle.u, {oracle.u}) == 0.0);
    const Vector b = Vector::Constant(space.size(), 0.05);
    CHECK(verify_vi(p, oracle.u, {b}) >= -1e-12);

    std::mt19937_64 rng(7);
    std::vector<Vector> probes;
    for (int k = 0; k < 100; ++k) probes.push_back(feasible_field(p, uniform_vector(rng, space.dofs.num_free(), -0.5, 2.0)));
    CHECK(verify_vi(p, oracle.u, probes) >= -1e-9);

    Vector bad = b;
    bad[space.dofs.free_nodes.front()] = -1.0;
    CHECK_THROWS_AS(verify_vi(p, oracle.u, {bad}), std::invalid_argument);
    Vector wrong_boundary = b;
    wrong_boundary[space.dofs.dirichlet_nodes.front()] = 0.3;
    CHECK_THROWS_AS(verify_vi(p, oracle.u, {wrong_boundary}), std::invalid_argument);

    // A non-solution fails some probe.
    Vector not_solution = Vector::Ones(space.size());
    for (Index v : space.dofs.dirichlet_nodes) not_solution[v] = 0.05;
    CHECK(verify_vi(p, not_solution, {feasible_field(p, Vector::Zero(space.dofs.num_free()))}) < 0.0);
}

TEST_CASE("PSOR is independent of its starting point")
{
    const FemSpace space(unit_square(8));
    const ObstacleProblem p = problem_for(space, -50.0, 0.05, constant(0.3));
    std::mt19937_64 rng(99);
    const VISolution reference = solve_pdas(p, tight_pdas());
    REQUIRE(reference.converged);
    for (int k = 0; k < 5; ++k) {
        const Vector start = feasible_field(p, uniform_vector(rng, space.dofs.num_free(), 0.0, 3.0));
        const VISolution s = solve_psor(p, tight_psor(), start);
        REQUIRE(s.converged);
        CHECK((s.u - reference.u).lpNorm<Eigen::Infinity>() <= 1e-8);
    }
}

TEST_CASE("PSOR and PDAS agree in the V norm")
{
    std::mt19937_64 rng(17);
    for (Index n : {2, 4, 8}) {
        const FemSpace space(unit_square(n, {Side::Left, Side::Top}));
        for (int trial = 0; trial < 4; ++trial) {
            const Vector g = uniform_vector(rng, space.size(), -30, 10);
            const ObstacleProblem p =
                make_obstacle_problem(space, g, assemble_boundary_flux(space.mesh, constant(0.5)), 0.2);
            const VISolution a = solve_psor(p, tight_psor());
            const VISolution b = solve_pdas(p, tight_pdas());
            REQUIRE(a.converged);
            REQUIRE(b.converged);
            CHECK(h1_norm(space, Vector(a.u - b.u)) <= 1e-8);
        }
    }
}

TEST_CASE("state norm is bounded under refinement")
{
    Mesh m = unit_square(2);
    std::vector<double> norms;
    for (int level = 0; level <= 4; ++level) {
        const FemSpace space(m);
        const VISolution s = solve_pdas(problem_for(space, -20.0, 1.0, constant(1.0)));
        REQUIRE(s.converged);
        norms.push_back(h1_norm(space, s.u));
        m = refine_uniform(m);
    }
    const auto [lo, hi] = std::minmax_element(norms.begin(), norms.end());
    CHECK(*hi / *lo < 10.0);
    CHECK(norms.back() <= norms.front() * 1.5);
}

TEST_CASE("state depends Lipschitz-continuously on the control")
{
    const FemSpace space(unit_square(6));
    const double lambda = coercivity_constant(space);
    const Vector flux = assemble_boundary_flux(space.mesh, constant(0.0));
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const Vector g1 = uniform_vector(rng, space.size(), -10, 10);
        const Vector g2 = uniform_vector(rng, space.size(), -10, 10);
        const VISolution s1 = solve_pdas(make_obstacle_problem(space, g1, flux, 1.0), tight_pdas());
        const VISolution s2 = solve_pdas(make_obstacle_problem(space, g2, flux, 1.0), tight_pdas());
        CHECK(h1_norm(space, Vector(s2.u - s1.u)) <= l2_norm(space, Vector(g2 - g1)) / lambda + 1e-9);
    }
}

TEST_CASE("iteration limits report non-convergence")
{
    const FemSpace space(unit_square(8));
    const ObstacleProblem p = problem_for(space, -5.0, 1.0);
    PsorOptions psor;
    psor.max_iter = 2;
    const VISolution a = solve_psor(p, psor);
    CHECK_FALSE(a.converged);
    CHECK(a.iterations == 2);
    CHECK(a.complementarity_residual > psor.tol);

    PdasOptions pdas;
    pdas.max_iter = 1;
    const VISolution b = solve_pdas(p, pdas);
    CHECK_FALSE(b.converged);
}

TEST_CASE("invalid input")
{
    const FemSpace space(unit_square(5));
    const Vector zero = Vector::Zero(space.size());
    CHECK_THROWS_AS(make_obstacle_problem(space, zero, zero, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_obstacle_problem(space, Vector::Zero(3), zero, 1.0), std::invalid_argument);

    const ObstacleProblem p = problem_for(space, 1.0, 1.0);
    PsorOptions bad_omega;
    bad_omega.omega = 2.0;
    CHECK_THROWS_AS(solve_psor(p, bad_omega), std::invalid_argument);
    PdasOptions bad_c;
    bad_c.c = 0.0;
    CHECK_THROWS_AS(solve_pdas(p, bad_c), std::invalid_argument);
    CHECK_THROWS_AS(brute_force_oracle(p), std::invalid_argument);
    Vector negative = Vector::Ones(space.size());
    negative[space.dofs.free_nodes.back()] = -0.1;
    CHECK_THROWS_AS(solve_psor(p, {}, negative), std::invalid_argument);
}

TEST_CASE("solution dump")
{
    const FemSpace space(unit_square(1));
    const ObstacleProblem p = problem_for(space, -1.0, 0.0);
    const VISolution s = solve_pdas(p);
    std::ostringstream os;
    write_solution(os, space.mesh, s);
    CHECK(os.str() == "x,y,u,active\n0,0,0,0\n1,0,0,1\n0,1,0,0\n1,1,0,1\n");
}
