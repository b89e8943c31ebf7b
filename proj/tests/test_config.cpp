#include "test_support.hpp"
#include "vioc/config.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>

using namespace vioc;
using namespace vioc::testing;

namespace {

std::string invalid_field(const std::string& yaml)
{
    try {
        validate(parse_config(yaml));
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "";
}

} // namespace

TEST_CASE("empty document gives the defaults")
{
    const RunConfig c = parse_config("");
    CHECK(c.nx == 4);
    CHECK(c.b == 1.0);
    CHECK(c.weight == 1.0);
    CHECK(c.solver.kind == SolverKind::Pdas);
    CHECK(c.seed == 42);
    CHECK(c.mu_grid.size() == 9);
    CHECK_NOTHROW(validate(c));
}

TEST_CASE("full document")
{
    const RunConfig c = parse_config(R"(
domain: {x0: 0, x1: 2, y0: -1, y1: 1, nx: 6, ny: 3, gamma1: [left, top]}
problem: {b: 0.05, M: 10}
q: {kind: affine, value: 1, slope: [2, 3]}
g: {kind: gaussian, value: -1, amplitude: 5, center: [1, 0], width: 0.2}
solver: {method: psor, tol: 1e-9, omega: 1.2, psor_max_iter: 1000}
optimizer: {gtol: 1e-6, max_iter: 50, memory: 4, g0: {kind: constant, value: 2}}
experiment: {levels: 5, oracle_extra_levels: 2, trials: 7, mu_grid: [0.25, 0.75], seed: 9, amplitude: 3}
output: {dir: results}
)");
    CHECK(c.domain.x1 == 2.0);
    CHECK(c.nx == 6);
    CHECK(c.gamma1 == std::vector<std::string>{"left", "top"});
    CHECK(c.b == 0.05);
    CHECK(c.weight == 10.0);
    CHECK(c.solver.kind == SolverKind::Psor);
    CHECK(c.solver.psor.tol == 1e-9);
    CHECK(c.solver.psor.omega == 1.2);
    CHECK(c.solver.psor.max_iter == 1000);
    CHECK(c.optimizer.memory == 4);
    CHECK(c.g0.value == 2.0);
    CHECK(c.mu_grid == std::vector<double>{0.25, 0.75});
    CHECK(c.seed == 9);
    CHECK(c.out_dir == "results");
    CHECK_NOTHROW(validate(c));

    const ScalarFunction q = make_function(c.q);
    CHECK(q(Point(1.0, 1.0)) == 6.0);
    const ScalarFunction g = make_function(c.g);
    CHECK(g(Point(1.0, 0.0)) == doctest::Approx(4.0));

    const Mesh m = c.base_mesh();
    CHECK(m.num_vertices() == 7 * 4);
    CHECK(c.gamma1_sides() == SideSet{Side::Left, Side::Top});
}

TEST_CASE("round trip through YAML")
{
    RunConfig c = parse_config("problem: {M: 0.3}\ng: {kind: affine, value: 1, slope: [0.1, 0.2]}\n");
    const std::string text = to_yaml(c);
    CHECK(to_yaml(parse_config(text)) == text);
    CHECK(parse_config(text).weight == 0.3);
}

TEST_CASE("comma separated side list")
{
    CHECK(parse_config("domain: {gamma1: \"left,bottom\"}").gamma1 == std::vector<std::string>{"left", "bottom"});
}

TEST_CASE("validation names the offending field")
{
    CHECK(invalid_field("problem: {M: -1}") == "problem.M");
    CHECK(invalid_field("problem: {M: 0}") == "problem.M");
    CHECK(invalid_field("problem: {b: -0.5}") == "problem.b");
    CHECK(invalid_field("problem: {b: .nan}") == "problem.b");
    CHECK(invalid_field("domain: {x0: 1, x1: 0}") == "domain.x1");
    CHECK(invalid_field("domain: {nx: 0}") == "domain.nx");
    CHECK(invalid_field("domain: {gamma1: [inside]}") == "domain.gamma1");
    CHECK(invalid_field("solver: {omega: 2.5}") == "solver.omega");
    CHECK(invalid_field("solver: {method: newton}") == "solver.method");
    CHECK(invalid_field("q: {kind: file, path: x.txt}") == "q.kind");
    CHECK(invalid_field("g: {kind: spline}") == "g.kind");
    CHECK(invalid_field("g: {kind: gaussian, width: 0}") == "g.width");
    CHECK(invalid_field("experiment: {levels: 2}") == "experiment.levels");
    CHECK(invalid_field("experiment: {mu_grid: [0.5, 1.5]}") == "experiment.mu_grid");
    CHECK(invalid_field("problem: {M: abc}") == "problem.M");
    CHECK(invalid_field("[1, 2") == "config");
    CHECK(invalid_field("- 1\n- 2\n") == "config");
    CHECK(invalid_field("problem: {b: 0}") == "");
}

TEST_CASE("nodal control files")
{
    const Mesh m = unit_square(1);
    const std::string path = "test_config_nodal.txt";
    {
        std::ofstream out(path);
        out << "1 2\n3 4\n";
    }
    FieldSpec spec;
    spec.kind = "file";
    spec.path = path;
    const Vector v = make_field(spec, m);
    CHECK(v == (Vector(4) << 1, 2, 3, 4).finished());
    CHECK_THROWS_AS(make_field(spec, unit_square(2)), ConfigError);
    {
        std::ofstream out(path);
        out << "1 2 x 4\n";
    }
    CHECK_THROWS_AS(make_field(spec, m), ConfigError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(make_field(spec, m), ConfigError);
    CHECK_THROWS_AS(load_config("does/not/exist.yaml"), ConfigError);
}
