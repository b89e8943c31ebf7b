#include "vioc/vi_solver.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <ostream>

namespace vioc {

namespace {

constexpr double kOracleTol = 1e-11;

std::vector<Index> inactive_nodes(const DofMap& dofs, const std::vector<bool>& active)
{
    std::vector<Index> inactive;
    for (Index k = 0; k < dofs.num_free(); ++k)
        if (!active[static_cast<std::size_t>(k)]) inactive.push_back(dofs.free_nodes[static_cast<std::size_t>(k)]);
    return inactive;
}

std::vector<bool> active_mask(const DofMap& dofs, const std::vector<Index>& active_vertices)
{
    std::vector<bool> mask(static_cast<std::size_t>(dofs.num_free()), false);
    for (Index v : active_vertices) {
        const Index k = dofs.free_index.at(static_cast<std::size_t>(v));
        if (k < 0) throw std::invalid_argument("active set contains a Dirichlet node");
        mask[static_cast<std::size_t>(k)] = true;
    }
    return mask;
}

Vector dirichlet_lift(const ObstacleProblem& problem)
{
    Vector u = Vector::Zero(problem.space->size());
    for (Index v : problem.dofs().dirichlet_nodes) u[v] = problem.dirichlet_value;
    return u;
}

std::vector<Index> zero_free_nodes(const DofMap& dofs, const Vector& u)
{
    std::vector<Index> active;
    for (Index v : dofs.free_nodes)
        if (u[v] <= 0.0) active.push_back(v);
    return active;
}

} // namespace

double ObstacleProblem::residual_scale() const
{
    return std::max(1.0, load.lpNorm<Eigen::Infinity>());
}

ObstacleProblem make_obstacle_problem(const FemSpace& space, const ControlField& g,
                                      const Vector& flux_load, double b)
{
    if (!(b >= 0.0) || !std::isfinite(b))
        throw std::invalid_argument("obstacle problem: Dirichlet value b must be finite and >= 0");
    if (g.size() != space.size() || flux_load.size() != space.size())
        throw std::invalid_argument("obstacle problem: control or flux size does not match mesh");
    if (!g.allFinite() || !flux_load.allFinite())
        throw std::domain_error("obstacle problem: non-finite data");
    ObstacleProblem problem;
    problem.space = &space;
    problem.load = assemble_control_load(space.mass, g) - flux_load;
    problem.dirichlet_value = b;
    return problem;
}

Vector multiplier(const ObstacleProblem& problem, const Vector& u)
{
    return problem.stiffness() * u - problem.load;
}

double complementarity_residual(const ObstacleProblem& problem, const Vector& u)
{
    const Vector r = multiplier(problem, u);
    const double scale = problem.residual_scale();
    double worst = 0.0;
    for (Index v : problem.dofs().free_nodes)
        worst = std::max(worst, std::abs(std::min(u[v], r[v] / scale)));
    return worst;
}

Vector feasible_field(const ObstacleProblem& problem, const Vector& free_values)
{
    if (free_values.size() != problem.dofs().num_free())
        throw std::invalid_argument("feasible_field: expected one value per free node");
    Vector u = dirichlet_lift(problem);
    for (Index k = 0; k < free_values.size(); ++k)
        u[problem.dofs().free_nodes[static_cast<std::size_t>(k)]] = std::max(0.0, free_values[k]);
    return u;
}

VISolution solve_psor(const ObstacleProblem& problem, const PsorOptions& options,
                      const std::optional<Vector>& start)
{
    if (!(options.omega > 0.0 && options.omega < 2.0))
        throw std::invalid_argument("solve_psor: omega must lie in (0, 2)");
    if (!(options.tol > 0.0)) throw std::invalid_argument("solve_psor: tol must be positive");

    const DofMap& dofs = problem.dofs();
    const SparseMatrix& a = problem.stiffness();
    const Index max_iter = options.max_iter > 0 ? options.max_iter : 50 * std::max<Index>(1, dofs.num_free());

    VISolution sol;
    if (start) {
        if (start->size() != problem.space->size())
            throw std::invalid_argument("solve_psor: start has wrong size");
        sol.u = *start;
        for (Index v : dofs.dirichlet_nodes) sol.u[v] = problem.dirichlet_value;
        for (Index v : dofs.free_nodes)
            if (!(sol.u[v] >= 0.0)) throw std::invalid_argument("solve_psor: start is infeasible");
    } else {
        sol.u = Vector::Constant(problem.space->size(), problem.dirichlet_value);
    }

    // Column i of the symmetric stiffness matrix is row i.
    std::vector<double> diagonal(static_cast<std::size_t>(a.cols()), 0.0);
    for (Index c = 0; c < a.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(a, c); it; ++it)
            if (it.row() == c) diagonal[static_cast<std::size_t>(c)] = it.value();

    sol.complementarity_residual = complementarity_residual(problem, sol.u);
    while (sol.complementarity_residual > options.tol && sol.iterations < max_iter) {
        for (Index i : dofs.free_nodes) {
            double off = 0.0;
            for (SparseMatrix::InnerIterator it(a, i); it; ++it)
                if (it.row() != i) off += it.value() * sol.u[it.row()];
            const double gauss_seidel = (problem.load[i] - off) / diagonal[static_cast<std::size_t>(i)];
            sol.u[i] = std::max(0.0, sol.u[i] + options.omega * (gauss_seidel - sol.u[i]));
        }
        ++sol.iterations;
        sol.complementarity_residual = complementarity_residual(problem, sol.u);
    }
    sol.converged = sol.complementarity_residual <= options.tol;
    sol.active_set = zero_free_nodes(dofs, sol.u);
    return sol;
}

Vector solve_with_active_set(const ObstacleProblem& problem, const std::vector<Index>& active)
{
    const DofMap& dofs = problem.dofs();
    const std::vector<Index> inactive = inactive_nodes(dofs, active_mask(dofs, active));
    Vector u = dirichlet_lift(problem);
    if (inactive.empty()) return u;

    const SparseMatrix a_ii = restrict_operator(problem.stiffness(), inactive, inactive);
    const Vector rhs = gather(Vector(problem.load - problem.stiffness() * u), inactive);
    Eigen::SimplicialLDLT<SparseMatrix> solver(a_ii);
    if (solver.info() != Eigen::Success)
        throw SolverError("reduced system factorization failed");
    const Vector u_i = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !u_i.allFinite())
        throw SolverError("reduced system solve failed");
    scatter(u_i, inactive, u);
    return u;
}

VISolution solve_pdas(const ObstacleProblem& problem, const PdasOptions& options,
                      const std::vector<Index>& initial_active)
{
    if (!(options.c > 0.0)) throw std::invalid_argument("solve_pdas: c must be positive");
    const DofMap& dofs = problem.dofs();

    VISolution sol;
    std::vector<Index> active = initial_active;
    std::sort(active.begin(), active.end());
    while (sol.iterations < options.max_iter) {
        sol.u = solve_with_active_set(problem, active);
        ++sol.iterations;

        const Vector lambda = multiplier(problem, sol.u);
        std::vector<Index> next;
        for (Index v : dofs.free_nodes) {
            const bool is_active = std::binary_search(active.begin(), active.end(), v);
            const double lam = is_active ? lambda[v] : 0.0;
            // Ties go to the inactive set.
            if (sol.u[v] - lam / options.c < 0.0) next.push_back(v);
        }
        if (next == active) {
            sol.active_set = std::move(active);
            sol.complementarity_residual = complementarity_residual(problem, sol.u);
            sol.converged = sol.complementarity_residual <= options.tol;
            return sol;
        }
        active = std::move(next);
    }
    sol.active_set = std::move(active);
    sol.complementarity_residual = complementarity_residual(problem, sol.u);
    sol.converged = false;
    return sol;
}

std::vector<std::uint32_t> kkt_partitions(const ObstacleProblem& problem)
{
    const DofMap& dofs = problem.dofs();
    const Index n = dofs.num_free();
    if (n > 16) throw std::invalid_argument("kkt_partitions: more than 16 free nodes");

    const Eigen::MatrixXd a_ff = Eigen::MatrixXd(restrict_operator(problem.stiffness(), dofs.free_nodes, dofs.free_nodes));
    const Vector lift = dirichlet_lift(problem);
    const Vector rhs = gather(Vector(problem.load - problem.stiffness() * lift), dofs.free_nodes);
    const double scale = problem.residual_scale();

    std::vector<std::uint32_t> passing;
    const std::uint32_t count = std::uint32_t{1} << n;
    for (std::uint32_t mask = 0; mask < count; ++mask) {
        std::vector<Index> inactive;
        for (Index k = 0; k < n; ++k)
            if (!(mask & (std::uint32_t{1} << k))) inactive.push_back(k);

        Vector u_f = Vector::Zero(n);
        if (!inactive.empty()) {
            const auto m = static_cast<Index>(inactive.size());
            Eigen::MatrixXd sub(m, m);
            Vector sub_rhs(m);
            for (Index r = 0; r < m; ++r) {
                sub_rhs[r] = rhs[inactive[static_cast<std::size_t>(r)]];
                for (Index c = 0; c < m; ++c)
                    sub(r, c) = a_ff(inactive[static_cast<std::size_t>(r)], inactive[static_cast<std::size_t>(c)]);
            }
            const Vector sub_u = sub.ldlt().solve(sub_rhs);
            for (Index r = 0; r < m; ++r) u_f[inactive[static_cast<std::size_t>(r)]] = sub_u[r];
        }
        const Vector lambda = a_ff * u_f - rhs;

        bool ok = true;
        for (Index k = 0; k < n && ok; ++k) {
            if (mask & (std::uint32_t{1} << k))
                ok = lambda[k] >= -kOracleTol * scale;
            else
                ok = u_f[k] >= -kOracleTol;
        }
        if (ok) passing.push_back(mask);
    }
    return passing;
}

VISolution brute_force_oracle(const ObstacleProblem& problem)
{
    const DofMap& dofs = problem.dofs();
    const auto passing = kkt_partitions(problem);
    if (passing.empty()) throw OracleError("brute_force_oracle: no partition satisfies the KKT conditions");

    const auto to_active = [&](std::uint32_t mask) {
        std::vector<Index> active;
        for (Index k = 0; k < dofs.num_free(); ++k)
            if (mask & (std::uint32_t{1} << k)) active.push_back(dofs.free_nodes[static_cast<std::size_t>(k)]);
        return active;
    };

    VISolution sol;
    sol.active_set = to_active(passing.front());
    sol.u = solve_with_active_set(problem, sol.active_set);
    // Degenerate nodes (u = 0 and zero multiplier) admit several partitions with one state.
    for (std::size_t k = 1; k < passing.size(); ++k) {
        const Vector other = solve_with_active_set(problem, to_active(passing[k]));
        if ((other - sol.u).lpNorm<Eigen::Infinity>() > 1e-9)
            throw OracleError("brute_force_oracle: two KKT partitions give different states");
    }
    sol.iterations = static_cast<Index>(std::uint32_t{1} << dofs.num_free());
    sol.complementarity_residual = complementarity_residual(problem, sol.u);
    sol.converged = true;
    return sol;
}

double verify_vi(const ObstacleProblem& problem, const Vector& u, const std::vector<Vector>& probes)
{
    const DofMap& dofs = problem.dofs();
    const Vector r = multiplier(problem, u);
    double worst = std::numeric_limits<double>::infinity();
    for (const Vector& v : probes) {
        if (v.size() != u.size()) throw std::invalid_argument("verify_vi: probe has wrong size");
        for (Index d : dofs.dirichlet_nodes)
            if (v[d] != problem.dirichlet_value)
                throw std::invalid_argument("verify_vi: probe violates the Gamma1 condition");
        for (Index f : dofs.free_nodes)
            if (!(v[f] >= 0.0)) throw std::invalid_argument("verify_vi: probe is negative");
        worst = std::min(worst, r.dot(v - u));
    }
    return worst;
}

void write_solution(std::ostream& os, const Mesh& mesh, const VISolution& solution)
{
    std::vector<bool> active(static_cast<std::size_t>(mesh.num_vertices()), false);
    for (Index v : solution.active_set) active[static_cast<std::size_t>(v)] = true;
    const auto old_precision = os.precision(17);
    os << "x,y,u,active\n";
    for (Index v = 0; v < mesh.num_vertices(); ++v) {
        const Point& p = mesh.vertices[static_cast<std::size_t>(v)];
        os << p.x() << ',' << p.y() << ',' << solution.u[v] << ',' << (active[static_cast<std::size_t>(v)] ? 1 : 0)
           << '\n';
    }
    os.precision(old_precision);
}

} // namespace vioc
