#include "vioc/control.hpp"

#include <Eigen/SparseCholesky>

#include <deque>
#include <limits>
#include <ostream>

namespace vioc {

SolverKind parse_solver(const std::string& name)
{
    if (name == "psor") return SolverKind::Psor;
    if (name == "pdas") return SolverKind::Pdas;
    throw std::invalid_argument("unknown solver '" + name + "' (expected psor or pdas)");
}

const char* solver_name(SolverKind kind)
{
    return kind == SolverKind::Psor ? "psor" : "pdas";
}

ControlProblem::ControlProblem(const FemSpace& space, CostParams params, SolverSettings solver)
    : space_(&space), params_(std::move(params)), solver_(solver)
{
    if (!(params_.weight > 0.0) || !std::isfinite(params_.weight))
        throw std::invalid_argument("control weight M must be positive and finite");
    flux_load_ = assemble_boundary_flux(space.mesh, params_.flux);
}

ObstacleProblem ControlProblem::obstacle(const ControlField& g) const
{
    return make_obstacle_problem(*space_, g, flux_load_, params_.dirichlet);
}

VISolution ControlProblem::solve_state(const ControlField& g, const std::vector<Index>& warm_active) const
{
    const ObstacleProblem problem = obstacle(g);
    VISolution sol = solver_.kind == SolverKind::Pdas ? solve_pdas(problem, solver_.pdas, warm_active)
                                                      : solve_psor(problem, solver_.psor);
    if (!sol.converged) {
        // A stale warm start can cycle; retry cold before giving up.
        if (solver_.kind == SolverKind::Pdas && !warm_active.empty()) sol = solve_pdas(problem, solver_.pdas);
        if (!sol.converged)
            throw SolverError(std::string(solver_name(solver_.kind)) + " did not converge (residual " +
                              std::to_string(sol.complementarity_residual) + ")");
    }
    return sol;
}

CostReport evaluate_cost(const ControlProblem& problem, const ControlField& g, const std::vector<Index>& warm_active)
{
    CostReport report;
    report.state = problem.solve_state(g, warm_active);
    const FemSpace& space = problem.space();
    report.state_term = 0.5 * l2_inner(space, report.state.u, report.state.u);
    report.control_term = 0.5 * problem.params().weight * l2_inner(space, g, g);
    report.cost = report.state_term + report.control_term;
    return report;
}

ControlField gradient(const ControlProblem& problem, const ControlField& g, const VISolution& state)
{
    const FemSpace& space = problem.space();
    std::vector<bool> active(static_cast<std::size_t>(space.size()), false);
    for (Index v : state.active_set) active[static_cast<std::size_t>(v)] = true;
    std::vector<Index> inactive;
    for (Index v : space.dofs.free_nodes)
        if (!active[static_cast<std::size_t>(v)]) inactive.push_back(v);

    ControlField grad = problem.params().weight * g;
    if (inactive.empty()) return grad;

    const SparseMatrix a_ii = restrict_operator(space.stiffness, inactive, inactive);
    Eigen::SimplicialLDLT<SparseMatrix> solver(a_ii);
    if (solver.info() != Eigen::Success) throw SolverError("gradient: adjoint factorization failed");
    const Vector adjoint = solver.solve(gather(Vector(space.mass * state.u), inactive));
    if (solver.info() != Eigen::Success || !adjoint.allFinite())
        throw SolverError("gradient: adjoint solve failed");
    for (std::size_t k = 0; k < inactive.size(); ++k) grad[inactive[k]] += adjoint[static_cast<Index>(k)];
    return grad;
}

ControlField gradient(const ControlProblem& problem, const ControlField& g)
{
    return gradient(problem, g, problem.solve_state(g));
}

OptimizerResult optimize(const ControlProblem& problem, const ControlField& g0, const OptimizerOptions& options)
{
    const FemSpace& space = problem.space();
    if (g0.size() != space.size()) throw std::invalid_argument("optimize: initial control has wrong size");
    const double weight = problem.params().weight;
    const auto inner = [&](const Vector& a, const Vector& b) { return l2_inner(space, a, b); };

    OptimizerResult result;
    result.control = g0;
    CostReport current = evaluate_cost(problem, g0);
    Vector grad = gradient(problem, g0, current.state);
    double gnorm = std::sqrt(inner(grad, grad));
    result.gtol = options.gtol > 0.0 ? options.gtol : 1e-8 * std::max(1.0, gnorm);
    result.history.push_back({0, current.cost, gnorm, 0.0, static_cast<Index>(current.state.active_set.size())});

    struct Pair {
        Vector s, y;
        double rho;
    };
    std::deque<Pair> memory;
    const double eps = std::numeric_limits<double>::epsilon();

    Index it = 0;
    while (gnorm > result.gtol && it < options.max_iter) {
        Vector direction;
        if (memory.empty()) {
            direction = -grad / weight;
        } else {
            Vector q = grad;
            std::vector<double> alpha(memory.size());
            for (std::size_t k = memory.size(); k-- > 0;) {
                alpha[k] = memory[k].rho * inner(memory[k].s, q);
                q -= alpha[k] * memory[k].y;
            }
            const Pair& last = memory.back();
            q *= 1.0 / (last.rho * inner(last.y, last.y));
            for (std::size_t k = 0; k < memory.size(); ++k) {
                const double beta = memory[k].rho * inner(memory[k].y, q);
                q += (alpha[k] - beta) * memory[k].s;
            }
            direction = -q;
        }
        double slope = inner(grad, direction);
        if (!(slope < 0.0)) {
            memory.clear();
            direction = -grad / weight;
            slope = inner(grad, direction);
        }

        double step = 1.0;
        bool accepted = false;
        CostReport trial;
        for (int k = 0; k < 80; ++k) {
            trial = evaluate_cost(problem, result.control + step * direction, current.state.active_set);
            const bool armijo = trial.cost <= current.cost + options.armijo * step * slope;
            // Below rounding level of J only monotonicity can be certified.
            const bool rounding = step * std::abs(slope) <= 1e3 * eps * std::abs(current.cost) &&
                                  trial.cost <= current.cost;
            if (armijo || rounding) {
                accepted = true;
                break;
            }
            step *= options.backtrack;
        }
        if (!accepted) {
            if (!memory.empty()) {
                memory.clear();
                continue;
            }
            result.message = "line search failed to decrease the cost";
            break;
        }

        ++it;
        const Vector s = step * direction;
        result.control += s;
        const Vector new_grad = gradient(problem, result.control, trial.state);
        const Vector y = new_grad - grad;
        const double sy = inner(s, y);
        if (sy > 1e-12 * std::sqrt(inner(s, s) * inner(y, y))) {
            memory.push_back({s, y, 1.0 / sy});
            if (static_cast<Index>(memory.size()) > options.memory) memory.pop_front();
        }
        current = std::move(trial);
        grad = new_grad;
        gnorm = std::sqrt(inner(grad, grad));
        result.history.push_back({it, current.cost, gnorm, step, static_cast<Index>(current.state.active_set.size())});
    }

    result.converged = gnorm <= result.gtol;
    if (!result.converged && result.message.empty()) result.message = "iteration limit reached";
    if (result.converged) result.message = "gradient tolerance reached";
    result.state = std::move(current.state);
    result.cost = current.cost;
    result.gradient_norm = gnorm;
    return result;
}

ConvexCombination convex_combination_states(const ControlProblem& problem, const ControlField& g1,
                                            const ControlField& g2, double mu)
{
    if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("convex combination weight must lie in [0, 1]");
    const VISolution s1 = problem.solve_state(g1);
    const VISolution s2 = problem.solve_state(g2);
    ConvexCombination out;
    out.combined_states = mu * s1.u + (1.0 - mu) * s2.u;
    out.state_of_combined = problem.solve_state(mu * g1 + (1.0 - mu) * g2).u;
    return out;
}

double cost_lower_bound_constant(const ControlProblem& problem, double coercivity)
{
    const VISolution zero = problem.solve_state(ControlField::Zero(problem.space().size()));
    return l2_norm(problem.space(), zero.u) / coercivity;
}

void write_trace(std::ostream& os, const std::vector<TraceRow>& history)
{
    const auto old_precision = os.precision(17);
    os << "iteration,cost,gradient_norm,step,active_size\n";
    for (const auto& row : history)
        os << row.iteration << ',' << row.cost << ',' << row.gradient_norm << ',' << row.step << ','
           << row.active_size << '\n';
    os.precision(old_precision);
}

} // namespace vioc
