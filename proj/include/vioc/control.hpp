#ifndef VIOC_CONTROL_HPP
#define VIOC_CONTROL_HPP

#include "vioc/vi_solver.hpp"

#include <functional>

namespace vioc {

enum class SolverKind { Psor, Pdas };

SolverKind parse_solver(const std::string& name);
const char* solver_name(SolverKind kind);

struct SolverSettings {
    SolverKind kind = SolverKind::Pdas;
    PsorOptions psor;
    PdasOptions pdas;
};

struct CostParams {
    /// Control weight M > 0.
    double weight = 1.0;
    /// Heat flux on Gamma2.
    std::function<double(const Point&)> flux = [](const Point&) { return 0.0; };
    /// Temperature on Gamma1.
    double dirichlet = 1.0;
};

/// Discrete state map g -> u_hg and the cost J_h on one mesh.
class ControlProblem {
public:
    ControlProblem(const FemSpace& space, CostParams params, SolverSettings solver = {});

    const FemSpace& space() const { return *space_; }
    const CostParams& params() const { return params_; }
    const SolverSettings& solver() const { return solver_; }
    const Vector& flux_load() const { return flux_load_; }

    ObstacleProblem obstacle(const ControlField& g) const;

    /// Solves the state inequality; throws SolverError when the solver does not converge.
    /// `warm_active` seeds the active-set method.
    VISolution solve_state(const ControlField& g, const std::vector<Index>& warm_active = {}) const;

private:
    const FemSpace* space_;
    CostParams params_;
    SolverSettings solver_;
    Vector flux_load_;
};

struct CostReport {
    double cost = 0.0;
    double state_term = 0.0;
    double control_term = 0.0;
    VISolution state;
};

CostReport evaluate_cost(const ControlProblem& problem, const ControlField& g,
                         const std::vector<Index>& warm_active = {});

/// H-gradient of J_h with the active set of `state` frozen: M g + E(p), where
/// p solves the stiffness system on the inactive free nodes with right-hand
/// side M_H u and E extends by zero.
ControlField gradient(const ControlProblem& problem, const ControlField& g, const VISolution& state);
ControlField gradient(const ControlProblem& problem, const ControlField& g);

struct OptimizerOptions {
    /// Absolute tolerance on the H-norm of the gradient; <= 0 selects
    /// 1e-8 * max(1, initial gradient norm).
    double gtol = 0.0;
    Index max_iter = 500;
    double armijo = 1e-4;
    double backtrack = 0.5;
    Index memory = 10;
};

struct TraceRow {
    Index iteration = 0;
    double cost = 0.0;
    double gradient_norm = 0.0;
    double step = 0.0;
    Index active_size = 0;
};

struct OptimizerResult {
    ControlField control;
    VISolution state;
    double cost = 0.0;
    double gradient_norm = 0.0;
    double gtol = 0.0;
    std::vector<TraceRow> history;
    bool converged = false;
    std::string message;
};

/// Limited-memory quasi-Newton descent in the H inner product with Armijo backtracking.
OptimizerResult optimize(const ControlProblem& problem, const ControlField& g0, const OptimizerOptions& options = {});

struct ConvexCombination {
    /// mu u_hg1 + (1 - mu) u_hg2.
    StateField combined_states;
    /// State of the combined control mu g1 + (1 - mu) g2.
    StateField state_of_combined;
};

ConvexCombination convex_combination_states(const ControlProblem& problem, const ControlField& g1,
                                            const ControlField& g2, double mu);

/// C = ||u_h0||_H / lambda_h, used in J_h(g) >= (M/2) ||g||_H^2 - C ||g||_H.
double cost_lower_bound_constant(const ControlProblem& problem, double coercivity);

/// CSV "iteration,cost,gradient_norm,step,active_size".
void write_trace(std::ostream& os, const std::vector<TraceRow>& history);

} // namespace vioc

#endif // VIOC_CONTROL_HPP
