#ifndef VIOC_VI_SOLVER_HPP
#define VIOC_VI_SOLVER_HPP

#include "vioc/assembly.hpp"

#include <optional>

namespace vioc {

/// Discrete obstacle problem: find u with u = b on Gamma1, u >= 0 on the free
/// nodes and (A u - f) . (v - u) >= 0 for every such v, where f = M_H g - F_q.
struct ObstacleProblem {
    const FemSpace* space = nullptr;
    Vector load;
    double dirichlet_value = 0.0;

    const SparseMatrix& stiffness() const { return space->stiffness; }
    const DofMap& dofs() const { return space->dofs; }
    /// max(1, ||f||_inf); residual tolerances are relative to it.
    double residual_scale() const;
};

/// Assembles f = M_H g - F_q. Throws std::invalid_argument if b < 0 or sizes mismatch.
ObstacleProblem make_obstacle_problem(const FemSpace& space, const ControlField& g,
                                      const Vector& flux_load, double b);

struct VISolution {
    StateField u;
    /// Free vertices where u sits on the obstacle.
    std::vector<Index> active_set;
    double complementarity_residual = 0.0;
    Index iterations = 0;
    bool converged = false;
};

/// Contact multiplier A u - f. Nonnegative on the active set, zero on inactive free nodes.
Vector multiplier(const ObstacleProblem& problem, const Vector& u);

/// max over free nodes of |min(u_i, (A u - f)_i / scale)|.
double complementarity_residual(const ObstacleProblem& problem, const Vector& u);

/// Feasible field equal to b on Gamma1 and `free_values` (clipped at 0) elsewhere.
Vector feasible_field(const ObstacleProblem& problem, const Vector& free_values);

struct PsorOptions {
    double omega = 1.5;
    double tol = 1e-10;
    /// 0 selects 50 times the number of free nodes.
    Index max_iter = 0;
};

/// Projected SOR over the free nodes. `start` must be feasible when given.
VISolution solve_psor(const ObstacleProblem& problem, const PsorOptions& options = {},
                      const std::optional<Vector>& start = std::nullopt);

struct PdasOptions {
    double c = 1.0;
    double tol = 1e-10;
    Index max_iter = 100;
};

/// Primal-dual active set iteration starting from `initial_active` (free vertex ids).
VISolution solve_pdas(const ObstacleProblem& problem, const PdasOptions& options = {},
                      const std::vector<Index>& initial_active = {});

/// Solution with u = 0 on `active` and the equilibrium equations on the remaining free nodes.
Vector solve_with_active_set(const ObstacleProblem& problem, const std::vector<Index>& active);

/// All active sets (as bitmasks over free-node positions) whose reduced
/// solution satisfies the KKT sign conditions to 1e-11. At most 16 free nodes.
std::vector<std::uint32_t> kkt_partitions(const ObstacleProblem& problem);

/// Exhaustive enumeration of active sets. Throws OracleError when no
/// partition passes or two passing partitions give different states.
VISolution brute_force_oracle(const ObstacleProblem& problem);

/// min over probes of (A u - f) . (v - u). Throws std::invalid_argument on an
/// infeasible probe.
double verify_vi(const ObstacleProblem& problem, const Vector& u, const std::vector<Vector>& probes);

/// CSV "x,y,u,active" per vertex.
void write_solution(std::ostream& os, const Mesh& mesh, const VISolution& solution);

} // namespace vioc

#endif // VIOC_VI_SOLVER_HPP
