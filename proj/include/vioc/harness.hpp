#ifndef VIOC_HARNESS_HPP
#define VIOC_HARNESS_HPP

#include "vioc/control.hpp"

#include <cstdint>
#include <limits>
#include <random>

namespace vioc {

using ScalarFunction = std::function<double(const Point&)>;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ConvergenceRow {
    int level = 0;
    double h = 0.0;
    double error_v = kNaN;
    double error_h = kNaN;
    double cost = kNaN;
    double cost_gap = kNaN;
    double control_distance = kNaN;
    double control_norm = kNaN;
    /// ||u_h0||_H / M, the a-priori bound on the optimal control norm.
    double control_bound = kNaN;
    Index active_size = 0;
};

/// Per-level errors against a fine-mesh reference. Rates are least-squares
/// slopes of log(error) against log(h); NaN when the errors are at round-off.
struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double rate_v = kNaN;
    double rate_h = kNaN;
    double rate_cost = kNaN;
    double rate_control = kNaN;
    int oracle_level = 0;
    double oracle_cost = kNaN;
    std::string reference;
};

/// Experiment failure carrying the rows computed so far.
class ExperimentError : public std::runtime_error {
public:
    ExperimentError(const std::string& what, ConvergenceTable partial)
        : std::runtime_error(what), partial_(std::move(partial))
    {
    }
    const ConvergenceTable& partial() const { return partial_; }

private:
    ConvergenceTable partial_;
};

/// Slope of the least-squares line through (log h, log e) on the last
/// max(3, n - 1) points. NaN if fewer than two usable points or any error
/// below `floor`.
double fitted_rate(const std::vector<double>& hs, const std::vector<double>& errors, double floor = 1e-11);

/// Meshes base, refine(base), ... with `count` entries.
std::vector<Mesh> mesh_hierarchy(const Mesh& base, int count);

/// Solves the state problem on levels 0..levels-1 and on the reference level
/// levels-1+oracle_extra_levels; fills error_v, error_h, cost and cost_gap.
ConvergenceTable run_state_convergence(const Mesh& base, const ScalarFunction& g, const CostParams& params,
                                       const SolverSettings& solver, int levels, int oracle_extra_levels);

/// Same solves as run_state_convergence; the rate of interest is rate_cost.
ConvergenceTable run_cost_convergence(const Mesh& base, const ScalarFunction& g, const CostParams& params,
                                      const SolverSettings& solver, int levels, int oracle_extra_levels);

/// Optimizes on each level and on the reference level; fills control_distance
/// (H), error_v of the optimal states and the control-norm bound columns.
ConvergenceTable run_control_convergence(const Mesh& base, const CostParams& params, const SolverSettings& solver,
                                         int levels, int oracle_extra_levels, const ScalarFunction& g0,
                                         const OptimizerOptions& options = {});

/// Random P1 control with nodal values uniform in [-amplitude, amplitude],
/// optionally averaged once by the mass matrix (normalized by its row sums).
ControlField random_control(const FemSpace& space, std::mt19937_64& rng, double amplitude = 10.0,
                            bool smooth = false);

struct LipschitzReport {
    double coercivity = 0.0;
    double worst_ratio = 0.0;
    std::vector<double> ratios;
    Index resampled = 0;
};

/// max over seeded pairs of lambda_h ||u_hg2 - u_hg1||_V / ||g2 - g1||_H.
LipschitzReport run_lipschitz_check(const ControlProblem& problem, int trials, std::uint64_t seed,
                                    double amplitude = 10.0);

struct ParallelogramResidual {
    double state = 0.0;
    double control = 0.0;
};

/// Residuals of ||mu a + (1-mu) b||_H^2 = mu||a||^2 + (1-mu)||b||^2 - mu(1-mu)||a-b||^2
/// for the states and for the controls.
ParallelogramResidual parallelogram_residual(const ControlProblem& problem, const ControlField& g1,
                                             const ControlField& g2, double mu);

struct OpenProblemRecord {
    int trial = 0;
    double mu = 0.0;
    int level = 0;
    double g1_norm = 0.0;
    double g2_norm = 0.0;
    /// min over nodes of u_h3 - u_h4.
    double order_margin = 0.0;
    /// min over nodes of u_h4.
    double positivity_margin = 0.0;
    /// ||u_h3||_H - ||u_h4||_H.
    double norm_margin = 0.0;
    bool pointwise_violation = false;
    bool norm_violation = false;
    bool violation = false;
    /// Pointwise ordering implies norm ordering on this record.
    bool implication_holds = true;
};

struct OpenProblemSummary {
    int trials = 0;
    Index records = 0;
    Index pointwise_violations = 0;
    Index norm_violations = 0;
    Index implication_failures = 0;
    double worst_order_margin = 0.0;
    double worst_norm_margin = 0.0;
    double tolerance = 1e-9;
};

struct OpenProblemScan {
    std::vector<OpenProblemRecord> records;
    OpenProblemSummary summary;
};

OpenProblemScan run_open_problem_scan(const ControlProblem& problem, int trials, const std::vector<double>& mu_grid,
                                      std::uint64_t seed, double amplitude = 10.0, double tol = 1e-9);

/// True when every entry is smaller than its predecessor.
bool strictly_decreasing(const std::vector<double>& values);

/// Decreasing except for at most one step that does not decrease.
bool decreasing_trend(const std::vector<double>& values);

/// Column of a table, e.g. column(table, &ConvergenceRow::error_v).
std::vector<double> column(const ConvergenceTable& table, double ConvergenceRow::*member);

void write_convergence_csv(std::ostream& os, const ConvergenceTable& table);
void write_open_problem_csv(std::ostream& os, const OpenProblemScan& scan);

} // namespace vioc

#endif // VIOC_HARNESS_HPP
