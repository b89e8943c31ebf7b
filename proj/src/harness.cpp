#include "vioc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace vioc {

namespace {

void fill_rates(ConvergenceTable& table)
{
    std::vector<double> hs, ev, eh, gaps, dist;
    for (const auto& row : table.rows) {
        hs.push_back(row.h);
        ev.push_back(row.error_v);
        eh.push_back(row.error_h);
        gaps.push_back(row.cost_gap);
        dist.push_back(row.control_distance);
    }
    table.rate_v = fitted_rate(hs, ev);
    table.rate_h = fitted_rate(hs, eh);
    table.rate_cost = fitted_rate(hs, gaps);
    table.rate_control = fitted_rate(hs, dist);
}

void write_number(std::ostream& os, double v)
{
    if (std::isnan(v))
        os << "nan";
    else
        os << v;
}

} // namespace

double fitted_rate(const std::vector<double>& hs, const std::vector<double>& errors, double floor)
{
    const std::size_t n = std::min(hs.size(), errors.size());
    const std::size_t window = std::min(n, std::max<std::size_t>(3, n > 0 ? n - 1 : 0));
    if (window < 2) return kNaN;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t k = n - window; k < n; ++k) {
        if (!(errors[k] > floor)) return kNaN;
        const double x = std::log(hs[k]), y = std::log(errors[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double m = static_cast<double>(window);
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

std::vector<Mesh> mesh_hierarchy(const Mesh& base, int count)
{
    std::vector<Mesh> meshes;
    meshes.reserve(static_cast<std::size_t>(std::max(count, 0)));
    if (count <= 0) return meshes;
    meshes.push_back(base);
    for (int k = 1; k < count; ++k) meshes.push_back(refine_uniform(meshes.back()));
    return meshes;
}

ConvergenceTable run_state_convergence(const Mesh& base, const ScalarFunction& g, const CostParams& params,
                                       const SolverSettings& solver, int levels, int oracle_extra_levels)
{
    if (levels < 3) throw std::invalid_argument("run_state_convergence: need at least 3 levels");
    if (oracle_extra_levels < 2) throw std::invalid_argument("run_state_convergence: need at least 2 oracle levels");

    const int oracle_level = levels - 1 + oracle_extra_levels;
    const std::vector<Mesh> meshes = mesh_hierarchy(base, oracle_level + 1);

    const FemSpace oracle_space(meshes.back());
    const ControlProblem oracle_problem(oracle_space, params, solver);
    const CostReport oracle = evaluate_cost(oracle_problem, interpolate(oracle_space.mesh, g));

    ConvergenceTable table;
    table.oracle_level = oracle_level;
    table.oracle_cost = oracle.cost;
    table.reference = "state solution on refinement level " + std::to_string(oracle_level);

    for (int level = 0; level < levels; ++level) {
        const FemSpace space(meshes[static_cast<std::size_t>(level)]);
        const ControlProblem problem(space, params, solver);
        const CostReport report = evaluate_cost(problem, interpolate(space.mesh, g));
        const Vector error = prolongate(space.mesh, report.state.u, oracle_space.mesh) - oracle.state.u;

        ConvergenceRow row;
        row.level = level;
        row.h = space.mesh.h;
        row.error_v = h1_norm(oracle_space, error);
        row.error_h = l2_norm(oracle_space, error);
        row.cost = report.cost;
        row.cost_gap = std::abs(report.cost - oracle.cost);
        row.active_size = static_cast<Index>(report.state.active_set.size());
        table.rows.push_back(row);
    }
    fill_rates(table);
    return table;
}

ConvergenceTable run_cost_convergence(const Mesh& base, const ScalarFunction& g, const CostParams& params,
                                      const SolverSettings& solver, int levels, int oracle_extra_levels)
{
    ConvergenceTable table = run_state_convergence(base, g, params, solver, levels, oracle_extra_levels);
    table.reference = "cost on refinement level " + std::to_string(table.oracle_level);
    return table;
}

ConvergenceTable run_control_convergence(const Mesh& base, const CostParams& params, const SolverSettings& solver,
                                         int levels, int oracle_extra_levels, const ScalarFunction& g0,
                                         const OptimizerOptions& options)
{
    if (levels < 1) throw std::invalid_argument("run_control_convergence: need at least 1 level");
    if (oracle_extra_levels < 1)
        throw std::invalid_argument("run_control_convergence: need at least 1 oracle level");

    const int oracle_level = levels - 1 + oracle_extra_levels;
    const std::vector<Mesh> meshes = mesh_hierarchy(base, oracle_level + 1);

    ConvergenceTable table;
    table.oracle_level = oracle_level;
    table.reference = "optimal control on refinement level " + std::to_string(oracle_level);

    const auto run_level = [&](const FemSpace& space, ConvergenceRow& row) {
        const ControlProblem problem(space, params, solver);
        OptimizerResult opt = optimize(problem, interpolate(space.mesh, g0), options);
        const VISolution zero = problem.solve_state(ControlField::Zero(space.size()));
        row.level = space.mesh.level;
        row.h = space.mesh.h;
        row.cost = opt.cost;
        row.control_norm = l2_norm(space, opt.control);
        row.control_bound = l2_norm(space, zero.u) / params.weight;
        row.active_size = static_cast<Index>(opt.state.active_set.size());
        if (!opt.converged)
            throw ExperimentError("optimizer did not converge on level " + std::to_string(space.mesh.level) + ": " +
                                      opt.message,
                                  table);
        return opt;
    };

    const FemSpace oracle_space(meshes.back());
    ConvergenceRow oracle_row;
    const OptimizerResult oracle = run_level(oracle_space, oracle_row);
    table.oracle_cost = oracle.cost;

    for (int level = 0; level < levels; ++level) {
        const FemSpace space(meshes[static_cast<std::size_t>(level)]);
        ConvergenceRow row;
        const OptimizerResult opt = run_level(space, row);
        const Vector du = prolongate(space.mesh, opt.state.u, oracle_space.mesh) - oracle.state.u;
        const Vector dg = prolongate(space.mesh, opt.control, oracle_space.mesh) - oracle.control;
        row.error_v = h1_norm(oracle_space, du);
        row.error_h = l2_norm(oracle_space, du);
        row.control_distance = l2_norm(oracle_space, dg);
        row.cost_gap = std::abs(opt.cost - oracle.cost);
        table.rows.push_back(row);
    }
    fill_rates(table);
    return table;
}

ControlField random_control(const FemSpace& space, std::mt19937_64& rng, double amplitude, bool smooth)
{
    std::uniform_real_distribution<double> dist(-amplitude, amplitude);
    ControlField g(space.size());
    for (Index i = 0; i < g.size(); ++i) g[i] = dist(rng);
    if (smooth) {
        const Vector row_sums = space.mass * Vector::Ones(space.size());
        g = (space.mass * g).cwiseQuotient(row_sums);
    }
    return g;
}

LipschitzReport run_lipschitz_check(const ControlProblem& problem, int trials, std::uint64_t seed, double amplitude)
{
    if (trials < 1) throw std::invalid_argument("run_lipschitz_check: need at least one trial");
    const FemSpace& space = problem.space();
    std::mt19937_64 rng(seed);

    LipschitzReport report;
    report.coercivity = coercivity_constant(space);
    while (static_cast<int>(report.ratios.size()) < trials) {
        const ControlField g1 = random_control(space, rng, amplitude);
        const ControlField g2 = random_control(space, rng, amplitude);
        const double dg = l2_norm(space, g2 - g1);
        if (!(dg > 0.0)) {
            if (++report.resampled > 1000) throw std::invalid_argument("run_lipschitz_check: controls never differ");
            continue;
        }
        const VISolution u1 = problem.solve_state(g1);
        const VISolution u2 = problem.solve_state(g2);
        const double ratio = report.coercivity * h1_norm(space, u2.u - u1.u) / dg;
        report.ratios.push_back(ratio);
        report.worst_ratio = std::max(report.worst_ratio, ratio);
    }
    return report;
}

ParallelogramResidual parallelogram_residual(const ControlProblem& problem, const ControlField& g1,
                                             const ControlField& g2, double mu)
{
    const FemSpace& space = problem.space();
    const auto residual = [&](const Vector& a, const Vector& b) {
        const Vector c = mu * a + (1.0 - mu) * b;
        const auto sq = [&](const Vector& v) { return l2_inner(space, v, v); };
        return std::abs(sq(c) - (mu * sq(a) + (1.0 - mu) * sq(b) - mu * (1.0 - mu) * sq(b - a)));
    };
    const VISolution u1 = problem.solve_state(g1);
    const VISolution u2 = problem.solve_state(g2);
    return {residual(u1.u, u2.u), residual(g1, g2)};
}

OpenProblemScan run_open_problem_scan(const ControlProblem& problem, int trials, const std::vector<double>& mu_grid,
                                      std::uint64_t seed, double amplitude, double tol)
{
    for (double mu : mu_grid)
        if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("run_open_problem_scan: mu outside [0, 1]");
    const FemSpace& space = problem.space();
    std::mt19937_64 rng(seed);

    OpenProblemScan scan;
    scan.summary.trials = trials;
    scan.summary.tolerance = tol;
    scan.summary.worst_order_margin = std::numeric_limits<double>::infinity();
    scan.summary.worst_norm_margin = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < trials; ++trial) {
        const ControlField g1 = random_control(space, rng, amplitude);
        const ControlField g2 = random_control(space, rng, amplitude);
        const VISolution s1 = problem.solve_state(g1);
        const VISolution s2 = problem.solve_state(g2);
        for (double mu : mu_grid) {
            const StateField u3 = mu * s1.u + (1.0 - mu) * s2.u;
            const StateField u4 = problem.solve_state(mu * g1 + (1.0 - mu) * g2).u;

            OpenProblemRecord rec;
            rec.trial = trial;
            rec.mu = mu;
            rec.level = space.mesh.level;
            rec.g1_norm = l2_norm(space, g1);
            rec.g2_norm = l2_norm(space, g2);
            rec.order_margin = (u3 - u4).minCoeff();
            rec.positivity_margin = u4.minCoeff();
            rec.norm_margin = l2_norm(space, u3) - l2_norm(space, u4);
            rec.pointwise_violation = rec.order_margin < -tol || rec.positivity_margin < -tol;
            rec.norm_violation = rec.norm_margin < -tol;
            rec.violation = rec.pointwise_violation || rec.norm_violation;
            rec.implication_holds = rec.pointwise_violation || !rec.norm_violation;

            auto& s = scan.summary;
            ++s.records;
            s.pointwise_violations += rec.pointwise_violation ? 1 : 0;
            s.norm_violations += rec.norm_violation ? 1 : 0;
            s.implication_failures += rec.implication_holds ? 0 : 1;
            s.worst_order_margin = std::min(s.worst_order_margin, rec.order_margin);
            s.worst_norm_margin = std::min(s.worst_norm_margin, rec.norm_margin);
            scan.records.push_back(rec);
        }
    }
    return scan;
}

bool strictly_decreasing(const std::vector<double>& values)
{
    for (std::size_t k = 1; k < values.size(); ++k)
        if (!(values[k] < values[k - 1])) return false;
    return true;
}

bool decreasing_trend(const std::vector<double>& values)
{
    int exceptions = 0;
    for (std::size_t k = 1; k < values.size(); ++k)
        if (!(values[k] < values[k - 1])) ++exceptions;
    return exceptions <= 1;
}

std::vector<double> column(const ConvergenceTable& table, double ConvergenceRow::*member)
{
    std::vector<double> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) out.push_back(row.*member);
    return out;
}

void write_convergence_csv(std::ostream& os, const ConvergenceTable& table)
{
    const auto old_precision = os.precision(17);
    os << "level,h,error_v,error_h,cost,cost_gap,control_distance,control_norm,control_bound,active_size\n";
    for (const auto& r : table.rows) {
        os << r.level << ',';
        for (double v : {r.h, r.error_v, r.error_h, r.cost, r.cost_gap, r.control_distance, r.control_norm,
                         r.control_bound}) {
            write_number(os, v);
            os << ',';
        }
        os << r.active_size << '\n';
    }
    os.precision(old_precision);
}

void write_open_problem_csv(std::ostream& os, const OpenProblemScan& scan)
{
    const auto old_precision = os.precision(17);
    os << "trial,mu,level,g1_norm,g2_norm,order_margin,positivity_margin,norm_margin,pointwise_violation,"
          "norm_violation,violation\n";
    for (const auto& r : scan.records) {
        os << r.trial << ',' << r.mu << ',' << r.level << ',' << r.g1_norm << ',' << r.g2_norm << ','
           << r.order_margin << ',' << r.positivity_margin << ',' << r.norm_margin << ','
           << (r.pointwise_violation ? 1 : 0) << ',' << (r.norm_violation ? 1 : 0) << ','
           << (r.violation ? 1 : 0) << '\n';
    }
    os.precision(old_precision);
}

} // namespace vioc
