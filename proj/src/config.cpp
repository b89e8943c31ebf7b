#include "vioc/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <sstream>

namespace vioc {

namespace {

template <typename T>
void read(const YAML::Node& node, const char* key, const std::string& path, T& out)
{
    const YAML::Node child = node[key];
    if (!child) return;
    try {
        out = child.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(path + "." + key, "cannot parse value '" + YAML::Dump(child) + "'");
    }
}

void read_field(const YAML::Node& node, const std::string& path, FieldSpec& spec)
{
    if (!node) return;
    if (!node.IsMap()) throw ConfigError(path, "expected a mapping");
    read(node, "kind", path, spec.kind);
    read(node, "value", path, spec.value);
    read(node, "amplitude", path, spec.amplitude);
    read(node, "width", path, spec.width);
    read(node, "path", path, spec.path);
    if (const YAML::Node slope = node["slope"]) {
        if (!slope.IsSequence() || slope.size() != 2) throw ConfigError(path + ".slope", "expected [sx, sy]");
        spec.slope_x = slope[0].as<double>();
        spec.slope_y = slope[1].as<double>();
    }
    if (const YAML::Node center = node["center"]) {
        if (!center.IsSequence() || center.size() != 2) throw ConfigError(path + ".center", "expected [cx, cy]");
        spec.center_x = center[0].as<double>();
        spec.center_y = center[1].as<double>();
    }
}

void check_finite(double v, const std::string& field)
{
    if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
}

void validate_field(const FieldSpec& spec, const std::string& path, bool allow_file)
{
    if (spec.kind == "file") {
        if (!allow_file) throw ConfigError(path + ".kind", "nodal files are only supported for controls");
        if (spec.path.empty()) throw ConfigError(path + ".path", "required for kind 'file'");
        return;
    }
    if (spec.kind != "constant" && spec.kind != "affine" && spec.kind != "gaussian")
        throw ConfigError(path + ".kind", "unknown preset '" + spec.kind + "'");
    for (auto [v, name] : {std::pair{spec.value, "value"}, {spec.slope_x, "slope"}, {spec.slope_y, "slope"},
                           {spec.amplitude, "amplitude"}, {spec.center_x, "center"}, {spec.center_y, "center"}})
        check_finite(v, path + "." + name);
    if (spec.kind == "gaussian" && !(spec.width > 0.0)) throw ConfigError(path + ".width", "must be positive");
}

YAML::Node field_node(const FieldSpec& spec)
{
    YAML::Node n;
    n["kind"] = spec.kind;
    if (spec.kind == "file") {
        n["path"] = spec.path;
    } else if (spec.kind == "gaussian") {
        n["value"] = spec.value;
        n["amplitude"] = spec.amplitude;
        n["center"].push_back(spec.center_x);
        n["center"].push_back(spec.center_y);
        n["width"] = spec.width;
    } else {
        n["value"] = spec.value;
        if (spec.kind == "affine") {
            n["slope"].push_back(spec.slope_x);
            n["slope"].push_back(spec.slope_y);
        }
    }
    return n;
}

} // namespace

ScalarFunction make_function(const FieldSpec& spec)
{
    if (spec.kind == "constant") return [c = spec.value](const Point&) { return c; };
    if (spec.kind == "affine")
        return [s = spec](const Point& p) { return s.value + s.slope_x * p.x() + s.slope_y * p.y(); };
    if (spec.kind == "gaussian")
        return [s = spec](const Point& p) {
            const double dx = p.x() - s.center_x, dy = p.y() - s.center_y;
            return s.value + s.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * s.width * s.width));
        };
    throw ConfigError("kind", "preset '" + spec.kind + "' has no closed form");
}

Vector make_field(const FieldSpec& spec, const Mesh& mesh)
{
    if (spec.kind != "file") return interpolate(mesh, make_function(spec));
    std::ifstream in(spec.path);
    if (!in) throw ConfigError("path", "cannot open nodal file '" + spec.path + "'");
    std::vector<double> values;
    double v = 0.0;
    while (in >> v) values.push_back(v);
    if (!in.eof()) throw ConfigError("path", "non-numeric entry in '" + spec.path + "'");
    if (static_cast<Index>(values.size()) != mesh.num_vertices())
        throw ConfigError("path", "nodal file has " + std::to_string(values.size()) + " values, mesh has " +
                                      std::to_string(mesh.num_vertices()) + " vertices");
    Vector out = Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
    if (!out.allFinite()) throw ConfigError("path", "non-finite nodal value");
    return out;
}

SideSet RunConfig::gamma1_sides() const
{
    SideSet sides;
    for (const auto& name : gamma1) {
        try {
            sides.insert(parse_side(name));
        } catch (const std::invalid_argument& e) {
            throw ConfigError("domain.gamma1", e.what());
        }
    }
    return sides;
}

Mesh RunConfig::base_mesh() const
{
    return build_rectangle_mesh(nx, ny, domain, gamma1_sides());
}

CostParams RunConfig::cost_params() const
{
    CostParams params;
    params.weight = weight;
    params.dirichlet = b;
    params.flux = make_function(q);
    return params;
}

RunConfig parse_config(const std::string& yaml_text)
{
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError("config", std::string("malformed YAML: ") + e.what());
    }
    RunConfig c;
    if (!root || root.IsNull()) return c;
    if (!root.IsMap()) throw ConfigError("config", "top level must be a mapping");

    if (const YAML::Node d = root["domain"]) {
        read(d, "x0", "domain", c.domain.x0);
        read(d, "x1", "domain", c.domain.x1);
        read(d, "y0", "domain", c.domain.y0);
        read(d, "y1", "domain", c.domain.y1);
        read(d, "nx", "domain", c.nx);
        read(d, "ny", "domain", c.ny);
        if (const YAML::Node g1 = d["gamma1"]) {
            c.gamma1.clear();
            if (g1.IsSequence()) {
                for (const auto& s : g1) c.gamma1.push_back(s.as<std::string>());
            } else {
                std::stringstream ss(g1.as<std::string>());
                std::string item;
                while (std::getline(ss, item, ','))
                    if (!item.empty()) c.gamma1.push_back(item);
            }
        }
    }
    if (const YAML::Node p = root["problem"]) {
        read(p, "b", "problem", c.b);
        read(p, "M", "problem", c.weight);
    }
    read_field(root["q"], "q", c.q);
    read_field(root["g"], "g", c.g);
    if (const YAML::Node s = root["solver"]) {
        std::string method = solver_name(c.solver.kind);
        read(s, "method", "solver", method);
        try {
            c.solver.kind = parse_solver(method);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("solver.method", e.what());
        }
        read(s, "tol", "solver", c.solver.pdas.tol);
        c.solver.psor.tol = c.solver.pdas.tol;
        read(s, "omega", "solver", c.solver.psor.omega);
        read(s, "c", "solver", c.solver.pdas.c);
        read(s, "max_iter", "solver", c.solver.pdas.max_iter);
        read(s, "psor_max_iter", "solver", c.solver.psor.max_iter);
    }
    if (const YAML::Node o = root["optimizer"]) {
        read(o, "gtol", "optimizer", c.optimizer.gtol);
        read(o, "max_iter", "optimizer", c.optimizer.max_iter);
        read(o, "memory", "optimizer", c.optimizer.memory);
        read_field(o["g0"], "optimizer.g0", c.g0);
    }
    if (const YAML::Node e = root["experiment"]) {
        read(e, "levels", "experiment", c.levels);
        read(e, "oracle_extra_levels", "experiment", c.oracle_extra_levels);
        read(e, "control_levels", "experiment", c.control_levels);
        read(e, "control_oracle_extra_levels", "experiment", c.control_oracle_extra_levels);
        read(e, "lipschitz_trials", "experiment", c.lipschitz_trials);
        read(e, "trials", "experiment", c.trials);
        read(e, "mu_grid", "experiment", c.mu_grid);
        read(e, "seed", "experiment", c.seed);
        read(e, "amplitude", "experiment", c.amplitude);
    }
    if (const YAML::Node o = root["output"]) read(o, "dir", "output", c.out_dir);
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void validate(const RunConfig& c)
{
    for (auto [v, name] : {std::pair{c.domain.x0, "domain.x0"}, {c.domain.x1, "domain.x1"},
                           {c.domain.y0, "domain.y0"}, {c.domain.y1, "domain.y1"}})
        check_finite(v, name);
    if (!(c.domain.x1 > c.domain.x0)) throw ConfigError("domain.x1", "must exceed domain.x0");
    if (!(c.domain.y1 > c.domain.y0)) throw ConfigError("domain.y1", "must exceed domain.y0");
    if (c.nx < 1) throw ConfigError("domain.nx", "must be >= 1");
    if (c.ny < 1) throw ConfigError("domain.ny", "must be >= 1");
    if (c.gamma1.empty()) throw ConfigError("domain.gamma1", "at least one side is required");
    (void)c.gamma1_sides();

    check_finite(c.b, "problem.b");
    if (c.b < 0.0) throw ConfigError("problem.b", "must be >= 0");
    check_finite(c.weight, "problem.M");
    if (!(c.weight > 0.0)) throw ConfigError("problem.M", "must be > 0");
    validate_field(c.q, "q", false);
    validate_field(c.g, "g", true);
    validate_field(c.g0, "optimizer.g0", true);

    if (!(c.solver.pdas.tol > 0.0)) throw ConfigError("solver.tol", "must be > 0");
    if (!(c.solver.psor.omega > 0.0 && c.solver.psor.omega < 2.0))
        throw ConfigError("solver.omega", "must lie in (0, 2)");
    if (!(c.solver.pdas.c > 0.0)) throw ConfigError("solver.c", "must be > 0");
    if (c.solver.pdas.max_iter < 1) throw ConfigError("solver.max_iter", "must be >= 1");
    if (c.optimizer.max_iter < 0) throw ConfigError("optimizer.max_iter", "must be >= 0");
    if (c.optimizer.memory < 1) throw ConfigError("optimizer.memory", "must be >= 1");
    check_finite(c.optimizer.gtol, "optimizer.gtol");

    if (c.levels < 3) throw ConfigError("experiment.levels", "must be >= 3");
    if (c.oracle_extra_levels < 2) throw ConfigError("experiment.oracle_extra_levels", "must be >= 2");
    if (c.control_levels < 0) throw ConfigError("experiment.control_levels", "must be >= 0");
    if (c.control_oracle_extra_levels < 1)
        throw ConfigError("experiment.control_oracle_extra_levels", "must be >= 1");
    if (c.lipschitz_trials < 0) throw ConfigError("experiment.lipschitz_trials", "must be >= 0");
    if (c.trials < 1) throw ConfigError("experiment.trials", "must be >= 1");
    for (double mu : c.mu_grid)
        if (!(mu >= 0.0 && mu <= 1.0)) throw ConfigError("experiment.mu_grid", "values must lie in [0, 1]");
    check_finite(c.amplitude, "experiment.amplitude");
    if (!(c.amplitude > 0.0)) throw ConfigError("experiment.amplitude", "must be > 0");
}

std::string to_yaml(const RunConfig& c)
{
    YAML::Node root;
    root["domain"]["x0"] = c.domain.x0;
    root["domain"]["x1"] = c.domain.x1;
    root["domain"]["y0"] = c.domain.y0;
    root["domain"]["y1"] = c.domain.y1;
    root["domain"]["nx"] = c.nx;
    root["domain"]["ny"] = c.ny;
    for (const auto& s : c.gamma1) root["domain"]["gamma1"].push_back(s);
    root["problem"]["b"] = c.b;
    root["problem"]["M"] = c.weight;
    root["q"] = field_node(c.q);
    root["g"] = field_node(c.g);
    root["solver"]["method"] = solver_name(c.solver.kind);
    root["solver"]["tol"] = c.solver.pdas.tol;
    root["solver"]["omega"] = c.solver.psor.omega;
    root["solver"]["c"] = c.solver.pdas.c;
    root["solver"]["max_iter"] = c.solver.pdas.max_iter;
    root["solver"]["psor_max_iter"] = c.solver.psor.max_iter;
    root["optimizer"]["gtol"] = c.optimizer.gtol;
    root["optimizer"]["max_iter"] = c.optimizer.max_iter;
    root["optimizer"]["memory"] = c.optimizer.memory;
    root["optimizer"]["g0"] = field_node(c.g0);
    root["experiment"]["levels"] = c.levels;
    root["experiment"]["oracle_extra_levels"] = c.oracle_extra_levels;
    root["experiment"]["control_levels"] = c.control_levels;
    root["experiment"]["control_oracle_extra_levels"] = c.control_oracle_extra_levels;
    root["experiment"]["lipschitz_trials"] = c.lipschitz_trials;
    root["experiment"]["trials"] = c.trials;
    for (double mu : c.mu_grid) root["experiment"]["mu_grid"].push_back(mu);
    root["experiment"]["seed"] = c.seed;
    root["experiment"]["amplitude"] = c.amplitude;
    root["output"]["dir"] = c.out_dir;

    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << root;
    return std::string(out.c_str()) + "\n";
}

} // namespace vioc
