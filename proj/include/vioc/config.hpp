#ifndef VIOC_CONFIG_HPP
#define VIOC_CONFIG_HPP

#include "vioc/harness.hpp"

#include <cstdint>
#include <string>

namespace vioc {

/// Invalid or inconsistent configuration. `field` names the offending key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field))
    {
    }
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Scalar field preset: constant, affine, gaussian bump or nodal file.
struct FieldSpec {
    std::string kind = "constant";
    double value = 0.0;
    double slope_x = 0.0;
    double slope_y = 0.0;
    double amplitude = 0.0;
    double center_x = 0.5;
    double center_y = 0.5;
    double width = 0.1;
    std::string path;
};

/// Function for the constant, affine and gaussian presets.
ScalarFunction make_function(const FieldSpec& spec);

/// Nodal field on `mesh`: preset interpolation, or values read from `path`
/// (whitespace separated, one per vertex in row-major order).
Vector make_field(const FieldSpec& spec, const Mesh& mesh);

struct RunConfig {
    Rectangle domain;
    Index nx = 4;
    Index ny = 4;
    std::vector<std::string> gamma1{"left"};

    double b = 1.0;
    double weight = 1.0;
    FieldSpec q;
    FieldSpec g;
    FieldSpec g0;

    SolverSettings solver;
    OptimizerOptions optimizer;

    int levels = 4;
    int oracle_extra_levels = 3;
    int control_levels = 0;
    int control_oracle_extra_levels = 2;
    int lipschitz_trials = 0;
    int trials = 100;
    std::vector<double> mu_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::uint64_t seed = 42;
    double amplitude = 10.0;

    std::string out_dir = "out";
    bool quiet = false;

    SideSet gamma1_sides() const;
    Mesh base_mesh() const;
    CostParams cost_params() const;
};

/// Reads a YAML configuration; missing keys keep their defaults.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& yaml_text);

/// Throws ConfigError naming the first invalid field.
void validate(const RunConfig& config);

/// Canonical YAML rendering of a resolved configuration.
std::string to_yaml(const RunConfig& config);

} // namespace vioc

#endif // VIOC_CONFIG_HPP
