#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace evspde::config {

struct ManifoldSection {
    std::string kind = "circle"; ///< circle | torus
    int ambient_n = 2;
    int modes = 8;
    int grid = 0;                ///< 0 = minimum 4K+1
    double length = 0.0;         ///< torus only

    bool operator==(const ManifoldSection&) const = default;
};

struct MetricSection {
    std::string profile = "static"; ///< static | mcf | gbm | table
    double factor = 1.0;            ///< static scaling of the base metric
    double r = 0.0;
    double sigma = 0.0;
    int steps = 100;
    std::uint64_t metric_seed = 0;
    std::string path;               ///< table CSV with columns (t, f)

    bool operator==(const MetricSection&) const = default;
};

struct OperatorSection {
    std::string kind = "heat"; ///< heat | mcf_sphere | moving_surface | general | plaplace
    double p = 4.0;
    std::string vh = "mcf";    ///< moving_surface: mcf | constant
    double vh_value = 0.0;
    double k1 = 0.0;           ///< declared |VH| bound; 0 = derive
    std::vector<double> a{1.0, 0.0, 0.0};      ///< mean, cos, sin
    std::vector<double> b{0.0, 0.0, 0.0};
    std::vector<double> ctilde{0.0, 0.0, 0.0};

    bool operator==(const OperatorSection&) const = default;
};

struct NonlinearitySection {
    std::string kind = "none"; ///< none | linear | tanh
    double gamma = 0.0;

    bool operator==(const NonlinearitySection&) const = default;
};

struct NoiseSection {
    std::string kind = "canonical"; ///< canonical | custom | none
    int modes = 0;                  ///< J; 0 = K
    std::vector<double> sigma;

    bool operator==(const NoiseSection&) const = default;
};

struct SolverSection {
    double dt = 1e-3;
    std::string scheme = "semi_implicit";
    int record_stride = 1;

    bool operator==(const SolverSection&) const = default;
};

struct RunSection {
    int replicas = 1;
    std::uint64_t seed = 0;
    int samples = 500;              ///< verify probes
    std::vector<double> dts{1e-3, 5e-4, 2.5e-4}; ///< convergence grid
    double reference_dt = 1e-5;

    bool operator==(const RunSection&) const = default;
};

struct InitialSection {
    /// Leading H₀ coefficients (constant, cos 1, sin 1, ...); the rest are zero.
    std::vector<double> coefficients;

    bool operator==(const InitialSection&) const = default;
};

struct OutputSection {
    std::string directory = "out";
    int max_modes = -1;

    bool operator==(const OutputSection&) const = default;
};

struct ScenarioConfig {
    std::string label = "scenario";
    ManifoldSection manifold;
    MetricSection metric;
    double horizon = 1.0;
    OperatorSection op;
    NonlinearitySection nonlinearity;
    NoiseSection noise;
    SolverSection solver;
    RunSection run;
    InitialSection initial;
    OutputSection output;

    bool operator==(const ScenarioConfig&) const = default;
};

/// Every problem found in a config, not just the first.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const noexcept { return errors_; }

private:
    std::vector<std::string> errors_;
};

/// Parses sectioned INI text. Throws ConfigError listing all problems.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Range and consistency checks; returns the list of problems (empty = valid).
std::vector<std::string> validate(const ScenarioConfig& cfg);

/// Canonical INI text; parse_config(serialize(c)) == c.
std::string serialize(const ScenarioConfig& cfg);

} // namespace evspde::config
