#pragma once

#include <memory>
#include <optional>

#include "evspde/config.hpp"
#include "evspde/geometry.hpp"
#include "evspde/noise.hpp"
#include "evspde/operators.hpp"
#include "evspde/solver.hpp"
#include "evspde/verify.hpp"

namespace evspde::scenario {

using MaybeNoise = std::optional<noise::NoiseModel>;

/// Heat equation on the MCF sphere pulled back to the unit circle.
solver::Scenario mcf_circle(int n, double horizon, int modes, MaybeNoise noise, const Vec& initial);
solver::Scenario mcf_circle(std::shared_ptr<const geometry::MetricFamily> family, MaybeNoise noise, const Vec& initial);

/// Plain Laplace-Beltrami drift on a static manifold.
solver::Scenario heat(const geometry::ReferenceManifold& base, double horizon, MaybeNoise noise, const Vec& initial,
                      double metric_factor = 1.0);

/// Δ_{g_t} - VH on the reference chart.
solver::Scenario moving_surface(std::shared_ptr<const geometry::MetricFamily> family,
                                operators::NormalVelocityTerm vh, MaybeNoise noise, const Vec& initial);

/// F*_t A F_t for a general parabolic A.
solver::Scenario general_parabolic(std::shared_ptr<const geometry::MetricFamily> family,
                                   const operators::ParabolicCoefficients& coef, MaybeNoise noise,
                                   const Vec& initial);

solver::Scenario p_laplace(std::shared_ptr<const geometry::MetricFamily> family, double p, MaybeNoise noise,
                           const Vec& initial);

/// Adds the monotone nonlinearity -f(u) to the drift.
solver::Scenario with_nonlinearity(solver::Scenario s, const operators::NonlinearitySpec& nl);

/// Drift under test, A - f.
verify::Target target_of(const solver::Scenario& s);

/// Everything the CLI needs from one config.
struct Built {
    solver::Scenario scenario;
    solver::SolverConfig solver;
    std::shared_ptr<const geometry::PullbackMap> map;
    verify::AnalyticConstants constants;
    std::optional<geometry::FactorTable> factor_table; ///< gbm or file table
};

/// Reads table files relative to the working directory.
Built build(const config::ScenarioConfig& cfg);

/// Pads (or rejects) leading coefficients to the basis dimension.
Vec initial_from(const std::vector<double>& leading, int dim);

/// Parses CSV text with header (t, f).
geometry::FactorTable parse_factor_table(const std::string& csv_text);

} // namespace evspde::scenario
