#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evspde/geometry.hpp"
#include "evspde/noise.hpp"
#include "evspde/operators.hpp"
#include "evspde/rng.hpp"
#include "evspde/solver.hpp"

namespace evspde::verify {

/// Operator family under test; probe times are drawn uniformly from [0, horizon].
struct Target {
    operators::OperatorProvider provider;
    double horizon = 0.0;
    std::string label;
};

/// Coefficients i.i.d. N(0, 1/(1+λ_i)); the constant mode is zero when
/// `mean_zero` is set.
Vec random_probe(const FourierBasis& basis, bool mean_zero, CounterEngine& engine);

struct CheckResult {
    std::string name;
    double estimate = 0.0;      ///< the quantity compared with `bound`
    double bound = 0.0;
    bool passed = false;
    int samples = 0;
    double max_gap = 0.0;       ///< H1 only: largest successive difference
    std::vector<double> ratios; ///< per-sample values, in sampling order
};

/// H2: sup over N random (u, v, t) of 2⟨A(t)u - A(t)v, u - v⟩ / ‖u - v‖²_H.
/// Passes when the estimate ≤ bound·1.05 + 1e-10.
CheckResult check_weak_monotonicity(const Target& target, int samples, std::uint64_t seed, double bound);

struct CoercivityCandidate {
    double c1 = 0.0;
    double c2 = 0.0;
    double alpha = 2.0;
};

/// H3: 2⟨A(t)v, v⟩ + ‖i‖²_{L₂} ≤ c₁‖v‖²_H - c₂‖v‖_V^α + f with f = ‖i‖²_{L₂}.
/// Reports the worst violation divided by the sample scale; passes when it is
/// ≤ 1e-8 (c₂ > 0 and α > 1 are also required).
CheckResult check_coercivity(const Target& target, const noise::NoiseModel& noise, int samples, std::uint64_t seed,
                             const CoercivityCandidate& candidate);
/// Same check with f = ‖i‖²_{L₂} given directly (0 switches the noise off).
CheckResult check_coercivity(const Target& target, double noise_hs_sq, int samples, std::uint64_t seed,
                             const CoercivityCandidate& candidate);

/// H4: sup_v ‖A(t)v‖_{V*}/‖v‖_V^{α-1}, with the dual norm maximized over all
/// basis directions, 50 random directions and the spectral Riesz direction.
/// Passes when the estimate ≤ bound·1.05.
CheckResult check_boundedness(const Target& target, int samples, std::uint64_t seed, double alpha, double bound);

/// H1: λ ↦ ⟨A(u + λv), x⟩ on [-1, 1] with step 1e-3. Linear operators must be
/// affine to 1e-10 (relative); nonlinear ones must satisfy max gap ≤ L·h with
/// L the largest finite-difference slope. The estimate is the max gap.
CheckResult check_hemicontinuity(const Target& target, int samples, std::uint64_t seed);

/// 1/√μ₁ with μ₁ the smallest nonzero eigenvalue of the assembled
/// Laplace-Beltrami matrix. Rejects non-static families.
double estimate_poincare(const geometry::MetricFamily& family);

/// Sharp L^q Poincaré (Wirtinger) constant of mean-zero periodic functions on a
/// loop of length L, in the power form ∫|u|^q ≤ C ∫|u'|^q.
double lq_poincare_constant(double q, double length);

/// Paper constants for one scenario.
struct AnalyticConstants {
    double c = 0.0;     ///< H2
    double c1 = 0.0;    ///< H3
    double c2 = 0.0;
    double alpha = 2.0;
    double c3 = 0.0;    ///< H4
    double f = 0.0;     ///< H3 offset, ‖i‖²_{L₂}
    double g = 0.0;     ///< H4 offset
    std::string source;
};

AnalyticConstants heat_constants(const noise::NoiseModel& noise);
AnalyticConstants mcf_sphere_constants(int n, double horizon, const noise::NoiseModel& noise);
AnalyticConstants moving_surface_constants(const geometry::MetricFamily& family, double k1,
                                           const noise::NoiseModel& noise);
AnalyticConstants general_parabolic_constants(const operators::ParabolicCoefficients& coef,
                                              const geometry::PullbackMap& map, const noise::NoiseModel& noise);
AnalyticConstants p_laplace_constants(double p, const geometry::MetricFamily& family,
                                      const noise::NoiseModel& noise);
/// Shift for A - f with f Lipschitz (c_lip) and pairing density ratio in
/// [a2, b2]: c₁ and c₃ grow by c_lip·b₂/a₂²; c and c₂ are unchanged.
AnalyticConstants with_nonlinearity(AnalyticConstants base, double c_lip, double a2 = 1.0, double b2 = 1.0);

struct HypothesisReport {
    std::string label;
    std::uint64_t seed = 0;
    int samples = 0;
    AnalyticConstants declared;
    CheckResult h1;
    CheckResult h2;
    CheckResult h3;
    CheckResult h4;

    bool passed() const noexcept { return h1.passed && h2.passed && h3.passed && h4.passed; }
    /// Flat "key = value" lines.
    std::string to_key_value() const;
    /// Columns (check, sample, value).
    std::string samples_csv() const;
};

/// Runs H1-H4 against the declared constants on one seed; the noise enters
/// through constants.f.
HypothesisReport certify(const Target& target, const AnalyticConstants& constants, int samples, std::uint64_t seed);

/// Runs `fn(replica)` for replica = 0..M-1 on a thread pool; results are
/// stored by replica index so the output does not depend on scheduling.
template <class T, class Fn>
std::vector<T> parallel_replicas(std::size_t replicas, Fn&& fn, unsigned threads = 0);

/// Final states of M replicas (record disabled).
std::vector<Vec> final_states(const solver::PathIntegrator& integrator, std::size_t replicas, unsigned threads = 0);

struct MomentEstimate {
    std::size_t replicas = 0;
    double mean = 0.0;              ///< of sup_t ‖X(t)‖²_{H₀}
    double standard_error = 0.0;
    double half_width = 0.0;        ///< 3·SE
};

/// Mean, SE and 3·SE half-width of per-replica sup values.
MomentEstimate summarize_moment(const std::vector<double>& sups);

/// E[sup ‖X‖²] from M ≥ 100 independent replicas.
MomentEstimate estimate_sup_moment(const solver::Scenario& scenario, const solver::SolverConfig& cfg,
                                   std::size_t replicas, unsigned threads = 0);

struct ConvergenceReport {
    std::vector<double> dts;
    std::vector<double> errors;   ///< RMS ‖X_dt(T) - X_ref(T)‖_{H₀}
    double reference_dt = 0.0;
    double slope = 0.0;
    double residual = 0.0;        ///< RMS residual of the log-log fit
    bool exact = false;           ///< errors at round-off level, no fit
};

/// Strong error against a fine reference driven by the same Brownian path
/// (coarse increments are sums of fine ones). `cfg.dt` is the reference step;
/// `dts` must be descending and integer multiples of it.
ConvergenceReport estimate_strong_order(const solver::Scenario& scenario, const solver::SolverConfig& cfg,
                                        const std::vector<double>& dts, std::size_t replicas, unsigned threads = 0);

std::string convergence_csv(const ConvergenceReport& report);

} // namespace evspde::verify

#include "evspde/verify_parallel.ipp"
