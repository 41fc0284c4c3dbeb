#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evspde/basis.hpp"
#include "evspde/geometry.hpp"
#include "evspde/noise.hpp"
#include "evspde/operators.hpp"

namespace evspde::solver {

enum class Scheme { SemiImplicit, ExplicitEM };

std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& text);

struct SolverConfig {
    double dt = 1e-3;
    Scheme scheme = Scheme::SemiImplicit;
    int record_stride = 1;
    std::uint64_t master_seed = 0;
    /// Upper bound on memory spent caching per-step operators across replicas.
    std::size_t cache_budget_bytes = std::size_t{256} << 20;

    void validate() const;
};

struct SpectralState {
    double t = 0.0;
    Vec coeffs;
};

/// Everything that defines a path law: metric family, drift, nonlinearity,
/// noise and initial datum.
struct Scenario {
    std::string label;
    std::shared_ptr<const geometry::MetricFamily> family;
    operators::OperatorProvider provider;
    /// Canonical text of the drift (enters the digest).
    std::string operator_description;
    /// Provider returns the same operator for every t.
    bool time_independent = false;
    operators::NonlinearitySpec nonlinearity;
    /// nullopt switches the noise off.
    std::optional<noise::NoiseModel> noise;
    Vec initial;
    /// Set when the drift is assemble_mcf_sphere(n, ·); enables closed forms.
    std::optional<int> mcf_n;

    double horizon() const { return family->horizon(); }
    const FourierBasis& basis() const { return family->basis(); }
    void validate() const;
    std::string describe() const;
    std::uint64_t digest() const;
    std::string digest_hex() const;
};

struct Trajectory {
    std::vector<double> times;          ///< recorded (strided) times
    std::vector<Vec> states;            ///< recorded states
    std::vector<double> h0_norm_sq;     ///< at recorded times
    std::vector<double> hgt_norm_sq;    ///< at recorded times
    double sup_h0_norm_sq = 0.0;        ///< over every step
    std::uint64_t master_seed = 0;
    std::uint64_t replica = 0;
    std::uint64_t digest = 0;
    double dt = 0.0;
    Scheme scheme = Scheme::SemiImplicit;
    int steps = 0;

    const Vec& final_state() const { return states.back(); }
};

/// step index k ↦ increment over [t_k, t_{k+1}].
using IncrementSource = std::function<noise::WienerIncrement(std::uint64_t step, double dt)>;

/// One Euler step from state.t to state.t + dt. semi_implicit solves
/// (I - dt A(t+dt)) v⁺ = v - dt φ(v) + xi; explicit_em uses A(t).
SpectralState step(const SpectralState& state, const operators::OperatorProvider& provider,
                   const operators::NonlinearitySpec& nl, const noise::WienerIncrement& inc,
                   const SolverConfig& cfg);

/// Integrates one scenario with per-step operators cached and shared across
/// replicas. Immutable after construction; `run` may be called concurrently.
class PathIntegrator {
public:
    PathIntegrator(Scenario scenario, SolverConfig cfg);

    const Scenario& scenario() const noexcept { return scenario_; }
    const SolverConfig& config() const noexcept { return cfg_; }
    int steps() const noexcept { return steps_; }
    double time(int k) const noexcept;

    /// Noise from NoiseStream(master_seed, replica).
    Trajectory run(std::uint64_t replica, bool record = true) const;
    Trajectory run(std::uint64_t replica, const IncrementSource& source, bool record = true) const;

private:
    struct StepData {
        Vec diagonal_factor;   ///< 1/(1 - dt d) (implicit) or d (explicit)
        Mat matrix;            ///< (I - dt A)⁻¹ (implicit) or A (explicit)
    };
    StepData make_step(int k) const;
    const StepData& step_data(int k, StepData& scratch) const;

    Scenario scenario_;
    SolverConfig cfg_;
    int steps_ = 0;
    bool diagonal_ = false;
    bool linear_ = true;
    bool mean_zero_ = false;
    std::vector<StepData> cache_;
};

Trajectory solve_path(const Scenario& scenario, const SolverConfig& cfg, std::uint64_t replica);
Trajectory solve_path(const Scenario& scenario, const SolverConfig& cfg, std::uint64_t replica,
                      const IncrementSource& source);

struct ModeLaw {
    double mean_multiplier;
    double variance;
};

/// Law of coefficient `index` (0 = constant, 2k-1 = cos kθ, 2k = sin kθ) of
/// the linear diagonal scenario at time t: mean multiplier exp(∫₀ᵗ d) and
/// variance σ²∫₀ᵗ exp(2∫_s^t d) ds (adaptive Gauss-Kronrod, rel. tol 1e-8).
ModeLaw exact_linear_mode(int index, double t, const Scenario& scenario, double tolerance = 1e-8);

struct SurfaceTrajectory {
    std::vector<double> times;
    std::vector<double> reference_norm_sq; ///< ‖w(t)‖²_{H₀}
    std::vector<double> surface_norm_sq;   ///< ‖u(t)‖²_{L²(M(t))}
    double regularity_constant = 0.0;      ///< b₁b₂/a₂
};

SurfaceTrajectory pushforward_solution(const Trajectory& traj, const geometry::PullbackMap& map);

/// Columns t, H0_norm_sq, Hgt_norm_sq, coeff_0..coeff_{m-1}.
std::string trajectory_csv(const Trajectory& traj, int max_modes = -1);
/// JSON sidecar: digest, seed, dt, scheme, steps, versions.
std::string trajectory_metadata_json(const Trajectory& traj, const Scenario& scenario);

inline constexpr const char* kVersion = "1.0.0";

} // namespace evspde::solver
