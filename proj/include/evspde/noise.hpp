#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evspde/basis.hpp"
#include "evspde/geometry.hpp"
#include "evspde/rng.hpp"

namespace evspde::noise {

/// Truncated Hilbert-Schmidt embedding i: U → H₀, diagonal with weights σ_j.
/// Noise mode j (1-based) drives basis coefficient j-1 (constant, cos 1,
/// sin 1, cos 2, ...).
class NoiseModel {
public:
    /// σ_j = 1/j, j = 1..J.
    static NoiseModel canonical(int modes);
    static NoiseModel custom(std::vector<double> sigma);

    int size() const noexcept { return static_cast<int>(sigma_.size()); }
    const std::vector<double>& sigma() const noexcept { return sigma_; }
    /// Σ σ_j², accumulated once at construction.
    double hs_norm_sq() const noexcept { return hs_sq_; }
    bool is_canonical() const noexcept { return canonical_; }
    std::string describe() const;

private:
    NoiseModel(std::vector<double> sigma, bool canonical);
    std::vector<double> sigma_;
    double hs_sq_ = 0.0;
    bool canonical_ = false;
};

/// ‖i‖_{L₂(U,H)} = √(Σ σ_j²).
double hs_norm(const NoiseModel& model);

/// Coefficients of i ΔW in the H₀ basis over one step.
struct WienerIncrement {
    double dt = 0.0;
    Vec xi;
};

/// xi_j ~ N(0, dt σ_j²), independent. Advances `engine`.
WienerIncrement sample_increment(const NoiseModel& model, double dt, CounterEngine& engine);

/// Per-replica stream; increment `step` is drawn from its own counter key
/// derive_seed(master, replica, step), so any step can be regenerated.
class NoiseStream {
public:
    NoiseStream(std::uint64_t master_seed, std::uint64_t replica) noexcept
        : master_(master_seed), replica_(replica) {}

    WienerIncrement increment(const NoiseModel& model, double dt, std::uint64_t step) const;

    std::uint64_t master_seed() const noexcept { return master_; }
    std::uint64_t replica() const noexcept { return replica_; }

private:
    std::uint64_t master_;
    std::uint64_t replica_;
};

/// G_t(i ΔW) expressed on the reference chart. Isotropic maps leave the
/// coefficients unchanged; throws std::out_of_range for t outside [0, T].
WienerIncrement pushforward_increment(const geometry::PullbackMap& map, double t,
                                      const WienerIncrement& inc);

/// Zero-pads xi to a coefficient vector of length `dim`. Throws if J > dim.
Vec embed(const WienerIncrement& inc, int dim);

/// Sum of consecutive increments (coarse step from fine steps).
WienerIncrement combine(const std::vector<WienerIncrement>& parts);

/// Audit dump with columns (step, j, xi), j 1-based.
class IncrementLog {
public:
    void record(std::uint64_t step, const WienerIncrement& inc);
    std::string csv() const;

private:
    std::vector<std::pair<std::uint64_t, WienerIncrement>> rows_;
};

} // namespace evspde::noise
