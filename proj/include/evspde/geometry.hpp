#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "evspde/basis.hpp"

namespace evspde::geometry {

enum class ManifoldKind { CircleUnit, FlatTorus1D };

/// Closed 1-D reference manifold in its angle chart.
///
/// For CircleUnit the MCF formulas of S^{n-1} ⊂ ℝⁿ are evaluated with
/// `ambient_dim`; simulations only exist for the circle (n = 2) itself.
/// FlatTorus1D is ℝ/(L ℤ) written in the chart θ = 2πx/L, so g_θθ = (L/2π)².
struct ReferenceManifold {
    ManifoldKind kind = ManifoldKind::CircleUnit;
    int ambient_dim = 2;
    int grid_size = 0;      ///< 0 selects the minimum 4K+1
    int mode_count = 8;
    double length = 0.0;    ///< torus period; ignored for the circle

    /// Throws std::invalid_argument on any violated invariant.
    void validate() const;
    int effective_grid() const noexcept;
    /// Constant metric coefficient g_θθ of the reference manifold.
    double base_metric() const;
};

ReferenceManifold unit_circle(int mode_count, int ambient_dim = 2, int grid_size = 0);
ReferenceManifold flat_torus(double length, int mode_count, int grid_size = 0);

/// Sampled time profile (t_k, f_k).
struct FactorTable {
    std::vector<double> times;
    std::vector<double> values;
};

/// Time profile f(t) of an isotropic family g(x, t) = f(t) g(x, base).
class FactorProfile {
public:
    struct Constant { double value; };
    struct Mcf { int n; };
    struct Table { FactorTable table; std::string label; };

    static FactorProfile constant(double value = 1.0);
    /// Mean-curvature-flow sphere: f(t) = 1 - 2nt.
    static FactorProfile mcf(int ambient_dim);
    /// Piecewise-linear interpolation of a table; `label` tags its origin
    /// (e.g. "gbm", "table") in digests.
    static FactorProfile table(FactorTable table, std::string label = "table");

    double operator()(double t) const;
    bool is_constant() const noexcept;
    /// Times at which bounds are scanned on [0, T].
    std::vector<double> sample_times(double horizon) const;
    /// Canonical one-line description (stable across runs).
    std::string describe() const;

    const std::variant<Constant, Mcf, Table>& kind() const noexcept { return kind_; }

private:
    explicit FactorProfile(std::variant<Constant, Mcf, Table> kind) : kind_(std::move(kind)) {}
    std::variant<Constant, Mcf, Table> kind_;
};

/// √(1 - 2nt), the radius of the MCF sphere started at radius 1.
/// Throws std::domain_error once the sphere has collapsed (t >= 1/(2n)).
double mcf_radius(double t, int n);

/// One-parameter metric family g_θθ(x, t) = f(t) · g_base on a reference
/// manifold, over [0, T]. Immutable.
class MetricFamily {
public:
    const ReferenceManifold& base() const noexcept { return base_; }
    const FactorProfile& profile() const noexcept { return profile_; }
    double horizon() const noexcept { return horizon_; }
    bool is_static() const noexcept { return profile_.is_constant(); }

    /// Galerkin basis, orthonormal in H₀ = L²(dν(g₀)).
    const FourierBasis& basis() const noexcept { return *basis_; }
    std::shared_ptr<const FourierBasis> basis_ptr() const noexcept { return basis_; }

    double factor(double t) const;
    /// f(t)/f(0): the isotropic scaling of g_t relative to g₀.
    double relative_factor(double t) const { return factor(t) / factor0_; }

    /// g_θθ(θ_m, t) on the quadrature grid.
    Vec metric_on_grid(double t) const;
    /// g^θθ(θ_m, t).
    Vec inverse_metric_on_grid(double t) const;
    /// √|g(θ_m, t)|, the density of dν(g_t) in the angle chart.
    Vec sqrt_det_on_grid(double t) const;

    /// ‖u‖²_{H_{g_t}} = ∫ u² √|g_t| dθ by quadrature.
    double h_norm_sq(const Vec& coeffs, double t) const;
    /// ‖u‖²_{H₀}.
    double h0_norm_sq(const Vec& coeffs) const;

    /// a₁ ≤ √|g(x,t)| ≤ b₁ over grid × sampled times.
    double a1() const noexcept { return a1_; }
    double b1() const noexcept { return b1_; }
    /// a₃ ≤ g^{θθ}(x,t) ≤ b₃ over grid × sampled times.
    double a3() const noexcept { return a3_; }
    double b3() const noexcept { return b3_; }
    /// Bounds of f(t)/f(0) over the sampled times.
    double min_relative_factor() const noexcept { return rmin_; }
    double max_relative_factor() const noexcept { return rmax_; }

    const std::vector<double>& sample_times() const noexcept { return times_; }

    std::string describe() const;

private:
    friend MetricFamily build_metric_family(const ReferenceManifold&, const FactorProfile&, double);
    MetricFamily(ReferenceManifold base, FactorProfile profile, double horizon);

    ReferenceManifold base_;
    FactorProfile profile_;
    double horizon_;
    double factor0_ = 1.0;
    std::shared_ptr<const FourierBasis> basis_;
    std::vector<double> times_;
    double a1_ = 0, b1_ = 0, a3_ = 0, b3_ = 0, rmin_ = 0, rmax_ = 0;
};

/// Validates the profile on [0, T] and scans the bounds. Rejects non-positive
/// profiles and MCF horizons T >= 1/(2n).
MetricFamily build_metric_family(const ReferenceManifold& base, const FactorProfile& profile,
                                 double horizon);

struct NormEquivalence {
    double a2;
    double b2;
};

/// Tight a₂ ≤ √|g_t|/√|g₀| ≤ b₂ over grid × sampled times.
NormEquivalence norm_equivalence_constants(const MetricFamily& family);

/// Isotropic pullback/pushforward pair. Φ_t(x) = x·√(f(t)/f(0)) on the
/// embedded curve, which is the identity in the angle chart, so F_t and its
/// pullback F*_t act as the identity on Fourier coefficients. Bounds
/// p₁, q₁ (V) and p₂, q₂ (H) are operator-norm bounds of F_t measured in the
/// true volume element dν(g_t).
class PullbackMap {
public:
    explicit PullbackMap(std::shared_ptr<const MetricFamily> family);

    const MetricFamily& family() const noexcept { return *family_; }
    std::shared_ptr<const MetricFamily> family_ptr() const noexcept { return family_; }

    /// Linear scale of Φ_t.
    double scale(double t) const;
    /// F_t u (coefficients of u ∘ Φ_t⁻¹ in the angle chart).
    Vec push(const Vec& coeffs, double t) const;
    /// F*_t w (w ∘ Φ_t).
    Vec pull(const Vec& coeffs, double t) const;

    double h_norm_sq(const Vec& coeffs, double t) const;
    double v_norm_sq(const Vec& coeffs, double t) const;
    /// ⟨F_t u, F_t v⟩_{H_t} evaluated on (M, g_t) and pulled back through the
    /// change of variables (volume Jacobian divided out).
    double pulled_back_inner(const Vec& u, const Vec& v, double t) const;

    double p1() const noexcept { return p1_; }
    double q1() const noexcept { return q1_; }
    double p2() const noexcept { return p2_; }
    double q2() const noexcept { return q2_; }

private:
    void check_time(double t) const;

    std::shared_ptr<const MetricFamily> family_;
    double p1_ = 0, q1_ = 0, p2_ = 0, q2_ = 0;
};

/// Geometric Brownian motion driver df = r f dt + σ f dB, f(0) = 1.
struct GbmDriver {
    double r = 0.0;
    double sigma = 0.0;
    int steps = 100;
    std::uint64_t seed = 0;

    bool satisfies_constraint() const noexcept { return r - 0.5 * sigma * sigma < 0.0; }
};

/// f_k = exp((r - σ²/2) t_k + σ B_k) on a uniform grid of `steps` intervals.
/// Bit-reproducible from (r, σ, steps, seed). Rejects r - σ²/2 >= 0.
FactorTable gbm_factor_path(const GbmDriver& driver, double horizon);

/// CSV text with columns (t, f).
std::string factor_table_csv(const FactorTable& table);

} // namespace evspde::geometry
