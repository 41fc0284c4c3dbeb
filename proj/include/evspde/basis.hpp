#pragma once

#include <Eigen/Dense>

namespace evspde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Real Fourier basis on the angle chart θ ∈ [0, 2π) of a closed curve with
/// constant reference metric g₀ = g_θθ(·, 0), sampled on a uniform grid. The
/// reference volume element is dν(g₀) = ρ₀ dθ with ρ₀ = √g₀.
///
/// Coefficient ordering: index 0 is the constant, index 2k-1 is cos kθ and
/// index 2k is sin kθ (k = 1..K). Basis functions are orthonormal in
/// L²(dν(g₀)), so ‖u‖²_{H₀} is the Euclidean norm of the coefficients. All
/// integrals use the trapezoid rule, which is exact for trigonometric
/// polynomials of degree < grid size.
class FourierBasis {
public:
    FourierBasis(int mode_count, int grid_size, double reference_metric = 1.0);

    int mode_count() const noexcept { return modes_; }
    int size() const noexcept { return 2 * modes_ + 1; }
    int grid_size() const noexcept { return grid_; }

    /// ρ₀, the reference volume density in the angle chart.
    double density() const noexcept { return density_; }
    /// g₀ = g_θθ(·, 0) (constant).
    double metric() const noexcept { return metric_; }

    /// Trapezoid weight 2π/N.
    double weight() const noexcept { return weight_; }
    double node(int m) const noexcept;

    static int wavenumber(int index) noexcept { return (index + 1) / 2; }
    /// Eigenvalue of -Δ on (M, g₀) for basis function `index`: k²/g₀.
    double eigenvalue(int index) const noexcept;
    Vec eigenvalues() const;

    /// Basis values Φ(m, i) = φ_i(θ_m) and angle derivatives dΦ(m, i).
    const Mat& values() const noexcept { return phi_; }
    const Mat& derivatives() const noexcept { return dphi_; }

    Vec to_grid(const Vec& coeffs) const;
    Vec derivative_on_grid(const Vec& coeffs) const;
    /// Orthogonal projection (in H₀) of grid samples onto the basis.
    Vec project(const Vec& grid_values) const;

    /// ∫ f dν(g₀) of a grid function.
    double integrate(const Vec& grid_values) const;

    /// Coefficients of a unit-amplitude cos kθ / sin kθ / constant 1.
    Vec cosine(int k, double amplitude = 1.0) const;
    Vec sine(int k, double amplitude = 1.0) const;
    Vec constant(double value) const;
    Vec unit(int index) const;

private:
    int modes_;
    int grid_;
    double density_;
    double metric_;
    double weight_;
    Mat phi_;
    Mat dphi_;
};

} // namespace evspde
