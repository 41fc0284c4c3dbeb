#include "evspde/basis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace evspde {

FourierBasis::FourierBasis(int mode_count, int grid_size, double reference_metric)
    : modes_(mode_count)
    , grid_(grid_size)
    , density_(std::sqrt(reference_metric))
    , metric_(reference_metric)
    , weight_(2.0 * std::numbers::pi / grid_size)
{
    if (mode_count < 1) {
        throw std::invalid_argument("FourierBasis: mode_count must be >= 1");
    }
    if (grid_size < 4 * mode_count + 1) {
        throw std::invalid_argument("FourierBasis: grid_size must be >= 4K+1");
    }
    if (!(reference_metric > 0.0)) {
        throw std::invalid_argument("FourierBasis: reference metric must be positive");
    }

    const int dim = size();
    phi_.resize(grid_, dim);
    dphi_.resize(grid_, dim);
    const double c0 = 1.0 / std::sqrt(2.0 * std::numbers::pi * density_);
    const double ck = 1.0 / std::sqrt(std::numbers::pi * density_);
    for (int m = 0; m < grid_; ++m) {
        const double theta = node(m);
        phi_(m, 0) = c0;
        dphi_(m, 0) = 0.0;
        for (int k = 1; k <= modes_; ++k) {
            const double c = std::cos(k * theta);
            const double s = std::sin(k * theta);
            phi_(m, 2 * k - 1) = ck * c;
            phi_(m, 2 * k) = ck * s;
            dphi_(m, 2 * k - 1) = -ck * k * s;
            dphi_(m, 2 * k) = ck * k * c;
        }
    }
}

double FourierBasis::node(int m) const noexcept { return weight_ * m; }

double FourierBasis::eigenvalue(int index) const noexcept
{
    const double k = wavenumber(index);
    return k * k / metric_;
}

Vec FourierBasis::eigenvalues() const
{
    Vec lambda(size());
    for (int i = 0; i < size(); ++i) {
        lambda(i) = eigenvalue(i);
    }
    return lambda;
}

Vec FourierBasis::to_grid(const Vec& coeffs) const { return phi_ * coeffs; }

Vec FourierBasis::derivative_on_grid(const Vec& coeffs) const { return dphi_ * coeffs; }

Vec FourierBasis::project(const Vec& grid_values) const
{
    return phi_.transpose() * grid_values * (weight_ * density_);
}

double FourierBasis::integrate(const Vec& grid_values) const
{
    return grid_values.sum() * weight_ * density_;
}

Vec FourierBasis::cosine(int k, double amplitude) const
{
    if (k == 0) {
        return constant(amplitude);
    }
    Vec c = Vec::Zero(size());
    c(2 * k - 1) = amplitude * std::sqrt(std::numbers::pi * density_);
    return c;
}

Vec FourierBasis::sine(int k, double amplitude) const
{
    Vec c = Vec::Zero(size());
    c(2 * k) = amplitude * std::sqrt(std::numbers::pi * density_);
    return c;
}

Vec FourierBasis::constant(double value) const
{
    Vec c = Vec::Zero(size());
    c(0) = value * std::sqrt(2.0 * std::numbers::pi * density_);
    return c;
}

Vec FourierBasis::unit(int index) const
{
    Vec c = Vec::Zero(size());
    c(index) = 1.0;
    return c;
}

} // namespace evspde
