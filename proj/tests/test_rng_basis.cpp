#include <doctest.h>

#include <cmath>
#include <numbers>

#include "evspde/basis.hpp"
#include "evspde/rng.hpp"

using namespace evspde;

TEST_CASE("counter engine is a pure function of key and position")
{
    CounterEngine a(derive_seed(7, 3, 1));
    CounterEngine b(derive_seed(7, 3, 1));
    for (int i = 0; i < 100; ++i) {
        CHECK(a() == b());
    }
    CHECK(a.position() == 100);
    CHECK(derive_seed(7, 3, 1) != derive_seed(7, 3, 2));
    CHECK(derive_seed(7, 3, 1) != derive_seed(7, 4, 1));
}

TEST_CASE("standard normal moments")
{
    CounterEngine e(11);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = standard_normal(e);
        s += z;
        s2 += z * z;
    }
    CHECK(std::abs(s / n) < 3.0 / std::sqrt(n) * 1.5);
    CHECK(std::abs(s2 / n - 1.0) < 3.0 * std::sqrt(2.0 / n) * 1.5);
}

TEST_CASE("fourier basis is orthonormal in the reference measure")
{
    for (double g0 : {1.0, 4.0}) {
        FourierBasis b(6, 25, g0);
        const Mat& phi = b.values();
        const Mat gram = phi.transpose() * phi * (b.weight() * b.density());
        CHECK((gram - Mat::Identity(b.size(), b.size())).cwiseAbs().maxCoeff() < 1e-13);
        CHECK(b.eigenvalue(0) == 0.0);
        CHECK(b.eigenvalue(3) == doctest::Approx(4.0 / g0));
        CHECK(b.eigenvalue(4) == doctest::Approx(4.0 / g0));
    }
}

TEST_CASE("projection inverts grid evaluation")
{
    FourierBasis b(5, 21);
    Vec c = Vec::LinSpaced(b.size(), -1.0, 2.0);
    CHECK((b.project(b.to_grid(c)) - c).cwiseAbs().maxCoeff() < 1e-13);
    // d/dθ cos θ = -sin θ
    const Vec d = b.project(b.derivative_on_grid(b.cosine(1)));
    CHECK((d - b.sine(1, -1.0)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(b.integrate(b.to_grid(b.constant(1.0))) == doctest::Approx(2.0 * std::numbers::pi));
}
