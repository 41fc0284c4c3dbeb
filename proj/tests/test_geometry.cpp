#include <doctest.h>

#include <cmath>
#include <numbers>

#include "evspde/geometry.hpp"
#include "evspde/rng.hpp"

using namespace evspde;
using namespace evspde::geometry;

namespace {

std::shared_ptr<const MetricFamily> shared(MetricFamily f) { return std::make_shared<const MetricFamily>(std::move(f)); }

Vec random_coeffs(int dim, CounterEngine& e)
{
    Vec v(dim);
    for (int i = 0; i < dim; ++i) {
        v(i) = standard_normal(e);
    }
    return v;
}

} // namespace

TEST_CASE("mcf radius")
{
    CHECK(mcf_radius(0.0, 2) == 1.0);
    CHECK(mcf_radius(0.125, 2) == doctest::Approx(0.7071067811865476).epsilon(1e-15));
    CHECK_THROWS_AS(mcf_radius(0.25, 2), std::domain_error);
    CHECK_THROWS_AS(mcf_radius(0.3, 2), std::domain_error);
    // strictly decreasing
    double prev = 2.0;
    for (int k = 0; k < 100; ++k) {
        const double r = mcf_radius(0.0024 * k, 2);
        CHECK(r < prev);
        prev = r;
    }
}

TEST_CASE("reference manifold invariants")
{
    CHECK_NOTHROW(unit_circle(8).validate());
    CHECK(unit_circle(8).effective_grid() == 33);
    CHECK_THROWS(unit_circle(8, 2, 32).validate());
    CHECK_THROWS(unit_circle(8, 1).validate());
    CHECK(flat_torus(4.0 * std::numbers::pi, 4).base_metric() == doctest::Approx(4.0));
}

TEST_CASE("build_metric_family bounds")
{
    SUBCASE("static unit circle")
    {
        const auto f = build_metric_family(unit_circle(4), FactorProfile::constant(), 1.0);
        CHECK(f.a1() == 1.0);
        CHECK(f.b1() == 1.0);
        CHECK(f.is_static());
    }
    SUBCASE("mcf(2), T = 0.2")
    {
        const auto f = build_metric_family(unit_circle(4), FactorProfile::mcf(2), 0.2);
        CHECK(std::abs(f.a1() - 0.4472135955) < 1e-10);
        CHECK(std::abs(f.a1() - std::sqrt(0.2)) < 1e-12);
        CHECK(f.b1() == 1.0);
        CHECK(f.a3() == doctest::Approx(1.0));
        CHECK(f.b3() == doctest::Approx(5.0));
    }
    SUBCASE("gbm with zero volatility is a deterministic exponential")
    {
        const auto table = gbm_factor_path({-0.1, 0.0, 100, 5}, 1.0);
        const auto f = build_metric_family(unit_circle(4), FactorProfile::table(table, "gbm"), 1.0);
        CHECK(std::abs(f.a1() - std::exp(-0.05)) < 1e-12);
        for (double t : {0.0, 0.333, 0.5, 1.0}) {
            CHECK(f.factor(t) == doctest::Approx(std::exp(-0.1 * t)).epsilon(1e-5));
        }
    }
    SUBCASE("rejections")
    {
        CHECK_THROWS(build_metric_family(unit_circle(4), FactorProfile::mcf(2), 0.25));
        CHECK_THROWS(build_metric_family(unit_circle(4), FactorProfile::constant(-1.0), 1.0));
        CHECK_THROWS(FactorProfile::table({{0.0, 1.0}, {1.0, -0.5}}));
        CHECK_THROWS(build_metric_family(unit_circle(4), FactorProfile::table({{0.0, 0.5}, {1.0, 1.0}}), 2.0));
    }
}

TEST_CASE("mcf factor equals the squared radius")
{
    const auto f = build_metric_family(unit_circle(4), FactorProfile::mcf(2), 0.2);
    for (int k = 0; k <= 50; ++k) {
        const double t = 0.2 * k / 50.0;
        CHECK(std::abs(f.factor(t) - std::pow(mcf_radius(t, 2), 2)) < 1e-14);
    }
}

TEST_CASE("norm equivalence constants")
{
    SUBCASE("static")
    {
        const auto ne = norm_equivalence_constants(build_metric_family(unit_circle(4), FactorProfile::constant(), 1.0));
        CHECK(ne.a2 == 1.0);
        CHECK(ne.b2 == 1.0);
    }
    SUBCASE("mcf(2), sandwich and the volume of the shrunken circle")
    {
        const auto fam = build_metric_family(unit_circle(6), FactorProfile::mcf(2), 0.2);
        const auto ne = norm_equivalence_constants(fam);
        CHECK(std::abs(ne.a2 - std::sqrt(0.2)) < 1e-12);
        CHECK(ne.b2 == doctest::Approx(1.0));
        const Vec one = fam.basis().constant(1.0);
        CHECK(fam.h_norm_sq(one, 0.2) == doctest::Approx(2.0 * std::numbers::pi * std::sqrt(0.2)).epsilon(1e-12));
        CounterEngine e(3);
        int violations = 0;
        for (int i = 0; i < 100; ++i) {
            const Vec u = random_coeffs(fam.basis().size(), e);
            for (int k = 0; k < 10; ++k) {
                const double t = 0.2 * k / 9.0;
                const double h0 = u.squaredNorm();
                const double ht = fam.h_norm_sq(u, t);
                violations += ht < ne.a2 * h0 * (1 - 1e-10) || ht > ne.b2 * h0 * (1 + 1e-10);
            }
        }
        CHECK(violations == 0);
    }
    SUBCASE("gbm path: min and max of the square-root factor")
    {
        const auto table = gbm_factor_path({0.0, 0.2, 400, 42}, 1.0);
        const auto fam = build_metric_family(unit_circle(4), FactorProfile::table(table, "gbm"), 1.0);
        const auto ne = norm_equivalence_constants(fam);
        double lo = INFINITY, hi = 0.0;
        for (double f : table.values) {
            lo = std::min(lo, std::sqrt(f));
            hi = std::max(hi, std::sqrt(f));
        }
        CHECK(std::abs(ne.a2 - lo) < 1e-12);
        CHECK(std::abs(ne.b2 - hi) < 1e-12);
    }
}

TEST_CASE("gbm factor path")
{
    SUBCASE("zero volatility")
    {
        const auto t = gbm_factor_path({-0.02, 0.0, 10, 1}, 1.0);
        REQUIRE(t.values.size() == 11);
        for (std::size_t k = 0; k < t.values.size(); ++k) {
            CHECK(t.values[k] == doctest::Approx(std::exp(-0.02 * t.times[k])).epsilon(1e-15));
        }
    }
    SUBCASE("positivity and start value")
    {
        const auto t = gbm_factor_path({0.0, 0.2, 100, 42}, 1.0);
        CHECK(t.values.front() == 1.0);
        for (double f : t.values) {
            CHECK(f > 0.0);
        }
    }
    SUBCASE("log increments follow N((r - σ²/2)Δt, σ²Δt)")
    {
        const int steps = 1000;
        const auto t = gbm_factor_path({0.0, 0.2, steps, 42}, 1.0);
        const double dt = 1.0 / steps;
        double s = 0.0;
        for (int k = 0; k < steps; ++k) {
            s += std::log(t.values[k + 1] / t.values[k]);
        }
        const double mean = s / steps;
        const double se = 0.2 * std::sqrt(dt) / std::sqrt(steps);
        CHECK(std::abs(mean - (-0.02 * dt)) <= 3.0 * se);
    }
    SUBCASE("bit reproducible")
    {
        const auto a = gbm_factor_path({0.0, 0.2, 64, 9}, 2.0);
        const auto b = gbm_factor_path({0.0, 0.2, 64, 9}, 2.0);
        CHECK(a.values == b.values);
        CHECK(a.times == b.times);
        const auto c = gbm_factor_path({0.0, 0.2, 64, 10}, 2.0);
        CHECK(a.values != c.values);
    }
    SUBCASE("constraint")
    {
        CHECK_THROWS_WITH_AS(gbm_factor_path({0.05, 0.2, 10, 1}, 1.0), doctest::Contains("r - sigma^2/2 < 0"),
                             std::invalid_argument);
    }
    SUBCASE("csv export")
    {
        const auto csv = factor_table_csv(gbm_factor_path({-0.02, 0.0, 2, 1}, 1.0));
        CHECK(csv.rfind("t,f\n0,1\n0.5,", 0) == 0);
        CHECK(csv.back() == '\n');
    }
}

TEST_CASE("pullback map")
{
    const auto fam = shared(build_metric_family(unit_circle(5), FactorProfile::mcf(2), 0.2));
    const PullbackMap map(fam);
    CounterEngine e(8);
    const int dim = fam->basis().size();

    SUBCASE("F_0 is the identity")
    {
        const Vec u = random_coeffs(dim, e);
        CHECK(map.push(u, 0.0) == u);
        CHECK(map.pull(map.push(u, 0.1), 0.1) == u);
        CHECK_THROWS(map.push(u, 0.21));
    }
    SUBCASE("adjoint identity on random pairs")
    {
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const Vec u = random_coeffs(dim, e);
            const Vec v = random_coeffs(dim, e);
            for (int k = 0; k < 10; ++k) {
                const double t = 0.2 * k / 10.0;
                worst = std::max(worst, std::abs(map.pulled_back_inner(u, v, t) - u.dot(v)) / (u.norm() * v.norm()));
            }
        }
        CHECK(worst <= 1e-9);
    }
    SUBCASE("operator bounds p2, q2")
    {
        for (int i = 0; i < 50; ++i) {
            const Vec u = random_coeffs(dim, e);
            const double t = 0.2 * i / 50.0;
            CHECK(map.h_norm_sq(u, t) >= map.p2() * u.squaredNorm() * (1 - 1e-12));
            CHECK(map.h_norm_sq(u, t) <= map.q2() * u.squaredNorm() * (1 + 1e-12));
        }
    }
}
