#include <doctest.h>

#include <cmath>

#include "evspde/scenario.hpp"
#include "evspde/solver.hpp"
#include "evspde/verify.hpp"

using namespace evspde;
using namespace evspde::solver;

namespace {

std::shared_ptr<const FourierBasis> circle_basis(int K)
{
    return std::make_shared<const FourierBasis>(K, 4 * K + 1);
}

operators::OperatorProvider constant_diagonal(std::shared_ptr<const FourierBasis> b, double d)
{
    const Vec diag = Vec::Constant(b->size(), d);
    auto op = operators::GalerkinOperator::make_diagonal("const", 0.0, b, diag,
                                                          [d](const Vec& u, const Vec& v) { return d * u.dot(v); });
    return [op](double) { return op; };
}

Scenario mcf(double T, int K, const Vec& u0, bool noisy)
{
    return scenario::mcf_circle(2, T, K, noisy ? scenario::MaybeNoise(noise::NoiseModel::canonical(K))
                                               : std::nullopt,
                                u0);
}

} // namespace

TEST_CASE("single step")
{
    const auto b = circle_basis(3);
    const Vec v = Vec::LinSpaced(b->size(), 1.0, 2.0);
    SolverConfig cfg;
    cfg.dt = 0.1;
    const noise::WienerIncrement quiet{0.1, Vec()};

    SUBCASE("zero everything leaves the state unchanged")
    {
        const auto s = step({0.0, v}, constant_diagonal(b, 0.0), {}, quiet, cfg);
        CHECK(s.coeffs == v);
        CHECK(s.t == doctest::Approx(0.1));
    }
    SUBCASE("scalar implicit Euler")
    {
        const auto s = step({0.0, v}, constant_diagonal(b, -1.0), {}, quiet, cfg);
        CHECK((s.coeffs - v / 1.1).cwiseAbs().maxCoeff() < 1e-15);
        cfg.scheme = Scheme::ExplicitEM;
        const auto e = step({0.0, v}, constant_diagonal(b, -1.0), {}, quiet, cfg);
        CHECK((e.coeffs - 0.9 * v).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("singular implicit systems are reported")
    {
        CHECK_THROWS_WITH(step({0.0, v}, constant_diagonal(b, 10.0), {}, quiet, cfg), doctest::Contains("singular"));
    }
    SUBCASE("explicit stability guard")
    {
        cfg.scheme = Scheme::ExplicitEM;
        CHECK_THROWS(step({0.0, v}, constant_diagonal(b, -6.0), {}, quiet, cfg));
    }
    SUBCASE("increment dt must match")
    {
        CHECK_THROWS(step({0.0, v}, constant_diagonal(b, 0.0), {}, {0.2, Vec()}, cfg));
    }
}

TEST_CASE("neutral mode of the MCF circle")
{
    const int K = 4;
    FourierBasis b(K, 4 * K + 1);
    const auto sc = mcf(0.2, K, b.cosine(2), false);
    SolverConfig cfg;
    cfg.dt = 2e-5; // 10^4 steps
    const auto traj = solve_path(sc, cfg, 0);
    CHECK(traj.steps == 10000);
    CHECK((traj.final_state() - b.cosine(2)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("deterministic MCF mode decay")
{
    const int K = 4;
    FourierBasis b(K, 4 * K + 1);
    SolverConfig cfg;
    cfg.dt = 1e-5;
    SUBCASE("constant mode grows like 1/(1-4t)")
    {
        const auto traj = solve_path(mcf(0.2, K, b.constant(0.7), false), cfg, 0);
        CHECK(std::abs(traj.final_state()(0) / b.constant(0.7)(0) - 5.0) / 5.0 <= 1e-3);
    }
    SUBCASE("cos mode")
    {
        const auto traj = solve_path(mcf(0.2, K, b.cosine(1), false), cfg, 0);
        const double amp = traj.final_state()(1) / b.cosine(1)(1);
        CHECK(std::abs(amp - std::pow(0.2, -0.75)) / std::pow(0.2, -0.75) <= 1e-3);
        CHECK(amp == doctest::Approx(3.3437).epsilon(1e-3));
    }
}

TEST_CASE("exact linear mode")
{
    const int K = 4;
    FourierBasis b(K, 4 * K + 1);
    const auto sc = mcf(0.2, K, b.constant(1.0), true);
    const auto law0 = exact_linear_mode(1, 0.0, sc);
    CHECK(law0.mean_multiplier == 1.0);
    CHECK(law0.variance == 0.0);
    // index 3 is cos 2θ, driven by σ_4 = 1/4
    for (double t : {0.05, 0.1, 0.2}) {
        const auto law = exact_linear_mode(3, t, sc);
        CHECK(law.mean_multiplier == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(law.variance == doctest::Approx(t / 16.0).epsilon(1e-12));
    }
    const auto c = exact_linear_mode(0, 0.1, sc);
    const auto c2 = exact_linear_mode(0, 0.1, sc, 1e-12);
    CHECK(c.mean_multiplier == doctest::Approx(1.0 / 0.6).epsilon(1e-14));
    // mode 0 grows: ∫₀^0.1 ((1-4s)/0.6)² ds = 0.784/4.32
    CHECK(c.variance == doctest::Approx(0.784 / 4.32).epsilon(1e-8));
    CHECK(std::abs(c.variance - c2.variance) <= 1e-8 * c2.variance);
    CHECK_THROWS(exact_linear_mode(0, 0.1, scenario::with_nonlinearity(sc, operators::NonlinearitySpec::tanh(1.0))));
}

TEST_CASE("time-independent closed form")
{
    const auto sc = scenario::heat(geometry::unit_circle(3), 1.0, noise::NoiseModel::canonical(3),
                                   Vec::Zero(7));
    const auto law = exact_linear_mode(1, 0.5, sc); // d = -1, σ = 1/2
    CHECK(law.mean_multiplier == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
    CHECK(law.variance == doctest::Approx(0.25 * (1 - std::exp(-1.0)) / 2.0).epsilon(1e-10));
}

TEST_CASE("determinism, digests and recording")
{
    const int K = 4;
    FourierBasis b(K, 4 * K + 1);
    const auto sc = mcf(0.1, K, b.cosine(1), true);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.master_seed = 99;
    cfg.record_stride = 10;
    const auto a = solve_path(sc, cfg, 3);
    const auto c = solve_path(sc, cfg, 3);
    CHECK(trajectory_csv(a) == trajectory_csv(c));
    CHECK(a.states.back() == c.states.back());
    CHECK(a.times.size() == 11);
    CHECK(a.times.back() == 0.1);
    CHECK(solve_path(sc, cfg, 4).final_state() != a.final_state());

    double recorded_max = 0.0;
    for (double x : a.h0_norm_sq) {
        recorded_max = std::max(recorded_max, x);
    }
    CHECK(a.sup_h0_norm_sq >= recorded_max);
    auto every = cfg;
    every.record_stride = 1;
    const auto full = solve_path(sc, every, 3);
    double full_max = 0.0;
    for (double x : full.h0_norm_sq) {
        full_max = std::max(full_max, x);
    }
    CHECK(a.sup_h0_norm_sq == full_max);

    const auto other = mcf(0.1, K, b.cosine(1, 2.0), true);
    CHECK(other.digest() != sc.digest());
    CHECK(mcf(0.1, K, b.cosine(1), true).digest() == sc.digest());

    const std::string csv = trajectory_csv(a, 3);
    CHECK(csv.rfind("t,H0_norm_sq,Hgt_norm_sq,coeff_0,coeff_1,coeff_2\n", 0) == 0);
    const std::string meta = trajectory_metadata_json(a, sc);
    CHECK(meta.find(sc.digest_hex()) != std::string::npos);
    CHECK(meta.find("\"master_seed\": 99") != std::string::npos);
}

TEST_CASE("non-finite states abort with the step index")
{
    const auto b = circle_basis(2);
    auto fam = std::make_shared<const geometry::MetricFamily>(
        geometry::build_metric_family(geometry::unit_circle(2), geometry::FactorProfile::constant(), 1.0));
    Scenario sc;
    sc.label = "blowup";
    sc.family = fam;
    sc.provider = constant_diagonal(fam->basis_ptr(), 9.0);
    sc.operator_description = "const(9)";
    sc.time_independent = true;
    sc.initial = Vec::Constant(5, 1e308);
    SolverConfig cfg;
    cfg.dt = 0.1; // growth factor 10 per step
    CHECK_THROWS_WITH(solve_path(sc, cfg, 0), doctest::Contains("step 1"));
}

TEST_CASE("dt must divide the horizon")
{
    FourierBasis b(2, 9);
    SolverConfig cfg;
    cfg.dt = 0.03;
    CHECK_THROWS(PathIntegrator(mcf(0.1, 2, b.cosine(1), false), cfg));
}

TEST_CASE("pushforward solution")
{
    const int K = 4;
    FourierBasis b(K, 4 * K + 1);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.record_stride = 5;
    const auto sc = mcf(0.2, K, b.cosine(1), true);
    const auto traj = solve_path(sc, cfg, 0);
    const geometry::PullbackMap map(sc.family);
    const auto surf = pushforward_solution(traj, map);
    const auto ne = geometry::norm_equivalence_constants(*sc.family);
    REQUIRE(surf.times.size() == traj.times.size());
    for (std::size_t k = 0; k < surf.times.size(); ++k) {
        const double t = surf.times[k];
        CHECK(surf.surface_norm_sq[k]
              == doctest::Approx(std::sqrt(1 - 4 * t) * surf.reference_norm_sq[k]).epsilon(1e-12));
        CHECK(surf.surface_norm_sq[k] >= ne.a2 * surf.reference_norm_sq[k] * (1 - 1e-10));
        CHECK(surf.surface_norm_sq[k] <= ne.b2 * surf.reference_norm_sq[k] * (1 + 1e-10));
        CHECK(surf.surface_norm_sq[k] <= surf.regularity_constant * surf.reference_norm_sq[k] * (1 + 1e-10));
    }

    const auto st = scenario::heat(geometry::unit_circle(K), 0.2, noise::NoiseModel::canonical(K), b.cosine(1));
    const auto straj = solve_path(st, cfg, 0);
    const auto ssurf = pushforward_solution(straj, geometry::PullbackMap(st.family));
    for (std::size_t k = 0; k < ssurf.times.size(); ++k) {
        CHECK(ssurf.surface_norm_sq[k] == doctest::Approx(ssurf.reference_norm_sq[k]).epsilon(1e-13));
    }
}

TEST_CASE("Monte Carlo mode statistics on the linear MCF scenario")
{
    const int K = 4;
    FourierBasis b(K, 4 * K + 1);
    const Vec u0 = b.constant(0.3) + b.cosine(1) + b.sine(2, -0.5);
    const auto sc = mcf(0.1, K, u0, true);
    SolverConfig cfg;
    cfg.dt = 1e-4;
    cfg.master_seed = 5;
    const std::size_t M = 4000;
    const auto finals = verify::final_states(PathIntegrator(sc, cfg), M);
    for (int i = 0; i < 5; ++i) {
        double s = 0, s2 = 0;
        for (const auto& v : finals) {
            s += v(i);
        }
        const double mean = s / M;
        for (const auto& v : finals) {
            s2 += (v(i) - mean) * (v(i) - mean);
        }
        const double var = s2 / (M - 1);
        const auto law = exact_linear_mode(i, 0.1, sc);
        if (law.variance == 0.0) { // mode beyond the noise: deterministic
            CHECK(std::abs(mean - law.mean_multiplier * u0(i)) <= 1e-3 * std::abs(u0(i)) + 1e-12);
            continue;
        }
        CHECK(std::abs(mean - law.mean_multiplier * u0(i)) <= 3.0 * std::sqrt(var / M));
        CHECK(var >= 0.85 * law.variance);
        CHECK(var <= 1.15 * law.variance);
    }
}

TEST_CASE("sup moment is finite and stable under doubling M")
{
    const int K = 4;
    FourierBasis b(K, 4 * K + 1);
    const auto sc = mcf(0.1, K, b.cosine(1), true);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    const auto m1 = verify::estimate_sup_moment(sc, cfg, 500);
    const auto m2 = verify::estimate_sup_moment(sc, cfg, 1000);
    CHECK(std::isfinite(m1.mean));
    CHECK(std::abs(m2.mean - m1.mean) / m1.mean < 0.1);
    const double ratio = m2.standard_error / m1.standard_error;
    CHECK(ratio >= 0.5);
    CHECK(ratio <= 0.9);
    CHECK(m1.half_width == doctest::Approx(3.0 * m1.standard_error));
    CHECK_THROWS(verify::estimate_sup_moment(sc, cfg, 50));
}
