// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "evspde/geometry.hpp"
#include "evspde/levelset.hpp"
#include "evspde/noise.hpp"
#include "evspde/operators.hpp"
#include "evspde/scenario.hpp"
#include "evspde/solver.hpp"
#include "evspde/verify.hpp"

using namespace evspde;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::shared_ptr<const geometry::MetricFamily> family(geometry::FactorProfile p, double T, int K)
{
    return std::make_shared<const geometry::MetricFamily>(
        geometry::build_metric_family(geometry::unit_circle(K), p, T));
}

// 1. deterministic decay of the MCF circle modes
Outcome mcf_decay()
{
    const auto t0 = Clock::now();
    const int K = 4;
    const double T = 0.2;
    FourierBasis b(K, 4 * K + 1);
    const Vec u0 = b.constant(1.0) + b.cosine(1) + b.cosine(2) + b.cosine(3);
    const auto sc = scenario::mcf_circle(2, T, K, std::nullopt, u0);
    solver::SolverConfig cfg;
    cfg.dt = 1e-5;
    const Vec v = solver::solve_path(sc, cfg, 0).final_state();
    double worst = 0.0;
    for (int k : {0, 1, 3}) {
        const int idx = k == 0 ? 0 : 2 * k - 1;
        const double expected = std::pow(1.0 - 4.0 * T, (k * k - 4.0) / 4.0);
        worst = std::max(worst, std::abs(v(idx) / u0(idx) - expected) / expected);
    }
    const double drift = std::abs(v(3) - u0(3));
    const double secs = seconds_since(t0);
    std::ostringstream os;
    os << "max rel err " << worst << ", k=2 drift " << drift << ", " << fmt("%.2f s", secs);
    return {worst <= 1e-3 && drift <= 1e-10 && secs < 5.0, os.str()};
}

// 2. Monte Carlo mode statistics against the exact OU law
Outcome mode_statistics()
{
    const auto t0 = Clock::now();
    const int K = 16;
    const double T = 0.2;
    const std::size_t M = 4000;
    FourierBasis b(K, 4 * K + 1);
    const Vec u0 = b.constant(0.5) + b.cosine(1) + b.sine(1, 0.5) + b.cosine(2, -1.0) + b.sine(2, 2.0);
    const auto sc = scenario::mcf_circle(2, T, K, noise::NoiseModel::canonical(K), u0);
    solver::SolverConfig cfg;
    cfg.dt = 1e-4;
    cfg.master_seed = 20261019;
    const auto finals = verify::final_states(solver::PathIntegrator(sc, cfg), M);
    const double band = 3.0 * std::sqrt(2.0 / (M - 1.0));
    bool ok = true;
    double worst_mean = 0.0, worst_var = 0.0;
    for (int i = 0; i < 5; ++i) {
        double s = 0.0;
        for (const auto& v : finals) {
            s += v(i);
        }
        const double mean = s / M;
        double s2 = 0.0;
        for (const auto& v : finals) {
            s2 += (v(i) - mean) * (v(i) - mean);
        }
        const double var = s2 / (M - 1.0);
        const auto law = solver::exact_linear_mode(i, T, sc);
        const double z = std::abs(mean - law.mean_multiplier * u0(i)) / std::sqrt(var / M);
        const double rv = std::abs(var / law.variance - 1.0);
        worst_mean = std::max(worst_mean, z);
        worst_var = std::max(worst_var, rv / band);
        ok = ok && z <= 3.0 && rv <= band;
    }
    const double secs = seconds_since(t0);
    std::ostringstream os;
    os << "max |mean err|/SE " << fmt("%.2f", worst_mean) << " (<= 3), max var dev/band " << fmt("%.2f", worst_var)
       << " (<= 1), " << fmt("%.1f s", secs);
    return {ok && secs < 120.0, os.str()};
}

// 3. H1-H4 certification for heat, MCF sphere and p-Laplace
Outcome certification()
{
    const auto t0 = Clock::now();
    const int K = 8;
    const int N = 500;
    const auto nm = noise::NoiseModel::canonical(K);

    const auto stat = family(geometry::FactorProfile::constant(), 1.0, K);
    const auto lb = operators::assemble_laplace_beltrami(stat->basis_ptr());
    const verify::Target heat{[lb](double) { return lb; }, 0.0, "heat"};
    const auto mcf_basis = family(geometry::FactorProfile::mcf(2), 0.2, K)->basis_ptr();
    const verify::Target mcf{[mcf_basis](double t) { return operators::assemble_mcf_sphere(mcf_basis, 2, t); }, 0.2,
                             "mcf"};
    const auto pl = operators::assemble_p_laplace(*stat, 4.0);
    const verify::Target plap{[pl](double) { return pl; }, 0.0, "plaplace"};

    struct Case {
        const char* name;
        const verify::Target* target;
        verify::AnalyticConstants constants;
    };
    const auto heat_c = verify::heat_constants(nm);
    const auto mcf_c = verify::mcf_sphere_constants(2, 0.2, nm);
    const auto pl_c = verify::p_laplace_constants(4.0, *stat, nm);
    const bool declared_ok = heat_c.c == 0.0 && heat_c.c1 == 2.0 && heat_c.c2 == 2.0 && heat_c.alpha == 2.0
                             && heat_c.c3 == 1.0 && mcf_c.c <= 40.0 + 1e-12 && mcf_c.c3 <= 40.0 + 1e-12
                             && pl_c.c <= 1e-10 && pl_c.alpha == 4.0 && pl_c.c3 <= 1.0;
    const std::vector<Case> cases{{"heat", &heat, heat_c}, {"mcf", &mcf, mcf_c}, {"plaplace", &plap, pl_c}};

    bool ok = declared_ok;
    std::ostringstream os;
    for (const auto& c : cases) {
        std::string flags;
        for (std::uint64_t seed : {101u, 202u}) {
            const auto rep = verify::certify(*c.target, c.constants, N, seed);
            ok = ok && rep.passed();
            flags += rep.passed() ? "+" : "-";
            if (!rep.passed()) {
                for (const auto* chk : {&rep.h1, &rep.h2, &rep.h3, &rep.h4}) {
                    if (!chk->passed) {
                        flags += chk->name + "(" + std::to_string(chk->estimate) + ")";
                    }
                }
            }
        }
        os << c.name << " " << flags << "; ";
    }
    const double secs = seconds_since(t0);
    os << fmt("%.1f s", secs);
    return {ok && secs < 30.0, os.str()};
}

// 4. the tanh nonlinearity does not raise the monotonicity estimate
Outcome nonlinearity_preservation()
{
    const auto t0 = Clock::now();
    const int K = 8;
    const auto basis = family(geometry::FactorProfile::mcf(2), 0.2, K)->basis_ptr();
    const verify::Target lin{[basis](double t) { return operators::assemble_mcf_sphere(basis, 2, t); }, 0.2, "mcf"};
    const auto nl = operators::NonlinearitySpec::tanh(1.0);
    const verify::Target non{[basis, nl](double t) {
                                 return operators::assemble_mcf_sphere(basis, 2, t).minus_nonlinearity(nl);
                             },
                             0.2, "mcf-tanh"};
    const auto a = verify::check_weak_monotonicity(lin, 500, 7, 40.0);
    const auto b = verify::check_weak_monotonicity(non, 500, 7, 40.0);
    const double secs = seconds_since(t0);
    std::ostringstream os;
    os << "linear " << a.estimate << ", with tanh " << b.estimate << ", " << fmt("%.2f s", secs);
    return {b.estimate <= a.estimate + 1e-8 && secs < 10.0, os.str()};
}

// 5. Poincaré constants of circles
Outcome poincare()
{
    const double c1 = verify::estimate_poincare(*family(geometry::FactorProfile::constant(1.0), 1.0, 8));
    const double c2 = verify::estimate_poincare(*family(geometry::FactorProfile::constant(4.0), 1.0, 8));
    std::ostringstream os;
    os.precision(12);
    os << "unit " << c1 << ", radius 2 " << c2;
    return {std::abs(c1 - 1.0) <= 1e-6 && std::abs(c2 - 2.0) <= 1e-6, os.str()};
}

// 6. Hilbert-Schmidt norm and increment covariance
Outcome hilbert_schmidt()
{
    const double h = noise::NoiseModel::canonical(1000).hs_norm_sq();
    const double z = std::numbers::pi * std::numbers::pi / 6.0;
    const bool hs_ok = h >= z - 1e-3 && h <= z;

    const auto m = noise::NoiseModel::canonical(2);
    const double dt = 0.01;
    const int n = 100000;
    CounterEngine e(derive_seed(6, 6));
    double s11 = 0, s22 = 0, s12 = 0;
    for (int i = 0; i < n; ++i) {
        const auto inc = noise::sample_increment(m, dt, e);
        s11 += inc.xi(0) * inc.xi(0);
        s22 += inc.xi(1) * inc.xi(1);
        s12 += inc.xi(0) * inc.xi(1);
    }
    const double v1 = dt, v2 = dt / 4.0;
    const bool cov_ok = std::abs(s11 / n - v1) <= 3.0 * v1 * std::sqrt(2.0 / n)
                        && std::abs(s22 / n - v2) <= 3.0 * v2 * std::sqrt(2.0 / n)
                        && std::abs(s12 / n) <= 3.0 * std::sqrt(v1 * v2 / n);
    std::ostringstream os;
    os.precision(10);
    os << "hs^2(J=1000) " << h << ", covariance test " << (cov_ok ? "ok" : "failed");
    return {hs_ok && cov_ok, os.str()};
}

// 7. norm equivalence and the pushforward regularity bound on mcf(2)
Outcome norm_equivalence()
{
    const double T = 0.2;
    const auto fam = family(geometry::FactorProfile::mcf(2), T, 8);
    const auto ne = geometry::norm_equivalence_constants(*fam);
    const double a2 = std::sqrt(1.0 - 4.0 * T), b2 = 1.0;
    const bool constants_ok = std::abs(ne.a2 - a2) <= 1e-12 && std::abs(ne.b2 - b2) <= 1e-12;
    CounterEngine e(derive_seed(7, 7));
    int violations = 0;
    const double bound = fam->b1() * ne.b2 / ne.a2;
    for (int i = 0; i < 100; ++i) {
        Vec u(fam->basis().size());
        for (int j = 0; j < u.size(); ++j) {
            u(j) = standard_normal(e);
        }
        const double h0 = u.squaredNorm();
        for (int k = 0; k < 10; ++k) {
            const double t = T * k / 9.0;
            const double ht = fam->h_norm_sq(u, t);
            violations += ht < a2 * h0 - 1e-10 * h0 || ht > b2 * h0 + 1e-10 * h0;
            violations += ht > bound * h0 * (1 + 1e-10);
        }
    }
    FourierBasis b(8, 33);
    const auto sc = scenario::mcf_circle(2, T, 8, noise::NoiseModel::canonical(8), b.cosine(1));
    solver::SolverConfig cfg;
    cfg.dt = 1e-3;
    const auto traj = solver::solve_path(sc, cfg, 0);
    const auto surf = solver::pushforward_solution(traj, geometry::PullbackMap(sc.family));
    for (std::size_t k = 0; k < surf.times.size(); ++k) {
        violations += surf.surface_norm_sq[k] > surf.regularity_constant * surf.reference_norm_sq[k] * (1 + 1e-10);
    }
    std::ostringstream os;
    os << "a2 " << ne.a2 << ", b2 " << ne.b2 << ", violations " << violations;
    return {constants_ok && violations == 0, os.str()};
}

// 8. strong order of the semi-implicit scheme under shared noise
Outcome strong_convergence()
{
    const auto t0 = Clock::now();
    const int K = 8;
    FourierBasis b(K, 4 * K + 1);
    const auto sc = scenario::mcf_circle(2, 0.1, K, noise::NoiseModel::canonical(K), b.cosine(1));
    solver::SolverConfig ref;
    ref.dt = 1e-5;
    ref.master_seed = 8;
    const auto rep = verify::estimate_strong_order(sc, ref, {1e-3, 5e-4, 2.5e-4}, 200);
    const double secs = seconds_since(t0);
    std::ostringstream os;
    os << "errors";
    for (double err : rep.errors) {
        os << " " << err;
    }
    os << ", slope " << fmt("%.3f", rep.slope) << " (>= 0.8), " << fmt("%.1f s", secs);
    return {!rep.exact && rep.slope >= 0.8 && secs < 180.0, os.str()};
}

// 9. GBM random metrics
Outcome gbm_metric()
{
    const int K = 4;
    const double T = 1.0;
    FourierBasis b(K, 4 * K + 1);
    const Vec u0 = b.constant(0.5) + b.cosine(1);
    operators::ParabolicCoefficients coef;
    coef.a = {1.0, 0.3, 0.0};
    coef.ctilde = {0.5, 0.0, 0.2};
    solver::SolverConfig cfg;
    cfg.dt = 1e-2;

    bool positive = true, finite = true;
    double worst_mean = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto table = geometry::gbm_factor_path({0.0, 0.2, 100, seed}, T);
        for (double f : table.values) {
            positive = positive && f > 0.0;
        }
        const auto fam = std::make_shared<const geometry::MetricFamily>(geometry::build_metric_family(
            geometry::unit_circle(K), geometry::FactorProfile::table(table, "gbm"), T));
        const auto sc = scenario::general_parabolic(fam, coef, noise::NoiseModel::canonical(K), u0);
        const auto est = verify::estimate_sup_moment(sc, cfg, 100);
        finite = finite && std::isfinite(est.mean) && std::isfinite(est.half_width);
        worst_mean = std::max(worst_mean, est.mean);
    }

    // zero volatility against the deterministic exponential profile on the same nodes
    const double r = -0.1;
    const auto g0 = geometry::gbm_factor_path({r, 0.0, 100, 3}, T);
    geometry::FactorTable expo;
    for (int k = 0; k <= 100; ++k) {
        const double t = T * k / 100.0;
        expo.times.push_back(t);
        expo.values.push_back(std::exp(r * t));
    }
    auto solve = [&](const geometry::FactorTable& tab, const char* label) {
        const auto fam = std::make_shared<const geometry::MetricFamily>(geometry::build_metric_family(
            geometry::unit_circle(K), geometry::FactorProfile::table(tab, label), T));
        return solver::solve_path(scenario::general_parabolic(fam, coef, noise::NoiseModel::canonical(K), u0), cfg, 0);
    };
    const auto pa = solve(g0, "gbm");
    const auto pb = solve(expo, "exponential");
    double diff = 0.0;
    for (std::size_t k = 0; k < pa.states.size(); ++k) {
        diff = std::max(diff, (pa.states[k] - pb.states[k]).cwiseAbs().maxCoeff());
    }
    std::ostringstream os;
    os << "20 paths positive " << (positive ? "yes" : "no") << ", sup moments finite " << (finite ? "yes" : "no")
       << " (max " << fmt("%.3g", worst_mean) << "), sigma=0 vs exponential " << diff;
    return {positive && finite && diff <= 1e-10 && pa.states.size() == pb.states.size(), os.str()};
}

// 10. level-set topology change
Outcome level_sets()
{
    geometry::LevelSetField f;
    f.resolution = 256;
    const int n06 = geometry::level_set_components(f, 0.6).components;
    const int n04 = geometry::level_set_components(f, 0.4).components;
    const int n03 = geometry::level_set_components(f, 0.3).components;
    const auto pinch = geometry::level_set_components(f, 0.5);
    double best = INFINITY;
    for (const auto& pl : pinch.polylines) {
        for (const auto& p : pl.points) {
            best = std::max(std::abs(p.x) / f.cell_width(), std::abs(p.y) / f.cell_height()) < best
                       ? std::max(std::abs(p.x) / f.cell_width(), std::abs(p.y) / f.cell_height())
                       : best;
        }
    }
    std::ostringstream os;
    os << "components c=0.6:" << n06 << " c=0.4:" << n04 << " c=0.3:" << n03 << ", c=0.5 distance to origin "
       << fmt("%.3f", best) << " cells";
    return {n06 == 1 && n04 == 2 && n03 == 2 && best <= 1.0, os.str()};
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"MCF-circle deterministic decay", mcf_decay},
        {"mode statistics vs exact OU law", mode_statistics},
        {"H1-H4 certification", certification},
        {"monotone nonlinearity preservation", nonlinearity_preservation},
        {"Poincare constants", poincare},
        {"Hilbert-Schmidt norm and covariance", hilbert_schmidt},
        {"norm equivalence and regularity", norm_equivalence},
        {"strong convergence slope", strong_convergence},
        {"GBM random metric", gbm_metric},
        {"level-set figure reproduction", level_sets},
    };
    int failed = 0;
    int index = 1;
    for (const auto& [name, fn] : criteria) {
        Outcome out;
        try {
            out = fn();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %2d: %s | %s | %s\n", index++, out.passed ? "PASS" : "FAIL", name, out.detail.c_str());
        std::fflush(stdout);
        failed += !out.passed;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
