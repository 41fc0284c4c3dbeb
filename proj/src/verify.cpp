#include "evspde/verify.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "evspde/csv.hpp"

namespace evspde::verify {

namespace {

constexpr double kSlack = 1.05;
constexpr double kHemiStep = 1e-3;
constexpr int kRandomDualProbes = 50;

double uniform(CounterEngine& engine)
{
    return static_cast<double>(engine() >> 11) * (1.0 / 9007199254740992.0);
}

double sample_time(const Target& target, CounterEngine& engine)
{
    return target.horizon > 0.0 ? target.horizon * uniform(engine) : 0.0;
}

// log-uniform amplitude in [0.1, 10] so inhomogeneous inequalities see several scales
double amplitude(CounterEngine& engine) { return std::pow(10.0, 2.0 * uniform(engine) - 1.0); }

void require_samples(int samples, int minimum, const char* what)
{
    if (samples < minimum) {
        throw std::invalid_argument(std::string(what) + ": needs at least " + std::to_string(minimum) + " samples");
    }
}

} // namespace

Vec random_probe(const FourierBasis& basis, bool mean_zero, CounterEngine& engine)
{
    Vec out(basis.size());
    for (int i = 0; i < basis.size(); ++i) {
        out(i) = standard_normal(engine) / std::sqrt(1.0 + basis.eigenvalue(i));
    }
    if (mean_zero) {
        out(0) = 0.0;
    }
    return out;
}

CheckResult check_weak_monotonicity(const Target& target, int samples, std::uint64_t seed, double bound)
{
    require_samples(samples, 100, "check_weak_monotonicity");
    CounterEngine engine(derive_seed(seed, 2));
    CheckResult res{"H2", -std::numeric_limits<double>::infinity(), bound, false, samples, 0.0, {}};
    res.ratios.reserve(samples);
    for (int k = 0; k < samples; ++k) {
        const double t = sample_time(target, engine);
        const auto op = target.provider(t);
        const Vec u = random_probe(op.basis(), op.mean_zero(), engine);
        const Vec v = random_probe(op.basis(), op.mean_zero(), engine);
        const Vec w = u - v;
        const double value = 2.0 * (op.pairing(u, w) - op.pairing(v, w)) / w.squaredNorm();
        res.ratios.push_back(value);
        res.estimate = std::max(res.estimate, value);
    }
    res.passed = res.estimate <= bound * kSlack + 1e-10;
    return res;
}

CheckResult check_coercivity(const Target& target, const noise::NoiseModel& noise, int samples, std::uint64_t seed,
                             const CoercivityCandidate& cand)
{
    return check_coercivity(target, noise.hs_norm_sq(), samples, seed, cand);
}

CheckResult check_coercivity(const Target& target, double noise_hs_sq, int samples, std::uint64_t seed,
                             const CoercivityCandidate& cand)
{
    require_samples(samples, 1, "check_coercivity");
    CounterEngine engine(derive_seed(seed, 3));
    const double f = noise_hs_sq;
    const double b_term = noise_hs_sq; // B does not depend on the solution
    CheckResult res{"H3", -std::numeric_limits<double>::infinity(), 1e-8, false, samples, 0.0, {}};
    res.ratios.reserve(samples);
    for (int k = 0; k < samples; ++k) {
        const double t = sample_time(target, engine);
        const auto op = target.provider(t);
        const Vec v = amplitude(engine) * random_probe(op.basis(), op.mean_zero(), engine);
        const double pair = 2.0 * op.pairing(v, v);
        const double h_sq = v.squaredNorm();
        const double v_pow = std::pow(op.v_norm(v), cand.alpha);
        const double lhs = pair + b_term;
        const double rhs = cand.c1 * h_sq - cand.c2 * v_pow + f;
        const double scale = std::abs(pair) + std::abs(cand.c1) * h_sq + std::abs(cand.c2) * v_pow + f + b_term;
        const double ratio = (lhs - rhs) / scale;
        res.ratios.push_back(ratio);
        res.estimate = std::max(res.estimate, ratio);
    }
    res.passed = res.estimate <= res.bound && cand.c2 > 0.0 && cand.alpha > 1.0;
    return res;
}

CheckResult check_boundedness(const Target& target, int samples, std::uint64_t seed, double alpha, double bound)
{
    require_samples(samples, 100, "check_boundedness");
    CounterEngine engine(derive_seed(seed, 4));
    CounterEngine probe_engine(derive_seed(seed, 41));
    CheckResult res{"H4", 0.0, bound, false, samples, 0.0, {}};
    res.ratios.reserve(samples);

    const auto op0 = target.provider(0.0);
    const auto& basis = op0.basis();
    const bool mean_zero = op0.mean_zero();
    std::vector<Vec> directions;
    for (int i = mean_zero ? 1 : 0; i < basis.size(); ++i) {
        directions.push_back(basis.unit(i));
    }
    for (int k = 0; k < kRandomDualProbes; ++k) {
        Vec x = random_probe(basis, mean_zero, probe_engine);
        directions.push_back(x / x.norm());
    }
    const Vec spectral_weight = (1.0 + basis.eigenvalues().array()).inverse();

    for (int k = 0; k < samples; ++k) {
        const double t = sample_time(target, engine);
        const auto op = target.provider(t);
        const Vec v = amplitude(engine) * random_probe(basis, mean_zero, engine);
        const Vec r = op.residual(v);
        double dual = 0.0;
        auto consider = [&](const Vec& x) {
            const double nx = op.v_norm(x);
            if (nx > 0.0) {
                dual = std::max(dual, std::abs(x.dot(r)) / nx);
            }
        };
        for (const auto& x : directions) {
            consider(x);
        }
        Vec riesz = spectral_weight.cwiseProduct(r);
        if (mean_zero) {
            riesz(0) = 0.0;
        }
        consider(riesz);
        const double ratio = dual / std::pow(op.v_norm(v), alpha - 1.0);
        res.ratios.push_back(ratio);
        res.estimate = std::max(res.estimate, ratio);
    }
    res.passed = res.estimate <= bound * kSlack;
    return res;
}

CheckResult check_hemicontinuity(const Target& target, int samples, std::uint64_t seed)
{
    require_samples(samples, 1, "check_hemicontinuity");
    CounterEngine engine(derive_seed(seed, 1));
    const int points = static_cast<int>(std::lround(2.0 / kHemiStep)) + 1;
    std::vector<double> lambda(points), y(points);
    for (int i = 0; i < points; ++i) {
        lambda[i] = -1.0 + i * kHemiStep;
    }

    CheckResult res{"H1", 0.0, 0.0, true, samples, 0.0, {}};
    res.ratios.reserve(samples);
    bool linear = true;
    for (int k = 0; k < samples; ++k) {
        const double t = sample_time(target, engine);
        const auto op = target.provider(t);
        linear = op.is_linear();
        const Vec u = random_probe(op.basis(), op.mean_zero(), engine);
        const Vec v = random_probe(op.basis(), op.mean_zero(), engine);
        const Vec x = random_probe(op.basis(), op.mean_zero(), engine);
        const auto line = op.line_pairing(u, v, x);
        double ymax = 0.0;
        for (int i = 0; i < points; ++i) {
            y[i] = line(lambda[i]);
            ymax = std::max(ymax, std::abs(y[i]));
        }
        double gap = 0.0;
        for (int i = 0; i + 1 < points; ++i) {
            gap = std::max(gap, std::abs(y[i + 1] - y[i]));
        }
        res.max_gap = std::max(res.max_gap, gap);

        double criterion;
        if (linear) {
            // least-squares line; λ is symmetric about 0
            double sy = 0.0, sly = 0.0, sll = 0.0;
            for (int i = 0; i < points; ++i) {
                sy += y[i];
                sly += lambda[i] * y[i];
                sll += lambda[i] * lambda[i];
            }
            const double a = sy / points;
            const double b = sly / sll;
            double dev = 0.0;
            for (int i = 0; i < points; ++i) {
                dev = std::max(dev, std::abs(y[i] - (a + b * lambda[i])));
            }
            criterion = dev / std::max(1.0, ymax);
            res.bound = 1e-10;
        } else {
            // slope bootstrap from central differences of the same sweep
            double slope = 0.0;
            for (int i = 1; i + 1 < points; ++i) {
                slope = std::max(slope, std::abs(y[i + 1] - y[i - 1]) / (2.0 * kHemiStep));
            }
            const double allowed = 1.5 * slope * kHemiStep + 1e-13 * std::max(1.0, ymax);
            criterion = gap / allowed;
            res.bound = 1.0;
        }
        res.ratios.push_back(criterion);
        res.estimate = std::max(res.estimate, criterion);
    }
    res.passed = res.estimate <= res.bound;
    return res;
}

// ---------------------------------------------------------------------------

double estimate_poincare(const geometry::MetricFamily& family)
{
    if (!family.is_static()) {
        throw std::invalid_argument("estimate_poincare: requires a static metric family");
    }
    const auto op = operators::assemble_moving_surface(family, operators::NormalVelocityTerm::constant(0.0), 0.0);
    const Mat stiffness = -op.pairing_matrix();
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> solver(0.5 * (stiffness + stiffness.transpose()), op.gram());
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("estimate_poincare: eigensolver failed");
    }
    const Vec mu = solver.eigenvalues();
    const double cutoff = 1e-9 * std::max(1.0, mu.cwiseAbs().maxCoeff());
    for (int i = 0; i < mu.size(); ++i) {
        if (mu(i) > cutoff) {
            return 1.0 / std::sqrt(mu(i));
        }
    }
    throw std::runtime_error("estimate_poincare: no nonzero eigenvalue");
}

double lq_poincare_constant(double q, double length)
{
    if (!(q > 1.0) || !(length > 0.0)) {
        throw std::invalid_argument("lq_poincare_constant: needs q > 1 and L > 0");
    }
    const double pi_q = 2.0 * std::numbers::pi * std::pow(q - 1.0, 1.0 / q) / (q * std::sin(std::numbers::pi / q));
    return std::pow(length / (2.0 * pi_q), q);
}

// ---------------------------------------------------------------------------

AnalyticConstants heat_constants(const noise::NoiseModel& noise)
{
    return {0.0, 2.0, 2.0, 2.0, 1.0, noise.hs_norm_sq(), 0.0, "heat"};
}

AnalyticConstants mcf_sphere_constants(int n, double horizon, const noise::NoiseModel& noise)
{
    if (horizon >= 1.0 / (2.0 * n)) {
        throw std::invalid_argument("mcf_sphere_constants: T must be < 1/(2n)");
    }
    const double k = static_cast<double>(n) * n / (1.0 - 2.0 * n * horizon);
    return {2.0 * k, 2.0 * (1.0 + k), 2.0, 2.0, 2.0 * k, noise.hs_norm_sq(), 0.0, "mcf_sphere"};
}

AnalyticConstants moving_surface_constants(const geometry::MetricFamily& family, double k1,
                                           const noise::NoiseModel& noise)
{
    const auto ne = geometry::norm_equivalence_constants(family);
    const double a2 = ne.a2, b2 = ne.b2, a3 = family.a3(), b3 = family.b3();
    AnalyticConstants c;
    c.c = 2.0 * b2 * k1 / a2;
    c.c1 = 2.0 * (b2 * k1 / a2 + a3 / b3);
    c.c2 = 2.0 * a2 * a3 / b3;
    c.alpha = 2.0;
    c.c3 = 2.0 * std::max(b2 * b3 / a2, b2 * k1);
    c.f = noise.hs_norm_sq();
    c.source = "moving_surface";
    return c;
}

AnalyticConstants general_parabolic_constants(const operators::ParabolicCoefficients& coef,
                                              const geometry::PullbackMap& map, const noise::NoiseModel& noise)
{
    const auto& family = map.family();
    const auto bd = coef.validate(family.basis());
    const double min_inv = 1.0 / family.max_relative_factor();
    const double max_inv = 1.0 / family.min_relative_factor();
    AnalyticConstants c;
    c.c = 2.0 * map.q2() * bd.c_sup;
    c.c1 = 2.0 * map.q2() * (bd.c_sup + bd.a_lower);
    c.c2 = 2.0 * bd.a_lower * std::min(map.p1(), min_inv);
    c.alpha = 2.0;
    c.c3 = 3.0 * std::max(map.q1(), max_inv) * std::max({bd.a_upper, bd.b_sup, bd.c_sup});
    c.f = noise.hs_norm_sq();
    c.source = "general_parabolic";
    return c;
}

AnalyticConstants p_laplace_constants(double p, const geometry::MetricFamily& family, const noise::NoiseModel& noise)
{
    const double length = 2.0 * std::numbers::pi * std::sqrt(family.basis().metric());
    const double cp = lq_poincare_constant(p, length);
    return {0.0, 0.0, std::min(1.0, 1.0 / cp), p, 1.0, noise.hs_norm_sq(), 0.0, "p_laplace"};
}

AnalyticConstants with_nonlinearity(AnalyticConstants base, double c_lip, double a2, double b2)
{
    const double shift = c_lip * b2 / (a2 * a2);
    base.c1 += shift;
    base.c3 += shift;
    base.source += "+nonlinearity";
    return base;
}

// ---------------------------------------------------------------------------

namespace {

void put_check(std::ostringstream& os, const CheckResult& c)
{
    const std::string k = c.name;
    os << k << ".estimate = " << format_double(c.estimate) << "\n";
    os << k << ".bound = " << format_double(c.bound) << "\n";
    os << k << ".samples = " << c.samples << "\n";
    if (c.name == "H1") {
        os << k << ".max_gap = " << format_double(c.max_gap) << "\n";
    }
    os << k << ".passed = " << (c.passed ? "true" : "false") << "\n";
}

} // namespace

std::string HypothesisReport::to_key_value() const
{
    std::ostringstream os;
    os << "label = " << label << "\n";
    os << "seed = " << seed << "\n";
    os << "samples = " << samples << "\n";
    os << "declared.source = " << declared.source << "\n";
    os << "declared.c = " << format_double(declared.c) << "\n";
    os << "declared.c1 = " << format_double(declared.c1) << "\n";
    os << "declared.c2 = " << format_double(declared.c2) << "\n";
    os << "declared.alpha = " << format_double(declared.alpha) << "\n";
    os << "declared.c3 = " << format_double(declared.c3) << "\n";
    os << "declared.f = " << format_double(declared.f) << "\n";
    os << "declared.g = " << format_double(declared.g) << "\n";
    put_check(os, h1);
    put_check(os, h2);
    put_check(os, h3);
    put_check(os, h4);
    os << "passed = " << (passed() ? "true" : "false") << "\n";
    return os.str();
}

std::string HypothesisReport::samples_csv() const
{
    CsvBuilder csv({"check", "sample", "value"});
    for (const auto* c : {&h1, &h2, &h3, &h4}) {
        for (std::size_t k = 0; k < c->ratios.size(); ++k) {
            csv.cell(c->name).cell(static_cast<long long>(k)).cell(c->ratios[k]).end_row();
        }
    }
    return csv.str();
}

HypothesisReport certify(const Target& target, const AnalyticConstants& constants, int samples, std::uint64_t seed)
{
    HypothesisReport rep;
    rep.label = target.label;
    rep.seed = seed;
    rep.samples = samples;
    rep.declared = constants;
    rep.h1 = check_hemicontinuity(target, samples, seed);
    rep.h2 = check_weak_monotonicity(target, samples, seed, constants.c);
    rep.h3 = check_coercivity(target, constants.f, samples, seed, {constants.c1, constants.c2, constants.alpha});
    rep.h4 = check_boundedness(target, samples, seed, constants.alpha, constants.c3);
    return rep;
}

// ---------------------------------------------------------------------------

std::vector<Vec> final_states(const solver::PathIntegrator& integrator, std::size_t replicas, unsigned threads)
{
    return parallel_replicas<Vec>(
        replicas, [&](std::size_t m) { return integrator.run(m, false).final_state(); }, threads);
}

MomentEstimate summarize_moment(const std::vector<double>& sups)
{
    const std::size_t replicas = sups.size();
    if (replicas < 2) {
        throw std::invalid_argument("summarize_moment: needs at least two replicas");
    }
    double mean = 0.0;
    for (double s : sups) {
        mean += s;
    }
    mean /= static_cast<double>(replicas);
    double var = 0.0;
    for (double s : sups) {
        var += (s - mean) * (s - mean);
    }
    var /= static_cast<double>(replicas - 1);
    MomentEstimate est;
    est.replicas = replicas;
    est.mean = mean;
    est.standard_error = std::sqrt(var / static_cast<double>(replicas));
    est.half_width = 3.0 * est.standard_error;
    if (!std::isfinite(est.mean) || !std::isfinite(est.standard_error)) {
        throw std::runtime_error("sup moment: non-finite estimate");
    }
    return est;
}

MomentEstimate estimate_sup_moment(const solver::Scenario& scenario, const solver::SolverConfig& cfg,
                                   std::size_t replicas, unsigned threads)
{
    if (replicas < 100) {
        throw std::invalid_argument("estimate_sup_moment: needs M >= 100 replicas");
    }
    const solver::PathIntegrator integrator(scenario, cfg);
    const auto sups = parallel_replicas<double>(
        replicas, [&](std::size_t m) { return integrator.run(m, false).sup_h0_norm_sq; }, threads);
    return summarize_moment(sups);
}

ConvergenceReport estimate_strong_order(const solver::Scenario& scenario, const solver::SolverConfig& cfg,
                                        const std::vector<double>& dts, std::size_t replicas, unsigned threads)
{
    if (dts.size() < 2) {
        throw std::invalid_argument("estimate_strong_order: needs at least two step sizes");
    }
    if (replicas < 1) {
        throw std::invalid_argument("estimate_strong_order: needs at least one replica");
    }
    std::vector<int> ratios;
    for (std::size_t k = 0; k < dts.size(); ++k) {
        if (k > 0 && !(dts[k] < dts[k - 1])) {
            throw std::invalid_argument("estimate_strong_order: dt list must be strictly descending");
        }
        const double r = dts[k] / cfg.dt;
        const long long ri = std::llround(r);
        if (ri < 1 || std::abs(r - static_cast<double>(ri)) > 1e-9 * r) {
            throw std::invalid_argument("estimate_strong_order: dt = " + format_double(dts[k])
                                        + " is not an integer multiple of the reference step "
                                        + format_double(cfg.dt));
        }
        ratios.push_back(static_cast<int>(ri));
    }

    const solver::PathIntegrator reference(scenario, cfg);
    std::vector<solver::PathIntegrator> coarse;
    for (double dt : dts) {
        auto c = cfg;
        c.dt = dt;
        coarse.emplace_back(scenario, c);
        if (coarse.back().steps() * ratios[coarse.size() - 1] != reference.steps()) {
            throw std::invalid_argument("estimate_strong_order: coarse grid is not nested in the reference grid");
        }
    }

    const double h_ref = scenario.horizon() / reference.steps();
    const auto* model = scenario.noise ? &*scenario.noise : nullptr;
    auto sq_errors = parallel_replicas<std::vector<double>>(
        replicas,
        [&](std::size_t m) {
            const noise::NoiseStream stream(cfg.master_seed, m);
            auto fine = [&](std::uint64_t k, double) { return stream.increment(*model, h_ref, k); };
            const Vec ref = reference.run(m, fine, false).final_state();
            std::vector<double> out;
            for (std::size_t j = 0; j < coarse.size(); ++j) {
                const int r = ratios[j];
                auto src = [&](std::uint64_t k, double) {
                    std::vector<noise::WienerIncrement> parts;
                    parts.reserve(r);
                    for (int q = 0; q < r; ++q) {
                        parts.push_back(stream.increment(*model, h_ref, k * r + q));
                    }
                    return noise::combine(parts);
                };
                out.push_back((coarse[j].run(m, src, false).final_state() - ref).squaredNorm());
            }
            return out;
        },
        threads);

    ConvergenceReport rep;
    rep.dts = dts;
    rep.reference_dt = cfg.dt;
    double ref_scale = scenario.initial.norm();
    for (std::size_t j = 0; j < dts.size(); ++j) {
        double s = 0.0;
        for (const auto& e : sq_errors) {
            s += e[j];
        }
        rep.errors.push_back(std::sqrt(s / static_cast<double>(replicas)));
    }
    double max_err = 0.0;
    for (double e : rep.errors) {
        max_err = std::max(max_err, e);
    }
    if (max_err <= 1e-12 * std::max(1.0, ref_scale)) {
        rep.exact = true;
        rep.slope = std::numeric_limits<double>::quiet_NaN();
        return rep;
    }
    const int n = static_cast<int>(dts.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int j = 0; j < n; ++j) {
        const double x = std::log(dts[j]);
        const double y = std::log(rep.errors[j]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - rep.slope * sx) / n;
    double rss = 0.0;
    for (int j = 0; j < n; ++j) {
        const double d = std::log(rep.errors[j]) - (intercept + rep.slope * std::log(dts[j]));
        rss += d * d;
    }
    rep.residual = std::sqrt(rss / n);
    return rep;
}

std::string convergence_csv(const ConvergenceReport& report)
{
    CsvBuilder csv({"dt", "strong_error"});
    for (std::size_t j = 0; j < report.dts.size(); ++j) {
        csv.cell(report.dts[j]).cell(report.errors[j]).end_row();
    }
    return csv.str();
}

} // namespace evspde::verify
