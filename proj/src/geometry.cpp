#include "evspde/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "evspde/csv.hpp"
#include "evspde/rng.hpp"

namespace evspde::geometry {

namespace {

constexpr int kAnalyticTimeSamples = 1024;

double time_slack(double horizon) { return 1e-12 * std::max(1.0, horizon); }

template <class... Ts>
struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

} // namespace

void ReferenceManifold::validate() const
{
    if (ambient_dim < 2) {
        throw std::invalid_argument("ReferenceManifold: ambient dimension n must be >= 2");
    }
    if (mode_count < 1) {
        throw std::invalid_argument("ReferenceManifold: mode count K must be >= 1");
    }
    if (grid_size != 0 && grid_size < 4 * mode_count + 1) {
        throw std::invalid_argument("ReferenceManifold: grid size must be >= 4K+1 = "
                                    + std::to_string(4 * mode_count + 1));
    }
    if (kind == ManifoldKind::FlatTorus1D && !(length > 0.0)) {
        throw std::invalid_argument("ReferenceManifold: torus length must be positive");
    }
}

int ReferenceManifold::effective_grid() const noexcept
{
    return grid_size == 0 ? 4 * mode_count + 1 : grid_size;
}

double ReferenceManifold::base_metric() const
{
    if (kind == ManifoldKind::CircleUnit) {
        return 1.0;
    }
    const double s = length / (2.0 * std::numbers::pi);
    return s * s;
}

ReferenceManifold unit_circle(int mode_count, int ambient_dim, int grid_size)
{
    ReferenceManifold m{ManifoldKind::CircleUnit, ambient_dim, grid_size, mode_count, 0.0};
    m.validate();
    return m;
}

ReferenceManifold flat_torus(double length, int mode_count, int grid_size)
{
    ReferenceManifold m{ManifoldKind::FlatTorus1D, 2, grid_size, mode_count, length};
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------

FactorProfile FactorProfile::constant(double value)
{
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw std::invalid_argument("FactorProfile: constant factor must be positive");
    }
    return FactorProfile(Constant{value});
}

FactorProfile FactorProfile::mcf(int ambient_dim)
{
    if (ambient_dim < 2) {
        throw std::invalid_argument("FactorProfile: MCF needs ambient dimension n >= 2");
    }
    return FactorProfile(Mcf{ambient_dim});
}

FactorProfile FactorProfile::table(FactorTable table, std::string label)
{
    const auto& t = table.times;
    const auto& f = table.values;
    if (t.size() < 2 || t.size() != f.size()) {
        throw std::invalid_argument("FactorProfile: table needs >= 2 matching (t, f) rows");
    }
    if (t.front() != 0.0) {
        throw std::invalid_argument("FactorProfile: table must start at t = 0");
    }
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (k > 0 && !(t[k] > t[k - 1])) {
            throw std::invalid_argument("FactorProfile: table times must be strictly increasing");
        }
        if (!(f[k] > 0.0) || !std::isfinite(f[k])) {
            throw std::invalid_argument("FactorProfile: factor must be strictly positive, row "
                                        + std::to_string(k));
        }
    }
    return FactorProfile(Table{std::move(table), std::move(label)});
}

double FactorProfile::operator()(double t) const
{
    return std::visit(
        overloaded{
            [](const Constant& c) { return c.value; },
            [t](const Mcf& m) {
                const double f = 1.0 - 2.0 * m.n * t;
                if (!(f > 0.0)) {
                    throw std::domain_error("MCF factor: sphere has collapsed at t = 1/(2n)");
                }
                return f;
            },
            [t](const Table& tab) {
                const auto& ts = tab.table.times;
                const auto& fs = tab.table.values;
                if (t < ts.front() - time_slack(ts.back()) || t > ts.back() + time_slack(ts.back())) {
                    throw std::out_of_range("FactorProfile: t outside table range");
                }
                if (t >= ts.back()) {
                    return fs.back();
                }
                if (t <= ts.front()) {
                    return fs.front();
                }
                const auto it = std::upper_bound(ts.begin(), ts.end(), t);
                const auto k = static_cast<std::size_t>(std::distance(ts.begin(), it)) - 1;
                const double w = (t - ts[k]) / (ts[k + 1] - ts[k]);
                return fs[k] + (fs[k + 1] - fs[k]) * w;
            }},
        kind_);
}

bool FactorProfile::is_constant() const noexcept { return std::holds_alternative<Constant>(kind_); }

std::vector<double> FactorProfile::sample_times(double horizon) const
{
    if (const auto* tab = std::get_if<Table>(&kind_)) {
        std::vector<double> out;
        for (double t : tab->table.times) {
            if (t <= horizon) {
                out.push_back(t);
            }
        }
        if (out.back() < horizon) {
            out.push_back(horizon);
        }
        return out;
    }
    if (is_constant()) {
        return {0.0, horizon};
    }
    std::vector<double> out(kAnalyticTimeSamples + 1);
    for (int k = 0; k <= kAnalyticTimeSamples; ++k) {
        out[k] = horizon * k / kAnalyticTimeSamples;
    }
    return out;
}

std::string FactorProfile::describe() const
{
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const Constant& c) { os << "constant(" << format_double(c.value) << ")"; },
                   [&](const Mcf& m) { os << "mcf(n=" << m.n << ")"; },
                   [&](const Table& t) {
                       const auto h1 = fnv1a(t.table.times.data(), t.table.times.size() * sizeof(double));
                       const auto h2 = fnv1a(t.table.values.data(), t.table.values.size() * sizeof(double));
                       os << t.label << "(rows=" << t.table.times.size() << ",hash=" << std::hex << (h1 ^ mix64(h2))
                          << std::dec << ")";
                   }},
               kind_);
    return os.str();
}

double mcf_radius(double t, int n)
{
    if (n < 2) {
        throw std::invalid_argument("mcf_radius: n must be >= 2");
    }
    if (t < 0.0) {
        throw std::domain_error("mcf_radius: t must be >= 0");
    }
    if (t >= 1.0 / (2.0 * n)) {
        throw std::domain_error("mcf_radius: the sphere shrinks to a point at t = 1/(2n)");
    }
    return std::sqrt(1.0 - 2.0 * n * t);
}

// ---------------------------------------------------------------------------

MetricFamily::MetricFamily(ReferenceManifold base, FactorProfile profile, double horizon)
    : base_(std::move(base))
    , profile_(std::move(profile))
    , horizon_(horizon)
{
}

MetricFamily build_metric_family(const ReferenceManifold& base, const FactorProfile& profile,
                                 double horizon)
{
    base.validate();
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("build_metric_family: horizon T must be positive");
    }
    if (const auto* m = std::get_if<FactorProfile::Mcf>(&profile.kind())) {
        if (base.kind != ManifoldKind::CircleUnit) {
            throw std::invalid_argument("build_metric_family: MCF profile requires the unit circle");
        }
        if (horizon >= 1.0 / (2.0 * m->n)) {
            throw std::invalid_argument("build_metric_family: MCF horizon must satisfy T < 1/(2n) = "
                                        + format_double(1.0 / (2.0 * m->n)));
        }
    }
    if (const auto* tab = std::get_if<FactorProfile::Table>(&profile.kind())) {
        if (tab->table.times.back() < horizon - time_slack(horizon)) {
            throw std::invalid_argument("build_metric_family: factor table does not cover [0, T]");
        }
    }

    MetricFamily mf(base, profile, horizon);
    mf.times_ = profile.sample_times(horizon);
    mf.factor0_ = profile(0.0);
    const double gbase = base.base_metric();
    mf.basis_ = std::make_shared<const FourierBasis>(base.mode_count, base.effective_grid(),
                                                     mf.factor0_ * gbase);

    double a1 = INFINITY, b1 = 0, a3 = INFINITY, b3 = 0, rmin = INFINITY, rmax = 0;
    const int grid = base.effective_grid();
    for (double t : mf.times_) {
        const double f = profile(t);
        if (!(f > 0.0)) {
            throw std::invalid_argument("build_metric_family: factor must be positive on [0, T]");
        }
        rmin = std::min(rmin, f / mf.factor0_);
        rmax = std::max(rmax, f / mf.factor0_);
        for (int m = 0; m < grid; ++m) {
            const double g = f * gbase; // g_base is constant along the grid
            a1 = std::min(a1, std::sqrt(g));
            b1 = std::max(b1, std::sqrt(g));
            a3 = std::min(a3, 1.0 / g);
            b3 = std::max(b3, 1.0 / g);
        }
    }
    mf.a1_ = a1;
    mf.b1_ = b1;
    mf.a3_ = a3;
    mf.b3_ = b3;
    mf.rmin_ = rmin;
    mf.rmax_ = rmax;
    return mf;
}

double MetricFamily::factor(double t) const
{
    if (t < -time_slack(horizon_) || t > horizon_ + time_slack(horizon_)) {
        throw std::out_of_range("MetricFamily: t = " + format_double(t) + " outside [0, T]");
    }
    return profile_(std::clamp(t, 0.0, horizon_));
}

Vec MetricFamily::metric_on_grid(double t) const
{
    return Vec::Constant(basis_->grid_size(), factor(t) * base_.base_metric());
}

Vec MetricFamily::inverse_metric_on_grid(double t) const
{
    return metric_on_grid(t).cwiseInverse();
}

Vec MetricFamily::sqrt_det_on_grid(double t) const
{
    return metric_on_grid(t).cwiseSqrt();
}

double MetricFamily::h_norm_sq(const Vec& coeffs, double t) const
{
    const Vec u = basis_->to_grid(coeffs);
    return u.cwiseProduct(u).dot(sqrt_det_on_grid(t)) * basis_->weight();
}

double MetricFamily::h0_norm_sq(const Vec& coeffs) const { return coeffs.squaredNorm(); }

std::string MetricFamily::describe() const
{
    std::ostringstream os;
    os << (base_.kind == ManifoldKind::CircleUnit ? "circle" : "torus") << "(n=" << base_.ambient_dim
       << ",K=" << base_.mode_count << ",N=" << base_.effective_grid();
    if (base_.kind == ManifoldKind::FlatTorus1D) {
        os << ",L=" << format_double(base_.length);
    }
    os << ")|" << profile_.describe() << "|T=" << format_double(horizon_);
    return os.str();
}

NormEquivalence norm_equivalence_constants(const MetricFamily& family)
{
    // √|g_t|/√|g₀| on every grid node; spatially constant for isotropic families
    // but scanned pointwise like the other bounds.
    const Vec root0 = family.sqrt_det_on_grid(0.0);
    double a2 = INFINITY, b2 = 0.0;
    for (double t : family.sample_times()) {
        const Vec ratio = family.sqrt_det_on_grid(t).cwiseQuotient(root0);
        a2 = std::min(a2, ratio.minCoeff());
        b2 = std::max(b2, ratio.maxCoeff());
    }
    return {a2, b2};
}

// ---------------------------------------------------------------------------

PullbackMap::PullbackMap(std::shared_ptr<const MetricFamily> family)
    : family_(std::move(family))
{
    if (!family_) {
        throw std::invalid_argument("PullbackMap: null metric family");
    }
    double p1 = INFINITY, q1 = 0, p2 = INFINITY, q2 = 0;
    for (double t : family_->sample_times()) {
        const double s = std::sqrt(family_->relative_factor(t));
        p2 = std::min(p2, s);
        q2 = std::max(q2, s);
        p1 = std::min(p1, std::min(s, 1.0 / s));
        q1 = std::max(q1, std::max(s, 1.0 / s));
    }
    p1_ = p1;
    q1_ = q1;
    p2_ = p2;
    q2_ = q2;
}

void PullbackMap::check_time(double t) const
{
    const double T = family_->horizon();
    if (t < -time_slack(T) || t > T + time_slack(T)) {
        throw std::out_of_range("PullbackMap: t outside [0, T]");
    }
}

double PullbackMap::scale(double t) const { return std::sqrt(family_->relative_factor(t)); }

Vec PullbackMap::push(const Vec& coeffs, double t) const
{
    check_time(t);
    return coeffs;
}

Vec PullbackMap::pull(const Vec& coeffs, double t) const
{
    check_time(t);
    return coeffs;
}

double PullbackMap::h_norm_sq(const Vec& coeffs, double t) const
{
    return family_->h_norm_sq(push(coeffs, t), t);
}

double PullbackMap::v_norm_sq(const Vec& coeffs, double t) const
{
    const auto& basis = family_->basis();
    const Vec pushed = push(coeffs, t);
    const Vec u = basis.to_grid(pushed);
    const Vec du = basis.derivative_on_grid(pushed);
    const Vec integrand = u.cwiseProduct(u) + du.cwiseProduct(du).cwiseProduct(family_->inverse_metric_on_grid(t));
    return integrand.dot(family_->sqrt_det_on_grid(t)) * basis.weight();
}

double PullbackMap::pulled_back_inner(const Vec& u, const Vec& v, double t) const
{
    const auto& basis = family_->basis();
    const Vec fu = basis.to_grid(push(u, t));
    const Vec fv = basis.to_grid(push(v, t));
    const Vec rho_t = family_->sqrt_det_on_grid(t);
    const Vec jacobian = rho_t / basis.density();
    return fu.cwiseProduct(fv).cwiseProduct(rho_t).cwiseQuotient(jacobian).sum() * basis.weight();
}

// ---------------------------------------------------------------------------

FactorTable gbm_factor_path(const GbmDriver& driver, double horizon)
{
    if (!driver.satisfies_constraint()) {
        throw std::invalid_argument("gbm_factor_path: requires r - sigma^2/2 < 0");
    }
    if (driver.steps < 1) {
        throw std::invalid_argument("gbm_factor_path: steps must be >= 1");
    }
    if (!(horizon > 0.0)) {
        throw std::invalid_argument("gbm_factor_path: horizon must be positive");
    }
    const double drift = driver.r - 0.5 * driver.sigma * driver.sigma;
    const double dt = horizon / driver.steps;
    const double sqrt_dt = std::sqrt(dt);
    CounterEngine engine(derive_seed(driver.seed, 0x67626d));

    FactorTable out;
    out.times.resize(driver.steps + 1);
    out.values.resize(driver.steps + 1);
    double brownian = 0.0;
    for (int k = 0; k <= driver.steps; ++k) {
        if (k > 0) {
            brownian += sqrt_dt * standard_normal(engine);
        }
        const double t = horizon * k / driver.steps;
        out.times[k] = t;
        out.values[k] = std::exp(drift * t + driver.sigma * brownian);
    }
    return out;
}

std::string factor_table_csv(const FactorTable& table)
{
    CsvBuilder csv({"t", "f"});
    for (std::size_t k = 0; k < table.times.size(); ++k) {
        csv.cell(table.times[k]).cell(table.values[k]).end_row();
    }
    return csv.str();
}

} // namespace evspde::geometry
