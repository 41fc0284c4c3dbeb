#include "evspde/solver.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "evspde/csv.hpp"
#include "evspde/rng.hpp"

namespace evspde::solver {

std::string to_string(Scheme scheme)
{
    return scheme == Scheme::SemiImplicit ? "semi_implicit" : "explicit_em";
}

Scheme scheme_from_string(const std::string& text)
{
    if (text == "semi_implicit") {
        return Scheme::SemiImplicit;
    }
    if (text == "explicit_em") {
        return Scheme::ExplicitEM;
    }
    throw std::invalid_argument("unknown scheme '" + text + "' (expected semi_implicit or explicit_em)");
}

void SolverConfig::validate() const
{
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("SolverConfig: dt must be > 0");
    }
    if (record_stride < 1) {
        throw std::invalid_argument("SolverConfig: record_stride must be >= 1");
    }
}

// ---------------------------------------------------------------------------

void Scenario::validate() const
{
    if (!family) {
        throw std::invalid_argument("Scenario: missing metric family");
    }
    if (!provider) {
        throw std::invalid_argument("Scenario: missing operator provider");
    }
    const int dim = family->basis().size();
    if (initial.size() != dim) {
        throw std::invalid_argument("Scenario: initial datum has " + std::to_string(initial.size())
                                    + " coefficients, basis has " + std::to_string(dim));
    }
    if (!initial.allFinite()) {
        throw std::invalid_argument("Scenario: initial datum is not finite");
    }
    if (noise && noise->size() > dim) {
        throw std::invalid_argument("Scenario: noise truncation J = " + std::to_string(noise->size())
                                    + " exceeds basis dimension 2K+1 = " + std::to_string(dim));
    }
    const auto op = provider(0.0);
    if (op.size() != dim) {
        throw std::invalid_argument("Scenario: operator dimension does not match the basis");
    }
    if (op.mean_zero()) {
        if (std::abs(initial(0)) > 1e-12 * std::max(1.0, initial.norm())) {
            throw std::invalid_argument("Scenario: p-Laplace requires mean-zero initial data");
        }
        if (!nonlinearity.is_zero()) {
            throw std::invalid_argument("Scenario: p-Laplace requires nonlinearity none");
        }
    }
}

std::string Scenario::describe() const
{
    std::ostringstream os;
    os << label << "|" << family->describe() << "|" << operator_description << "|" << nonlinearity.describe()
       << "|" << (noise ? noise->describe() : std::string("noise=none")) << "|u0=";
    for (int i = 0; i < initial.size(); ++i) {
        os << (i ? ";" : "") << format_double(initial(i));
    }
    return os.str();
}

std::uint64_t Scenario::digest() const
{
    const std::string text = describe();
    return fnv1a(text.data(), text.size());
}

std::string Scenario::digest_hex() const
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << digest();
    return os.str();
}

// ---------------------------------------------------------------------------

namespace {

int step_count(double horizon, double dt)
{
    const double ratio = horizon / dt;
    const auto n = static_cast<long long>(std::llround(ratio));
    if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio)) {
        throw std::invalid_argument("solver: dt = " + format_double(dt) + " must divide the horizon T = "
                                    + format_double(horizon));
    }
    if (n > 2'000'000'000LL) {
        throw std::invalid_argument("solver: too many steps");
    }
    return static_cast<int>(n);
}

double spectral_radius(const Mat& a)
{
    return Eigen::EigenSolver<Mat>(a, false).eigenvalues().cwiseAbs().maxCoeff();
}

void guard_explicit(double dt, double radius, double t)
{
    if (!(dt * radius < 0.5)) {
        throw std::invalid_argument("explicit_em stability guard violated at t = " + format_double(t)
                                    + ": dt * max|d| = " + format_double(dt * radius) + " >= 0.5");
    }
}

Mat implicit_inverse(const Mat& action, double dt, double t)
{
    const Mat m = Mat::Identity(action.rows(), action.cols()) - dt * action;
    Eigen::PartialPivLU<Mat> lu(m);
    if (!(lu.rcond() > 1e-14)) {
        throw std::runtime_error("singular implicit system I - dt*A(t) at t = " + format_double(t));
    }
    return lu.inverse();
}

Vec implicit_diagonal(const Vec& d, double dt, double t)
{
    Vec out(d.size());
    for (int i = 0; i < d.size(); ++i) {
        const double denom = 1.0 - dt * d(i);
        if (std::abs(denom) <= 1e-14) {
            throw std::runtime_error("singular implicit system at t = " + format_double(t) + ": 1 - dt*d_"
                                     + std::to_string(i) + " = 0");
        }
        out(i) = 1.0 / denom;
    }
    return out;
}

Vec lagged_solve(const operators::GalerkinOperator& op, const Vec& v, const Vec& rhs, double dt, double t)
{
    const Mat a = op.linearized_at(v);
    const Mat m = Mat::Identity(a.rows(), a.cols()) - dt * a;
    Eigen::PartialPivLU<Mat> lu(m);
    if (!(lu.rcond() > 1e-14)) {
        throw std::runtime_error("singular implicit system I - dt*A(t) at t = " + format_double(t));
    }
    return lu.solve(rhs);
}

} // namespace

SpectralState step(const SpectralState& state, const operators::OperatorProvider& provider,
                   const operators::NonlinearitySpec& nl, const noise::WienerIncrement& inc,
                   const SolverConfig& cfg)
{
    cfg.validate();
    if (std::abs(inc.dt - cfg.dt) > 1e-12 * cfg.dt) {
        throw std::invalid_argument("step: increment dt does not match the solver dt");
    }
    const double dt = cfg.dt;
    const auto op = provider(cfg.scheme == Scheme::SemiImplicit ? state.t + dt : state.t);
    const int dim = op.size();
    Vec xi = noise::embed(inc, dim);
    Vec v = state.coeffs;
    if (op.mean_zero()) {
        xi(0) = 0.0;
    }
    Vec rhs = v + xi;
    if (!nl.is_zero()) {
        rhs -= dt * operators::apply_nonlinearity(nl, op.basis(), v);
    }
    Vec next;
    if (cfg.scheme == Scheme::SemiImplicit) {
        if (op.diagonal()) {
            next = implicit_diagonal(*op.diagonal(), dt, op.time()).cwiseProduct(rhs);
        } else if (op.is_linear()) {
            next = implicit_inverse(op.matrix(), dt, op.time()) * rhs;
        } else {
            next = lagged_solve(op, v, rhs, dt, op.time());
        }
    } else {
        if (op.diagonal()) {
            guard_explicit(dt, op.diagonal()->cwiseAbs().maxCoeff(), op.time());
        } else {
            guard_explicit(dt, spectral_radius(op.linearized_at(v)), op.time());
        }
        next = rhs + dt * op.apply(v);
    }
    if (op.mean_zero()) {
        next(0) = 0.0;
    }
    if (!next.allFinite()) {
        throw std::runtime_error("step: non-finite state at t = " + format_double(state.t + dt));
    }
    return {state.t + dt, std::move(next)};
}

// ---------------------------------------------------------------------------

PathIntegrator::PathIntegrator(Scenario scenario, SolverConfig cfg)
    : scenario_(std::move(scenario))
    , cfg_(cfg)
{
    cfg_.validate();
    scenario_.validate();
    steps_ = step_count(scenario_.horizon(), cfg_.dt);
    const auto op0 = scenario_.provider(0.0);
    diagonal_ = op0.diagonal().has_value();
    linear_ = op0.is_linear();
    mean_zero_ = op0.mean_zero();
    if (!linear_) {
        return; // lagged coefficients depend on the state
    }
    const std::size_t dim = static_cast<std::size_t>(op0.size());
    const std::size_t per_step = (diagonal_ ? dim : dim * dim) * sizeof(double);
    const std::size_t entries = scenario_.time_independent ? 1 : static_cast<std::size_t>(steps_);
    if (entries * per_step > cfg_.cache_budget_bytes) {
        return;
    }
    cache_.reserve(entries);
    for (std::size_t k = 0; k < entries; ++k) {
        cache_.push_back(make_step(static_cast<int>(k)));
    }
}

double PathIntegrator::time(int k) const noexcept
{
    return k == steps_ ? scenario_.horizon() : scenario_.horizon() * k / steps_;
}

PathIntegrator::StepData PathIntegrator::make_step(int k) const
{
    const double h = scenario_.horizon() / steps_;
    StepData data;
    if (cfg_.scheme == Scheme::SemiImplicit) {
        const double t = time(k + 1);
        const auto op = scenario_.provider(t);
        if (diagonal_) {
            data.diagonal_factor = implicit_diagonal(*op.diagonal(), h, t);
        } else {
            data.matrix = implicit_inverse(op.matrix(), h, t);
        }
    } else {
        const double t = time(k);
        const auto op = scenario_.provider(t);
        if (diagonal_) {
            data.diagonal_factor = *op.diagonal();
            guard_explicit(h, data.diagonal_factor.cwiseAbs().maxCoeff(), t);
        } else {
            data.matrix = op.matrix();
            guard_explicit(h, spectral_radius(data.matrix), t);
        }
    }
    return data;
}

const PathIntegrator::StepData& PathIntegrator::step_data(int k, StepData& scratch) const
{
    if (!cache_.empty()) {
        return cache_[scenario_.time_independent ? 0 : static_cast<std::size_t>(k)];
    }
    scratch = make_step(k);
    return scratch;
}

Trajectory PathIntegrator::run(std::uint64_t replica, bool record) const
{
    const noise::NoiseStream stream(cfg_.master_seed, replica);
    const auto* model = scenario_.noise ? &*scenario_.noise : nullptr;
    IncrementSource source = [stream, model](std::uint64_t k, double dt) {
        return stream.increment(*model, dt, k);
    };
    return run(replica, source, record);
}

Trajectory PathIntegrator::run(std::uint64_t replica, const IncrementSource& source, bool record) const
{
    const auto& family = *scenario_.family;
    const auto& basis = family.basis();
    const int dim = basis.size();
    const double h = scenario_.horizon() / steps_;

    Trajectory traj;
    traj.master_seed = cfg_.master_seed;
    traj.replica = replica;
    traj.digest = scenario_.digest();
    traj.dt = h;
    traj.scheme = cfg_.scheme;
    traj.steps = steps_;

    auto push_record = [&](double t, const Vec& v) {
        traj.times.push_back(t);
        traj.states.push_back(v);
        traj.h0_norm_sq.push_back(v.squaredNorm());
        traj.hgt_norm_sq.push_back(family.h_norm_sq(v, t));
    };

    Vec v = scenario_.initial;
    if (mean_zero_) {
        v(0) = 0.0;
    }
    traj.sup_h0_norm_sq = v.squaredNorm();
    if (record) {
        push_record(0.0, v);
    }

    StepData scratch;
    Vec rhs(dim);
    for (int k = 0; k < steps_; ++k) {
        rhs = v;
        if (scenario_.noise) {
            const auto inc = source(static_cast<std::uint64_t>(k), h);
            if (inc.xi.size() > dim) {
                throw std::invalid_argument("solver: increment longer than the basis");
            }
            rhs.head(inc.xi.size()) += inc.xi;
            if (mean_zero_) {
                rhs(0) = v(0);
            }
        }
        if (!scenario_.nonlinearity.is_zero()) {
            rhs -= h * operators::apply_nonlinearity(scenario_.nonlinearity, basis, v);
        }

        if (linear_) {
            const StepData& data = step_data(k, scratch);
            if (cfg_.scheme == Scheme::SemiImplicit) {
                v = diagonal_ ? Vec(data.diagonal_factor.cwiseProduct(rhs)) : Vec(data.matrix * rhs);
            } else {
                v = diagonal_ ? Vec(rhs + h * data.diagonal_factor.cwiseProduct(v)) : Vec(rhs + h * (data.matrix * v));
            }
        } else if (cfg_.scheme == Scheme::SemiImplicit) {
            const double t = time(k + 1);
            v = lagged_solve(scenario_.provider(t), v, rhs, h, t);
        } else {
            const double t = time(k);
            const auto op = scenario_.provider(t);
            guard_explicit(h, spectral_radius(op.linearized_at(v)), t);
            v = rhs + h * op.apply(v);
        }
        if (mean_zero_) {
            v(0) = 0.0;
        }
        if (!v.allFinite()) {
            throw std::runtime_error("solver: non-finite state at step " + std::to_string(k + 1) + " (t = "
                                     + format_double(time(k + 1)) + ")");
        }
        traj.sup_h0_norm_sq = std::max(traj.sup_h0_norm_sq, v.squaredNorm());
        const bool last = k + 1 == steps_;
        if (last || (record && (k + 1) % cfg_.record_stride == 0)) {
            push_record(time(k + 1), v);
        }
    }
    return traj;
}

Trajectory solve_path(const Scenario& scenario, const SolverConfig& cfg, std::uint64_t replica)
{
    return PathIntegrator(scenario, cfg).run(replica);
}

Trajectory solve_path(const Scenario& scenario, const SolverConfig& cfg, std::uint64_t replica,
                      const IncrementSource& source)
{
    return PathIntegrator(scenario, cfg).run(replica, source);
}

// ---------------------------------------------------------------------------

ModeLaw exact_linear_mode(int index, double t, const Scenario& scenario, double tolerance)
{
    using boost::math::quadrature::gauss_kronrod;
    const auto& basis = scenario.basis();
    if (index < 0 || index >= basis.size()) {
        throw std::out_of_range("exact_linear_mode: mode index out of range");
    }
    if (!scenario.nonlinearity.is_zero()) {
        throw std::invalid_argument("exact_linear_mode: scenario has a nonlinearity");
    }
    const auto op0 = scenario.provider(0.0);
    if (!op0.diagonal()) {
        throw std::invalid_argument("exact_linear_mode: scenario operator is not diagonal");
    }
    if (t < 0.0 || t > scenario.horizon() * (1.0 + 1e-12)) {
        throw std::out_of_range("exact_linear_mode: t outside [0, T]");
    }
    double sigma = 0.0;
    if (scenario.noise && index < scenario.noise->size()) {
        sigma = scenario.noise->sigma()[index];
    }
    if (t == 0.0) {
        return {1.0, 0.0};
    }

    if (scenario.mcf_n) {
        const double n = *scenario.mcf_n;
        const double e = (basis.eigenvalue(index) - n * n) / (2.0 * n);
        const double end = 1.0 - 2.0 * n * t;
        const double mean = std::pow(end, e);
        double variance = 0.0;
        if (sigma != 0.0) {
            auto integrand = [&](double s) { return std::pow(end / (1.0 - 2.0 * n * s), 2.0 * e); };
            variance = sigma * sigma * gauss_kronrod<double, 61>::integrate(integrand, 0.0, t, 15, tolerance);
        }
        return {mean, variance};
    }
    if (scenario.time_independent) {
        const double d = (*op0.diagonal())(index);
        const double var = d == 0.0 ? t : std::expm1(2.0 * d * t) / (2.0 * d);
        return {std::exp(d * t), sigma * sigma * var};
    }
    auto d = [&](double s) { return (*scenario.provider(s).diagonal())(index); };
    auto integral = [&](double a, double b) {
        return a == b ? 0.0 : gauss_kronrod<double, 31>::integrate(d, a, b, 10, tolerance);
    };
    const double mean = std::exp(integral(0.0, t));
    double variance = 0.0;
    if (sigma != 0.0) {
        auto integrand = [&](double s) { return std::exp(2.0 * integral(s, t)); };
        variance = sigma * sigma * gauss_kronrod<double, 31>::integrate(integrand, 0.0, t, 10, tolerance);
    }
    return {mean, variance};
}

SurfaceTrajectory pushforward_solution(const Trajectory& traj, const geometry::PullbackMap& map)
{
    const double T = map.family().horizon();
    if (traj.times.empty()) {
        throw std::invalid_argument("pushforward_solution: empty trajectory");
    }
    if (traj.times.back() > T * (1.0 + 1e-12)) {
        throw std::invalid_argument("pushforward_solution: map horizon T = " + format_double(T)
                                    + " does not cover the trajectory (t = " + format_double(traj.times.back())
                                    + ")");
    }
    const auto ne = geometry::norm_equivalence_constants(map.family());
    SurfaceTrajectory out;
    out.regularity_constant = map.family().b1() * ne.b2 / ne.a2;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double t = traj.times[k];
        out.times.push_back(t);
        out.reference_norm_sq.push_back(traj.states[k].squaredNorm());
        out.surface_norm_sq.push_back(map.h_norm_sq(traj.states[k], t));
    }
    return out;
}

std::string trajectory_csv(const Trajectory& traj, int max_modes)
{
    const int dim = traj.states.empty() ? 0 : static_cast<int>(traj.states.front().size());
    const int m = max_modes < 0 ? dim : std::min(dim, max_modes);
    std::vector<std::string> header{"t", "H0_norm_sq", "Hgt_norm_sq"};
    for (int i = 0; i < m; ++i) {
        header.push_back("coeff_" + std::to_string(i));
    }
    CsvBuilder csv(header);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        csv.cell(traj.times[k]).cell(traj.h0_norm_sq[k]).cell(traj.hgt_norm_sq[k]);
        for (int i = 0; i < m; ++i) {
            csv.cell(traj.states[k](i));
        }
        csv.end_row();
    }
    return csv.str();
}

std::string trajectory_metadata_json(const Trajectory& traj, const Scenario& scenario)
{
    nlohmann::ordered_json j;
    j["scenario_digest"] = scenario.digest_hex();
    j["scenario"] = scenario.describe();
    j["master_seed"] = traj.master_seed;
    j["replica"] = traj.replica;
    j["dt"] = traj.dt;
    j["steps"] = traj.steps;
    j["scheme"] = to_string(traj.scheme);
    j["sup_H0_norm_sq"] = traj.sup_h0_norm_sq;
    j["versions"] = {{"evspde", kVersion}, {"geometry", kVersion}, {"noise", kVersion},
                     {"operators", kVersion}, {"solver", kVersion}};
    return j.dump(2) + "\n";
}

} // namespace evspde::solver
