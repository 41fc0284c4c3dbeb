#include "evspde/scenario.hpp"

#include <boost/algorithm/string.hpp>

#include <sstream>
#include <stdexcept>

#include "evspde/csv.hpp"

namespace evspde::scenario {

using geometry::MetricFamily;
using operators::GalerkinOperator;

namespace {

std::shared_ptr<const MetricFamily> share(MetricFamily f)
{
    return std::make_shared<const MetricFamily>(std::move(f));
}

solver::Scenario skeleton(std::string label, std::shared_ptr<const MetricFamily> family, MaybeNoise noise,
                          const Vec& initial)
{
    solver::Scenario s;
    s.label = std::move(label);
    s.family = std::move(family);
    s.noise = std::move(noise);
    s.initial = initial;
    return s;
}

} // namespace

Vec initial_from(const std::vector<double>& leading, int dim)
{
    if (static_cast<int>(leading.size()) > dim) {
        throw std::invalid_argument("initial datum has more coefficients than the basis");
    }
    Vec out = Vec::Zero(dim);
    for (std::size_t i = 0; i < leading.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = leading[i];
    }
    return out;
}

solver::Scenario mcf_circle(int n, double horizon, int modes, MaybeNoise noise, const Vec& initial)
{
    return mcf_circle(share(geometry::build_metric_family(geometry::unit_circle(modes, n),
                                                          geometry::FactorProfile::mcf(n), horizon)),
                      std::move(noise), initial);
}

solver::Scenario mcf_circle(std::shared_ptr<const MetricFamily> family, MaybeNoise noise, const Vec& initial)
{
    const auto* mcf = std::get_if<geometry::FactorProfile::Mcf>(&family->profile().kind());
    if (!mcf) {
        throw std::invalid_argument("mcf_circle: family must use the mcf profile");
    }
    const int n = mcf->n;
    auto s = skeleton("mcf_circle", family, std::move(noise), initial);
    auto basis = family->basis_ptr();
    s.provider = [basis, n](double t) { return operators::assemble_mcf_sphere(basis, n, t); };
    s.operator_description = "mcf_sphere(n=" + std::to_string(n) + ")";
    s.mcf_n = n;
    s.validate();
    return s;
}

solver::Scenario heat(const geometry::ReferenceManifold& base, double horizon, MaybeNoise noise, const Vec& initial,
                      double metric_factor)
{
    auto family = share(geometry::build_metric_family(base, geometry::FactorProfile::constant(metric_factor), horizon));
    auto s = skeleton("heat", family, std::move(noise), initial);
    const auto op = operators::assemble_laplace_beltrami(family->basis_ptr());
    s.provider = [op](double) { return op; };
    s.operator_description = "laplace_beltrami";
    s.time_independent = true;
    s.validate();
    return s;
}

solver::Scenario moving_surface(std::shared_ptr<const MetricFamily> family, operators::NormalVelocityTerm vh,
                                MaybeNoise noise, const Vec& initial)
{
    auto s = skeleton("moving_surface", family, std::move(noise), initial);
    s.operator_description = "moving_surface(vh=" + vh.label + ",k1=" + format_double(vh.k1) + ")";
    s.time_independent = family->is_static() && vh.label.rfind("constant", 0) == 0;
    if (s.time_independent) {
        const auto op = operators::assemble_moving_surface(*family, vh, 0.0);
        s.provider = [op](double) { return op; };
    } else {
        s.provider = [family, vh](double t) { return operators::assemble_moving_surface(*family, vh, t); };
    }
    s.validate();
    return s;
}

solver::Scenario general_parabolic(std::shared_ptr<const MetricFamily> family,
                                   const operators::ParabolicCoefficients& coef, MaybeNoise noise, const Vec& initial)
{
    coef.validate(family->basis());
    auto s = skeleton("general_parabolic", family, std::move(noise), initial);
    auto map = std::make_shared<const geometry::PullbackMap>(family);
    s.operator_description = "general(" + coef.describe() + ")";
    s.time_independent = family->is_static();
    if (s.time_independent) {
        const auto op = operators::assemble_general_parabolic(coef, *map, 0.0);
        s.provider = [op](double) { return op; };
    } else {
        s.provider = [map, coef](double t) { return operators::assemble_general_parabolic(coef, *map, t); };
    }
    s.validate();
    return s;
}

solver::Scenario p_laplace(std::shared_ptr<const MetricFamily> family, double p, MaybeNoise noise, const Vec& initial)
{
    auto s = skeleton("p_laplace", family, std::move(noise), initial);
    s.operator_description = "plaplace(p=" + format_double(p) + ")";
    s.time_independent = family->is_static();
    if (s.time_independent) {
        const auto op = operators::assemble_p_laplace(*family, p, 0.0);
        s.provider = [op](double) { return op; };
    } else {
        s.provider = [family, p](double t) { return operators::assemble_p_laplace(*family, p, t); };
    }
    s.validate();
    return s;
}

solver::Scenario with_nonlinearity(solver::Scenario s, const operators::NonlinearitySpec& nl)
{
    s.nonlinearity = nl;
    s.validate();
    return s;
}

verify::Target target_of(const solver::Scenario& s)
{
    verify::Target target;
    target.horizon = s.family->is_static() ? 0.0 : s.horizon();
    target.label = s.label;
    if (s.nonlinearity.is_zero()) {
        target.provider = s.provider;
    } else {
        target.provider = [prov = s.provider, nl = s.nonlinearity](double t) { return prov(t).minus_nonlinearity(nl); };
    }
    return target;
}

geometry::FactorTable parse_factor_table(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    geometry::FactorTable table;
    int lineno = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++lineno;
        boost::trim(line);
        if (line.empty()) {
            continue;
        }
        if (header) {
            header = false;
            if (line != "t,f") {
                throw std::invalid_argument("factor table: expected header 't,f'");
            }
            continue;
        }
        std::vector<std::string> cells;
        boost::split(cells, line, boost::is_any_of(","));
        if (cells.size() != 2) {
            throw std::invalid_argument("factor table: line " + std::to_string(lineno) + " needs two columns");
        }
        try {
            std::size_t pos = 0;
            table.times.push_back(std::stod(cells[0], &pos));
            table.values.push_back(std::stod(cells[1], &pos));
        } catch (const std::exception&) {
            throw std::invalid_argument("factor table: cannot parse line " + std::to_string(lineno));
        }
    }
    return table;
}

Built build(const config::ScenarioConfig& cfg)
{
    if (const auto errs = config::validate(cfg); !errs.empty()) {
        throw config::ConfigError(errs);
    }
    const auto& m = cfg.manifold;
    const double T = cfg.horizon;
    const int dim = 2 * m.modes + 1;

    geometry::ReferenceManifold base = m.kind == "torus" ? geometry::flat_torus(m.length, m.modes, m.grid)
                                                          : geometry::unit_circle(m.modes, m.ambient_n, m.grid);

    Built out;
    std::optional<geometry::FactorProfile> profile;
    if (cfg.metric.profile == "static") {
        profile = geometry::FactorProfile::constant(cfg.metric.factor);
    } else if (cfg.metric.profile == "mcf") {
        profile = geometry::FactorProfile::mcf(m.ambient_n);
    } else {
        geometry::FactorTable table;
        if (cfg.metric.profile == "gbm") {
            table = geometry::gbm_factor_path({cfg.metric.r, cfg.metric.sigma, cfg.metric.steps, cfg.metric.metric_seed},
                                              T);
        } else {
            table = parse_factor_table(read_text_file(cfg.metric.path));
        }
        for (double& v : table.values) {
            v *= cfg.metric.factor;
        }
        out.factor_table = table;
        profile = geometry::FactorProfile::table(table, cfg.metric.profile);
    }
    auto family = share(geometry::build_metric_family(base, *profile, T));
    out.map = std::make_shared<const geometry::PullbackMap>(family);

    MaybeNoise noise;
    if (cfg.noise.kind == "canonical") {
        noise = noise::NoiseModel::canonical(cfg.noise.modes > 0 ? cfg.noise.modes : m.modes);
    } else if (cfg.noise.kind == "custom") {
        noise = noise::NoiseModel::custom(cfg.noise.sigma);
    }
    const double f = noise ? noise->hs_norm_sq() : 0.0;
    const Vec u0 = initial_from(cfg.initial.coefficients, dim);

    const auto ne = geometry::norm_equivalence_constants(*family);
    double a2 = 1.0, b2 = 1.0; // pairing measure of the nonlinearity relative to H₀
    const auto& o = cfg.op;
    if (o.kind == "heat") {
        out.scenario = heat(base, T, noise, u0, cfg.metric.factor);
        out.constants = verify::heat_constants(noise::NoiseModel::canonical(1));
    } else if (o.kind == "mcf_sphere") {
        out.scenario = mcf_circle(family, noise, u0);
        out.constants = verify::mcf_sphere_constants(m.ambient_n, T, noise::NoiseModel::canonical(1));
    } else if (o.kind == "moving_surface") {
        auto vh = o.vh == "mcf" ? operators::NormalVelocityTerm::mcf(m.ambient_n, T)
                                : operators::NormalVelocityTerm::constant(o.vh_value);
        if (o.k1 > 0.0) {
            vh.k1 = o.k1;
        }
        out.scenario = moving_surface(family, vh, noise, u0);
        out.constants = verify::moving_surface_constants(*family, vh.k1, noise::NoiseModel::canonical(1));
        a2 = ne.a2;
        b2 = ne.b2;
    } else if (o.kind == "general") {
        operators::ParabolicCoefficients coef;
        coef.a = {o.a[0], o.a[1], o.a[2]};
        coef.b = {o.b[0], o.b[1], o.b[2]};
        coef.ctilde = {o.ctilde[0], o.ctilde[1], o.ctilde[2]};
        out.scenario = general_parabolic(family, coef, noise, u0);
        out.constants = verify::general_parabolic_constants(coef, *out.map, noise::NoiseModel::canonical(1));
    } else {
        out.scenario = p_laplace(family, o.p, noise, u0);
        out.constants = verify::p_laplace_constants(o.p, *family, noise::NoiseModel::canonical(1));
    }
    out.constants.f = f;
    out.scenario.label = cfg.label;

    if (cfg.nonlinearity.kind != "none") {
        const auto nl = cfg.nonlinearity.kind == "linear" ? operators::NonlinearitySpec::linear(cfg.nonlinearity.gamma)
                                                          : operators::NonlinearitySpec::tanh(cfg.nonlinearity.gamma);
        out.scenario = with_nonlinearity(std::move(out.scenario), nl);
        out.constants = verify::with_nonlinearity(out.constants, nl.lipschitz(), a2, b2);
    }

    out.solver.dt = cfg.solver.dt;
    out.solver.scheme = solver::scheme_from_string(cfg.solver.scheme);
    out.solver.record_stride = cfg.solver.record_stride;
    out.solver.master_seed = cfg.run.seed;
    out.solver.validate();
    return out;
}

} // namespace evspde::scenario
