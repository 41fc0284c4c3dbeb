#include "evspde/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "evspde/csv.hpp"

namespace evspde::config {

namespace pt = boost::property_tree;

namespace {

std::string join_errors(const std::vector<std::string>& errors)
{
    std::string out = "invalid config:";
    for (const auto& e : errors) {
        out += "\n  - " + e;
    }
    return out;
}

bool parse_double(const std::string& text, double& out)
{
    const std::string s = boost::trim_copy(text);
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && !s.empty();
}

template <class Int>
bool parse_int(const std::string& text, Int& out)
{
    const std::string s = boost::trim_copy(text);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

bool parse_list(const std::string& text, std::vector<double>& out)
{
    out.clear();
    const std::string s = boost::trim_copy(text);
    if (s.empty()) {
        return true;
    }
    std::vector<std::string> parts;
    boost::split(parts, s, boost::is_any_of(","));
    for (const auto& p : parts) {
        double v;
        if (!parse_double(p, v)) {
            return false;
        }
        out.push_back(v);
    }
    return true;
}

std::string list_text(const std::vector<double>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? ", " : "") + format_double(v[i]);
    }
    return out;
}

// One setter per accepted key. Unknown keys are rejected by lookup failure.
using Setter = std::function<bool(ScenarioConfig&, const std::string&)>;

template <class F>
Setter dbl(F field)
{
    return [field](ScenarioConfig& c, const std::string& s) { return parse_double(s, field(c)); };
}
template <class F>
Setter integer(F field)
{
    return [field](ScenarioConfig& c, const std::string& s) { return parse_int(s, field(c)); };
}
template <class F>
Setter text(F field)
{
    return [field](ScenarioConfig& c, const std::string& s) {
        field(c) = boost::trim_copy(s);
        return true;
    };
}
template <class F>
Setter list(F field)
{
    return [field](ScenarioConfig& c, const std::string& s) { return parse_list(s, field(c)); };
}

const std::map<std::string, std::map<std::string, Setter>>& schema()
{
    using C = ScenarioConfig;
    static const std::map<std::string, std::map<std::string, Setter>> s = {
        {"manifold",
         {{"kind", text([](C& c) -> auto& { return c.manifold.kind; })},
          {"ambient_n", integer([](C& c) -> auto& { return c.manifold.ambient_n; })},
          {"modes", integer([](C& c) -> auto& { return c.manifold.modes; })},
          {"grid", integer([](C& c) -> auto& { return c.manifold.grid; })},
          {"length", dbl([](C& c) -> auto& { return c.manifold.length; })}}},
        {"metric",
         {{"profile", text([](C& c) -> auto& { return c.metric.profile; })},
          {"factor", dbl([](C& c) -> auto& { return c.metric.factor; })},
          {"r", dbl([](C& c) -> auto& { return c.metric.r; })},
          {"sigma", dbl([](C& c) -> auto& { return c.metric.sigma; })},
          {"steps", integer([](C& c) -> auto& { return c.metric.steps; })},
          {"metric_seed", integer([](C& c) -> auto& { return c.metric.metric_seed; })},
          {"path", text([](C& c) -> auto& { return c.metric.path; })}}},
        {"time", {{"horizon", dbl([](C& c) -> auto& { return c.horizon; })}}},
        {"operator",
         {{"kind", text([](C& c) -> auto& { return c.op.kind; })},
          {"p", dbl([](C& c) -> auto& { return c.op.p; })},
          {"vh", text([](C& c) -> auto& { return c.op.vh; })},
          {"vh_value", dbl([](C& c) -> auto& { return c.op.vh_value; })},
          {"k1", dbl([](C& c) -> auto& { return c.op.k1; })},
          {"a", list([](C& c) -> auto& { return c.op.a; })},
          {"b", list([](C& c) -> auto& { return c.op.b; })},
          {"ctilde", list([](C& c) -> auto& { return c.op.ctilde; })}}},
        {"nonlinearity",
         {{"kind", text([](C& c) -> auto& { return c.nonlinearity.kind; })},
          {"gamma", dbl([](C& c) -> auto& { return c.nonlinearity.gamma; })}}},
        {"noise",
         {{"kind", text([](C& c) -> auto& { return c.noise.kind; })},
          {"modes", integer([](C& c) -> auto& { return c.noise.modes; })},
          {"sigma", list([](C& c) -> auto& { return c.noise.sigma; })}}},
        {"solver",
         {{"dt", dbl([](C& c) -> auto& { return c.solver.dt; })},
          {"scheme", text([](C& c) -> auto& { return c.solver.scheme; })},
          {"record_stride", integer([](C& c) -> auto& { return c.solver.record_stride; })}}},
        {"run",
         {{"label", text([](C& c) -> auto& { return c.label; })},
          {"replicas", integer([](C& c) -> auto& { return c.run.replicas; })},
          {"seed", integer([](C& c) -> auto& { return c.run.seed; })},
          {"samples", integer([](C& c) -> auto& { return c.run.samples; })},
          {"dts", list([](C& c) -> auto& { return c.run.dts; })},
          {"reference_dt", dbl([](C& c) -> auto& { return c.run.reference_dt; })}}},
        {"initial", {{"coefficients", list([](C& c) -> auto& { return c.initial.coefficients; })}}},
        {"output",
         {{"directory", text([](C& c) -> auto& { return c.output.directory; })},
          {"max_modes", integer([](C& c) -> auto& { return c.output.max_modes; })}}},
    };
    return s;
}

bool one_of(const std::string& v, std::initializer_list<const char*> options)
{
    for (const char* o : options) {
        if (v == o) {
            return true;
        }
    }
    return false;
}

} // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(join_errors(errors)), errors_(std::move(errors))
{
}

ScenarioConfig parse_config(const std::string& text)
{
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError({std::string("syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")"});
    }

    ScenarioConfig cfg;
    std::vector<std::string> errors;
    const auto& sch = schema();
    for (const auto& [section, body] : tree) {
        const auto sec = sch.find(section);
        if (body.empty() && !body.data().empty()) {
            errors.push_back("key '" + section + "' outside any section");
            continue;
        }
        if (sec == sch.end()) {
            errors.push_back("unknown section [" + section + "]");
            continue;
        }
        for (const auto& [key, node] : body) {
            const auto it = sec->second.find(key);
            if (it == sec->second.end()) {
                errors.push_back("unknown key " + section + "." + key);
                continue;
            }
            const std::string value = node.get_value<std::string>();
            if (!it->second(cfg, value)) {
                errors.push_back(section + "." + key + ": cannot parse '" + value + "'");
            }
        }
    }
    if (errors.empty()) {
        errors = validate(cfg);
    }
    if (!errors.empty()) {
        throw ConfigError(std::move(errors));
    }
    return cfg;
}

ScenarioConfig load_config(const std::string& path)
{
    return parse_config(read_text_file(path));
}

std::vector<std::string> validate(const ScenarioConfig& c)
{
    std::vector<std::string> e;
    const int K = c.manifold.modes;
    const int dim = 2 * K + 1;

    if (!one_of(c.manifold.kind, {"circle", "torus"})) {
        e.push_back("manifold.kind must be circle or torus, got '" + c.manifold.kind + "'");
    }
    if (c.manifold.ambient_n < 2) {
        e.push_back("manifold.ambient_n must be >= 2");
    }
    if (K < 1 || K > 256) {
        e.push_back("manifold.modes must be in [1, 256]");
    }
    if (c.manifold.grid != 0 && c.manifold.grid < 4 * K + 1) {
        e.push_back("manifold.grid must be 0 or >= 4K+1 = " + std::to_string(4 * K + 1));
    }
    if (c.manifold.kind == "torus" && !(c.manifold.length > 0.0)) {
        e.push_back("manifold.length must be > 0 for a torus");
    }
    if (!(c.horizon > 0.0) || !std::isfinite(c.horizon)) {
        e.push_back("time.horizon must be > 0");
    }

    const auto& m = c.metric;
    if (!one_of(m.profile, {"static", "mcf", "gbm", "table"})) {
        e.push_back("metric.profile must be static, mcf, gbm or table, got '" + m.profile + "'");
    }
    if (!(m.factor > 0.0)) {
        e.push_back("metric.factor must be > 0");
    }
    if (m.profile == "mcf") {
        if (c.manifold.kind != "circle") {
            e.push_back("metric.profile = mcf requires manifold.kind = circle");
        }
        const int n = c.manifold.ambient_n;
        if (n >= 2 && !(c.horizon < 1.0 / (2.0 * n))) {
            e.push_back("metric.profile = mcf requires T < 1/(2n) = " + format_double(1.0 / (2.0 * n))
                        + " (got T = " + format_double(c.horizon) + ")");
        }
    }
    if (m.profile == "gbm") {
        if (m.steps < 1) {
            e.push_back("metric.steps must be >= 1");
        }
        if (m.sigma < 0.0) {
            e.push_back("metric.sigma must be >= 0");
        }
        if (!(m.r - 0.5 * m.sigma * m.sigma < 0.0)) {
            e.push_back("metric.profile = gbm requires r - sigma^2/2 < 0 (got " + format_double(m.r - 0.5 * m.sigma * m.sigma)
                        + ")");
        }
    }
    if (m.profile == "table" && m.path.empty()) {
        e.push_back("metric.profile = table requires metric.path");
    }

    const auto& o = c.op;
    if (!one_of(o.kind, {"heat", "mcf_sphere", "moving_surface", "general", "plaplace"})) {
        e.push_back("operator.kind must be heat, mcf_sphere, moving_surface, general or plaplace, got '" + o.kind + "'");
    }
    if (o.kind == "heat" && m.profile != "static") {
        e.push_back("operator.kind = heat requires metric.profile = static");
    }
    if (o.kind == "mcf_sphere" && m.profile != "mcf") {
        e.push_back("operator.kind = mcf_sphere requires metric.profile = mcf");
    }
    if (o.kind == "mcf_sphere" && m.factor != 1.0) {
        e.push_back("operator.kind = mcf_sphere requires metric.factor = 1");
    }
    if (o.kind == "moving_surface") {
        if (!one_of(o.vh, {"mcf", "constant"})) {
            e.push_back("operator.vh must be mcf or constant");
        }
        if (o.vh == "mcf" && m.profile != "mcf") {
            e.push_back("operator.vh = mcf requires metric.profile = mcf");
        }
        if (o.k1 < 0.0) {
            e.push_back("operator.k1 must be >= 0");
        }
        if (o.vh == "constant" && o.k1 > 0.0 && std::abs(o.vh_value) > o.k1) {
            e.push_back("operator.vh_value violates |VH| <= k1");
        }
    }
    if (o.kind == "general") {
        for (const auto* v : {&o.a, &o.b, &o.ctilde}) {
            if (v->size() != 3) {
                e.push_back("operator.a, operator.b and operator.ctilde need 3 values (mean, cos, sin)");
                break;
            }
        }
        if (o.a.size() == 3 && !(o.a[0] - std::hypot(o.a[1], o.a[2]) > 0.0)) {
            e.push_back("operator.a must be bounded below by a positive constant");
        }
        if (o.b.size() == 3 && (o.b[1] != 0.0 || o.b[2] != 0.0)) {
            e.push_back("operator.b must satisfy div b <= 0; on a closed curve this forces b constant");
        }
    }
    if (o.kind == "plaplace") {
        if (!(o.p > 2.0)) {
            e.push_back("operator.p must be > 2");
        }
        if (c.nonlinearity.kind != "none") {
            e.push_back("operator.kind = plaplace requires nonlinearity.kind = none");
        }
        if (!c.initial.coefficients.empty() && c.initial.coefficients[0] != 0.0) {
            e.push_back("operator.kind = plaplace requires mean-zero initial data (initial.coefficients[0] = 0)");
        }
    }

    if (!one_of(c.nonlinearity.kind, {"none", "linear", "tanh"})) {
        e.push_back("nonlinearity.kind must be none, linear or tanh");
    }
    if (c.nonlinearity.kind != "none" && !(c.nonlinearity.gamma > 0.0)) {
        e.push_back("nonlinearity.gamma must be > 0");
    }

    const auto& n = c.noise;
    if (!one_of(n.kind, {"canonical", "custom", "none"})) {
        e.push_back("noise.kind must be canonical, custom or none");
    }
    if (n.kind == "canonical" && (n.modes < 0 || n.modes > dim)) {
        e.push_back("noise.modes must be in [0, 2K+1] = [0, " + std::to_string(dim) + "]");
    }
    if (n.kind == "custom") {
        if (n.sigma.empty() || static_cast<int>(n.sigma.size()) > dim) {
            e.push_back("noise.sigma needs 1..2K+1 values");
        }
        for (double s : n.sigma) {
            if (!(s > 0.0)) {
                e.push_back("noise.sigma entries must be > 0");
                break;
            }
        }
    }

    if (!(c.solver.dt > 0.0)) {
        e.push_back("solver.dt must be > 0");
    } else if (c.horizon > 0.0) {
        const double steps = c.horizon / c.solver.dt;
        if (std::abs(steps - std::round(steps)) > 1e-9 * steps) {
            e.push_back("solver.dt must divide time.horizon");
        }
    }
    if (!one_of(c.solver.scheme, {"semi_implicit", "explicit_em"})) {
        e.push_back("solver.scheme must be semi_implicit or explicit_em");
    }
    if (c.solver.record_stride < 1) {
        e.push_back("solver.record_stride must be >= 1");
    }

    if (c.run.replicas < 1) {
        e.push_back("run.replicas must be >= 1");
    }
    if (c.run.samples < 100) {
        e.push_back("run.samples must be >= 100");
    }
    if (c.run.dts.size() < 2) {
        e.push_back("run.dts needs at least two step sizes");
    }
    for (std::size_t i = 0; i < c.run.dts.size(); ++i) {
        if (!(c.run.dts[i] > 0.0) || (i > 0 && !(c.run.dts[i] < c.run.dts[i - 1]))) {
            e.push_back("run.dts must be positive and strictly descending");
            break;
        }
    }
    if (!(c.run.reference_dt > 0.0)) {
        e.push_back("run.reference_dt must be > 0");
    }

    if (static_cast<int>(c.initial.coefficients.size()) > dim) {
        e.push_back("initial.coefficients has more than 2K+1 = " + std::to_string(dim) + " entries");
    }
    for (double v : c.initial.coefficients) {
        if (!std::isfinite(v)) {
            e.push_back("initial.coefficients must be finite");
            break;
        }
    }
    if (c.output.directory.empty()) {
        e.push_back("output.directory must not be empty");
    }
    if (c.output.max_modes < -1) {
        e.push_back("output.max_modes must be >= -1");
    }
    return e;
}

std::string serialize(const ScenarioConfig& c)
{
    std::ostringstream os;
    auto d = [](double v) { return format_double(v); };
    os << "[manifold]\nkind = " << c.manifold.kind << "\nambient_n = " << c.manifold.ambient_n
       << "\nmodes = " << c.manifold.modes << "\ngrid = " << c.manifold.grid << "\nlength = " << d(c.manifold.length)
       << "\n\n";
    os << "[metric]\nprofile = " << c.metric.profile << "\nfactor = " << d(c.metric.factor) << "\nr = " << d(c.metric.r)
       << "\nsigma = " << d(c.metric.sigma) << "\nsteps = " << c.metric.steps
       << "\nmetric_seed = " << c.metric.metric_seed << "\npath = " << c.metric.path << "\n\n";
    os << "[time]\nhorizon = " << d(c.horizon) << "\n\n";
    os << "[operator]\nkind = " << c.op.kind << "\np = " << d(c.op.p) << "\nvh = " << c.op.vh
       << "\nvh_value = " << d(c.op.vh_value) << "\nk1 = " << d(c.op.k1) << "\na = " << list_text(c.op.a)
       << "\nb = " << list_text(c.op.b) << "\nctilde = " << list_text(c.op.ctilde) << "\n\n";
    os << "[nonlinearity]\nkind = " << c.nonlinearity.kind << "\ngamma = " << d(c.nonlinearity.gamma) << "\n\n";
    os << "[noise]\nkind = " << c.noise.kind << "\nmodes = " << c.noise.modes << "\nsigma = " << list_text(c.noise.sigma)
       << "\n\n";
    os << "[solver]\ndt = " << d(c.solver.dt) << "\nscheme = " << c.solver.scheme
       << "\nrecord_stride = " << c.solver.record_stride << "\n\n";
    os << "[run]\nlabel = " << c.label << "\nreplicas = " << c.run.replicas << "\nseed = " << c.run.seed
       << "\nsamples = " << c.run.samples << "\ndts = " << list_text(c.run.dts)
       << "\nreference_dt = " << d(c.run.reference_dt) << "\n\n";
    os << "[initial]\ncoefficients = " << list_text(c.initial.coefficients) << "\n\n";
    os << "[output]\ndirectory = " << c.output.directory << "\nmax_modes = " << c.output.max_modes << "\n";
    return os.str();
}

} // namespace evspde::config
