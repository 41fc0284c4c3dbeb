#include <doctest.h>

#include <filesystem>

#include "evspde/config.hpp"
#include "evspde/csv.hpp"
#include "evspde/scenario.hpp"

using namespace evspde;
using namespace evspde::config;

namespace {

const char* kMinimalHeat = R"(
[manifold]
kind = circle
modes = 8

[operator]
kind = heat
)";

std::vector<std::string> errors_of(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.errors();
    }
    return {};
}

bool any_contains(const std::vector<std::string>& v, const std::string& needle)
{
    for (const auto& s : v) {
        if (s.find(needle) != std::string::npos) {
            return true;
        }
    }
    return false;
}

} // namespace

TEST_CASE("minimal static heat config takes the documented defaults")
{
    const auto c = parse_config(kMinimalHeat);
    CHECK(c.solver.dt == 1e-3);
    CHECK(c.run.replicas == 1);
    CHECK(c.noise.kind == "canonical");
    CHECK(c.noise.modes == 0);
    const auto built = scenario::build(c);
    REQUIRE(built.scenario.noise.has_value());
    CHECK(built.scenario.noise->size() == 8); // J = K
    CHECK(built.scenario.initial.size() == 17);
}

TEST_CASE("mcf horizon beyond the collapse time")
{
    const auto e = errors_of("[manifold]\nambient_n = 2\n[metric]\nprofile = mcf\n[time]\nhorizon = 0.3\n"
                             "[operator]\nkind = mcf_sphere\n[solver]\ndt = 0.001\n");
    REQUIRE_FALSE(e.empty());
    CHECK(any_contains(e, "T < 1/(2n) = 0.25"));
}

TEST_CASE("gbm drift constraint")
{
    const auto e = errors_of("[metric]\nprofile = gbm\nr = 0.05\nsigma = 0.2\n[operator]\nkind = general\n");
    CHECK(any_contains(e, "r - sigma^2/2 < 0"));
}

TEST_CASE("all problems are reported, unknown keys are errors")
{
    const auto e = errors_of("[manifold]\nmodes = 4\ncolour = red\n[solver]\ndt = fast\n[bogus]\nx = 1\n");
    CHECK(e.size() == 3);
    CHECK(any_contains(e, "unknown key manifold.colour"));
    CHECK(any_contains(e, "solver.dt"));
    CHECK(any_contains(e, "unknown section [bogus]"));

    const auto v = errors_of("[manifold]\nmodes = 0\n[solver]\ndt = -1\nscheme = rk4\n[run]\nreplicas = 0\n");
    CHECK(v.size() >= 4);
}

TEST_CASE("p-Laplace consistency rules")
{
    const auto e = errors_of("[operator]\nkind = plaplace\np = 4\n[nonlinearity]\nkind = tanh\ngamma = 1\n"
                             "[initial]\ncoefficients = 1, 0.5\n");
    CHECK(any_contains(e, "nonlinearity.kind = none"));
    CHECK(any_contains(e, "mean-zero"));
    CHECK(any_contains(errors_of("[operator]\nkind = plaplace\np = 2\n"), "operator.p"));
}

TEST_CASE("round trip")
{
    ScenarioConfig c;
    c.label = "trip";
    c.manifold.modes = 5;
    c.metric.profile = "gbm";
    c.metric.r = -0.1;
    c.metric.sigma = 0.3;
    c.metric.metric_seed = 18446744073709551615ull;
    c.op.kind = "general";
    c.op.a = {2.0, 0.25, -0.125};
    c.op.ctilde = {0.1, 0.0, 0.3};
    c.nonlinearity = {"tanh", 0.7};
    c.noise.kind = "custom";
    c.noise.sigma = {1.0, 1.0 / 3.0, 0.1};
    c.solver.dt = 1.0 / 64.0;
    c.initial.coefficients = {0.1, -2.0, 1e-17};
    c.run.dts = {0.01, 0.005};
    REQUIRE(validate(c).empty());
    const auto text = serialize(c);
    const auto back = parse_config(text);
    CHECK(back == c);
    CHECK(serialize(back) == text);
    CHECK(parse_config(serialize(parse_config(kMinimalHeat))) == parse_config(kMinimalHeat));
}

TEST_CASE("every operator kind builds")
{
    SUBCASE("mcf sphere")
    {
        auto c = parse_config("[metric]\nprofile = mcf\n[time]\nhorizon = 0.2\n[operator]\nkind = mcf_sphere\n");
        const auto b = scenario::build(c);
        CHECK(b.scenario.mcf_n == 2);
        CHECK(b.constants.c == doctest::Approx(40.0));
    }
    SUBCASE("moving surface")
    {
        auto c = parse_config("[metric]\nprofile = mcf\n[time]\nhorizon = 0.2\n[operator]\nkind = moving_surface\n"
                              "[nonlinearity]\nkind = linear\ngamma = 0.5\n");
        const auto b = scenario::build(c);
        CHECK_FALSE(b.scenario.nonlinearity.is_zero());
        CHECK(b.constants.source.find("nonlinearity") != std::string::npos);
    }
    SUBCASE("general on a gbm metric")
    {
        auto c = parse_config("[metric]\nprofile = gbm\nr = 0\nsigma = 0.2\nsteps = 50\n[operator]\nkind = general\n"
                              "a = 1.5, 0.2, 0\nctilde = 0.3, 0, 0\n");
        const auto b = scenario::build(c);
        REQUIRE(b.factor_table.has_value());
        CHECK(b.factor_table->values.size() == 51);
        CHECK_FALSE(b.scenario.time_independent);
    }
    SUBCASE("table file")
    {
        const auto path = std::filesystem::temp_directory_path() / "evspde_factor_table.csv";
        write_text_file(path, "t,f\n0,1\n0.5,2\n1,1.5\n");
        auto c = parse_config("[metric]\nprofile = table\npath = " + path.string() + "\n[operator]\nkind = general\n");
        const auto b = scenario::build(c);
        CHECK(b.scenario.family->factor(0.25) == doctest::Approx(1.5));
        std::filesystem::remove(path);
    }
    SUBCASE("p-Laplace")
    {
        auto c = parse_config("[operator]\nkind = plaplace\np = 3\n[initial]\ncoefficients = 0, 1\n");
        const auto b = scenario::build(c);
        CHECK(b.constants.alpha == 3.0);
    }
    SUBCASE("torus heat")
    {
        auto c = parse_config("[manifold]\nkind = torus\nlength = 12.566370614359172\nmodes = 4\n[operator]\nkind = heat\n");
        const auto b = scenario::build(c);
        CHECK(b.scenario.basis().eigenvalue(1) == doctest::Approx(0.25));
    }
}
