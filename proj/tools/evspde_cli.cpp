// evspde command line: run, verify, convergence, levelset.
// Exit codes: 0 success, 1 error, 2 a check failed.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "evspde/config.hpp"
#include "evspde/csv.hpp"
#include "evspde/levelset.hpp"
#include "evspde/rng.hpp"
#include "evspde/scenario.hpp"
#include "evspde/solver.hpp"
#include "evspde/verify.hpp"

namespace fs = std::filesystem;
using namespace evspde;

namespace {

constexpr int kCheckFailed = 2;

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> replicas;
};

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

class Manifest {
public:
    Manifest(std::string command, fs::path dir) : dir_(std::move(dir))
    {
        j_["command"] = std::move(command);
        j_["version"] = solver::kVersion;
    }

    nlohmann::ordered_json& json() { return j_; }

    void write(const std::string& name, const std::string& content)
    {
        write_text_file(dir_ / name, content);
        j_["files"][name] = hex64(fnv1a(content.data(), content.size()));
    }

    void save() { write_text_file(dir_ / "manifest.json", j_.dump(2) + "\n"); }

private:
    fs::path dir_;
    nlohmann::ordered_json j_;
};

config::ScenarioConfig load(const Common& c)
{
    auto cfg = config::load_config(c.config);
    if (c.seed) {
        cfg.run.seed = *c.seed;
    }
    if (c.replicas) {
        cfg.run.replicas = *c.replicas;
    }
    if (!c.out.empty()) {
        cfg.output.directory = c.out;
    }
    if (auto errs = config::validate(cfg); !errs.empty()) {
        throw config::ConfigError(errs);
    }
    return cfg;
}

Manifest start(const std::string& command, const config::ScenarioConfig& cfg, const scenario::Built& built)
{
    Manifest man(command, cfg.output.directory);
    const std::string ini = config::serialize(cfg);
    man.json()["master_seed"] = cfg.run.seed;
    man.json()["replicas"] = cfg.run.replicas;
    man.json()["scenario_digest"] = built.scenario.digest_hex();
    man.json()["config_digest"] = hex64(fnv1a(ini.data(), ini.size()));
    man.write("scenario.ini", ini);
    if (built.factor_table) {
        man.write("factor_table.csv", geometry::factor_table_csv(*built.factor_table));
    }
    return man;
}

int cmd_run(const Common& c)
{
    const auto cfg = load(c);
    const auto built = scenario::build(cfg);
    auto man = start("run", cfg, built);
    const solver::PathIntegrator integrator(built.scenario, built.solver);
    const auto M = static_cast<std::size_t>(cfg.run.replicas);

    auto trajectories = verify::parallel_replicas<solver::Trajectory>(
        M, [&](std::size_t m) { return integrator.run(m, true); });
    for (std::size_t m = 0; m < M; ++m) {
        const std::string stem = "trajectory_" + std::to_string(m);
        man.write(stem + ".csv", solver::trajectory_csv(trajectories[m], cfg.output.max_modes));
        man.write(stem + ".json", solver::trajectory_metadata_json(trajectories[m], built.scenario));
    }

    const auto surface = solver::pushforward_solution(trajectories.front(), *built.map);
    CsvBuilder sc({"t", "reference_norm_sq", "surface_norm_sq"});
    for (std::size_t k = 0; k < surface.times.size(); ++k) {
        sc.cell(surface.times[k]).cell(surface.reference_norm_sq[k]).cell(surface.surface_norm_sq[k]).end_row();
    }
    man.write("surface_norms.csv", sc.str());

    std::vector<double> sups;
    for (const auto& tr : trajectories) {
        sups.push_back(tr.sup_h0_norm_sq);
    }
    if (M >= 2) {
        const auto est = verify::summarize_moment(sups);
        man.json()["sup_moment"] = {{"mean", est.mean}, {"standard_error", est.standard_error},
                                    {"half_width", est.half_width}};
    }
    man.save();
    std::cout << "run: " << M << " replica(s), digest " << built.scenario.digest_hex() << " -> "
              << cfg.output.directory << "\n";
    return 0;
}

int cmd_verify(const Common& c, std::optional<int> samples)
{
    auto cfg = load(c);
    if (samples) {
        cfg.run.samples = *samples;
    }
    const auto built = scenario::build(cfg);
    auto man = start("verify", cfg, built);
    const auto report = verify::certify(scenario::target_of(built.scenario), built.constants, cfg.run.samples,
                                        cfg.run.seed);
    man.write("report.txt", report.to_key_value());
    man.write("report_samples.csv", report.samples_csv());
    man.json()["passed"] = report.passed();
    man.save();
    for (const auto* chk : {&report.h1, &report.h2, &report.h3, &report.h4}) {
        std::cout << chk->name << " " << (chk->passed ? "pass" : "FAIL") << "  estimate " << chk->estimate
                  << "  bound " << chk->bound << "\n";
    }
    return report.passed() ? 0 : kCheckFailed;
}

int cmd_convergence(const Common& c, const std::vector<double>& dts, double min_slope)
{
    auto cfg = load(c);
    if (!dts.empty()) {
        cfg.run.dts = dts;
    }
    if (auto errs = config::validate(cfg); !errs.empty()) {
        throw config::ConfigError(errs);
    }
    const auto built = scenario::build(cfg);
    auto man = start("convergence", cfg, built);
    auto scfg = built.solver;
    scfg.dt = cfg.run.reference_dt;
    const auto rep = verify::estimate_strong_order(built.scenario, scfg, cfg.run.dts,
                                                   static_cast<std::size_t>(cfg.run.replicas));
    man.write("convergence.csv", verify::convergence_csv(rep));
    man.json()["slope"] = rep.exact ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(rep.slope);
    man.json()["exact"] = rep.exact;
    man.json()["fit_residual"] = rep.residual;
    const bool ok = rep.exact || rep.slope >= min_slope;
    man.json()["passed"] = ok;
    man.save();
    if (rep.exact) {
        std::cout << "convergence: errors at round-off level (exact)\n";
    } else {
        std::cout << "convergence: slope " << rep.slope << " (required >= " << min_slope << ")\n";
    }
    return ok ? 0 : kCheckFailed;
}

int cmd_levelset(const std::vector<double>& levels, int resolution, double extent, const std::string& out)
{
    geometry::LevelSetField field;
    field.resolution = resolution;
    field.xmax = field.ymax = extent;
    Manifest man("levelset", out);
    man.json()["resolution"] = resolution;
    man.json()["extent"] = extent;
    CsvBuilder summary({"c", "components"});
    for (double c : levels) {
        const auto res = geometry::level_set_components(field, c);
        man.write("contour_" + format_double(c) + ".csv", geometry::contour_csv(res));
        summary.cell(c).cell(res.components).end_row();
        std::cout << "c = " << c << ": " << res.components << " component(s)\n";
    }
    man.write("components.csv", summary.str());
    man.save();
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Variational SPDEs on evolving manifolds: simulate and certify"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "scenario INI file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", common.out, "output directory (overrides output.directory)");
        sub->add_option("--seed", common.seed, "master seed (overrides run.seed)");
        sub->add_option("--replicas", common.replicas, "replica count (overrides run.replicas)")
            ->check(CLI::PositiveNumber);
    };

    auto* run = app.add_subcommand("run", "integrate replicas and write trajectories");
    add_common(run);

    auto* ver = app.add_subcommand("verify", "certify H1-H4 with the analytic constants");
    add_common(ver);
    std::optional<int> samples;
    ver->add_option("--samples", samples, "probe count (>= 100)");

    auto* conv = app.add_subcommand("convergence", "strong-order study with shared noise");
    add_common(conv);
    std::vector<double> dts;
    double min_slope = 0.8;
    conv->add_option("--dt", dts, "coarse step sizes, descending");
    conv->add_option("--min-slope", min_slope, "required fitted slope");

    auto* lvl = app.add_subcommand("levelset", "contours of x^2/2 + (y^2-1)^2/2");
    std::vector<double> levels;
    int resolution = 256;
    double extent = 1.5;
    std::string lvl_out = "out";
    lvl->add_option("levels", levels, "level values c > 0")->required();
    lvl->add_option("--resolution", resolution, "grid nodes per axis");
    lvl->add_option("--extent", extent, "half-width of the square domain");
    lvl->add_option("--out", lvl_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*run) {
            return cmd_run(common);
        }
        if (*ver) {
            return cmd_verify(common, samples);
        }
        if (*conv) {
            return cmd_convergence(common, dts, min_slope);
        }
        return cmd_levelset(levels, resolution, extent, lvl_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
