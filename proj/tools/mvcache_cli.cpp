#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvcache/config.hpp"
#include "mvcache/content.hpp"
#include "mvcache/experiments.hpp"
#include "mvcache/optimize.hpp"
#include "mvcache/packing.hpp"
#include "mvcache/scenario.hpp"
#include "mvcache/simulator.hpp"
#include "mvcache/stp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mvcache;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitCapacity = 4;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    double seed = -1.0;
    double trials = -1.0;
    double workers = -1.0;
    bool full_scale = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config_path, "scenario configuration file")->required();
    cmd->add_option("--out-dir", a.out_dir, "output directory");
    cmd->add_option("--seed", a.seed, "override run.seed");
    cmd->add_option("--trials", a.trials, "override run.trials");
    cmd->add_option("--workers", a.workers, "override run.workers");
    cmd->add_flag("--full-scale", a.full_scale, "use the full-scale comparison catalog (N=100, C=60)");
}

Config load_config(const CommonArgs& a) {
    Config cfg = Config::load(a.config_path);
    if (a.seed >= 0) cfg.set("run", "seed", std::to_string(static_cast<std::uint64_t>(a.seed)));
    if (a.trials >= 0) cfg.set("run", "trials", std::to_string(static_cast<std::uint64_t>(a.trials)));
    if (a.workers >= 0) cfg.set("run", "workers", std::to_string(static_cast<std::uint64_t>(a.workers)));
    if (a.full_scale) {
        cfg.set("catalog", "videos", "100");
        cfg.set("network", "cache", "60");
    }
    return cfg;
}

json marginals_json(const Marginals& m) {
    json rows = json::array();
    for (std::size_t n = 0; n < m.n_videos; ++n) {
        json row = json::array();
        for (std::size_t ell = 0; ell < m.levels; ++ell) row.push_back(m.at(n, ell));
        rows.push_back(std::move(row));
    }
    return rows;
}

json report_json(const StpReport& rep, std::uint64_t fingerprint) {
    return json{{"fingerprint", fingerprint},
                {"mode", to_string(rep.mode)},
                {"flavor", rep.flavor == StpFlavor::Exact ? "exact" : "asymptotic"},
                {"overall", rep.overall},
                {"per_request", marginals_json(rep.per_request)}};
}

json packed_json(const PackedResult& res) {
    json columns = json::array();
    for (const auto& c : res.columns)
        columns.push_back(json{{"x_lo", static_cast<double>(c.x_lo) / kPackOne},
                               {"x_hi", static_cast<double>(c.x_hi) / kPackOne},
                               {"content", c.content.to_string()}});
    json contents = json::array();
    for (std::size_t i = 0; i < res.distribution.base.contents.size(); ++i)
        contents.push_back(json{{"content", res.distribution.base.contents[i].to_string()},
                                {"p", res.distribution.p[i]}});
    return json{{"distribution", contents},
                {"t_dagger", marginals_json(res.t_dagger)},
                {"gap_bound", res.gap_bound},
                {"discarded_demand", res.discarded_demand},
                {"dominance_violations", res.dominance_violations},
                {"columns", columns}};
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
}

void write_manifest(const CommonArgs& a, const std::string& command, std::uint64_t fingerprint,
                    const std::vector<std::string>& outputs, double wall_ms, std::uint64_t seed) {
    json m{{"command", command}, {"config", a.config_path},       {"fingerprint", fingerprint},
           {"seed", seed},      {"outputs", outputs},            {"wall_ms", wall_ms}};
    write_file(fs::path(a.out_dir) / "manifest.json", m.dump(2) + "\n");
}

class Stopwatch {
public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int cmd_analyze(const CommonArgs& a) {
    Stopwatch sw;
    Config cfg = load_config(a);
    Scenario sc = scenario_from_config(cfg);
    CachingDistribution d = distribution_from_config(cfg, sc);
    auto fp = cfg.fingerprint();
    StpReport exact = stp_exact(sc, d);
    StpReport asym = stp_asymptotic(sc, marginals(d));
    write_file(fs::path(a.out_dir) / "stp_exact.json", report_json(exact, fp).dump(2) + "\n");
    write_file(fs::path(a.out_dir) / "stp_asymptotic.json", report_json(asym, fp).dump(2) + "\n");
    write_manifest(a, "analyze", fp, {"stp_exact.json", "stp_asymptotic.json"}, sw.ms(),
                   simconfig_from_config(cfg).seed);
    std::printf("overall exact=%.6f asymptotic=%.6f\n", exact.overall, asym.overall);
    return kExitOk;
}

int cmd_optimize(const CommonArgs& a) {
    Stopwatch sw;
    Config cfg = load_config(a);
    Scenario sc = scenario_from_config(cfg);
    auto fp = cfg.fingerprint();
    RelaxedSolution rel;
    int code = kExitOk;
    try {
        rel = solve_relaxed(sc);
    } catch (const SolverDiagnostics& e) {
        std::fprintf(stderr, "warning: %s; writing best iterate\n", e.what());
        rel = e.best;
        code = kExitNumeric;
    }
    PackedResult packed = pack(rel.t_star, sc);
    GapReport gap = gap_report(packed, rel.objective, sc);
    double t_diff = 0.0;
    for (std::size_t i = 0; i < rel.t_star.t.size(); ++i)
        t_diff += std::abs(rel.t_star.t[i] - packed.t_dagger.t[i]);
    json out{{"fingerprint", fp},
             {"mode", to_string(sc.profile.encoding)},
             {"t_star", marginals_json(rel.t_star)},
             {"q_ub", rel.objective},
             {"kkt_residual", rel.kkt_residual},
             {"budget_slack", rel.budget_slack},
             {"converged", rel.converged},
             {"q_dagger", gap.q_dagger},
             {"gap_bound", gap.bound},
             {"t_distance_l1", t_diff},
             {"t_dagger_equals_t_star", t_diff <= 1e-9},
             {"packing", packed_json(packed)}};
    write_file(fs::path(a.out_dir) / "solution.json", out.dump(2) + "\n");
    write_manifest(a, "optimize", fp, {"solution.json"}, sw.ms(), simconfig_from_config(cfg).seed);
    std::printf("q_ub=%.6f q_dagger=%.6f gap=%.6f\n", rel.objective, gap.q_dagger, gap.bound);
    return code;
}

int cmd_simulate(const CommonArgs& a) {
    Stopwatch sw;
    Config cfg = load_config(a);
    Scenario sc = scenario_from_config(cfg);
    CachingDistribution d = distribution_from_config(cfg, sc);
    SimConfig sim = simconfig_from_config(cfg);
    auto fp = cfg.fingerprint();
    SimEstimate est = simulate_stp(sc, d, sim);
    std::ostringstream csv;
    csv << "lambda_u,estimate,half_width,trials,seed\n";
    csv.precision(10);
    csv << sc.net.lambda_u << ',' << est.estimate << ',' << est.half_width << ',' << est.trials << ',' << sim.seed
        << '\n';
    write_file(fs::path(a.out_dir) / "simulate.csv", csv.str());
    write_manifest(a, "simulate", fp, {"simulate.csv"}, sw.ms(), sim.seed);
    std::printf("estimate=%.6f +- %.6f\n", est.estimate, est.half_width);
    return kExitOk;
}

std::vector<StpMethod> methods_from_config(const Config& cfg) {
    std::vector<StpMethod> out;
    if (!cfg.has("run", "methods")) return {StpMethod::Analytic};
    for (const auto& w : cfg.words("run", "methods")) {
        if (w == "analytic")
            out.push_back(StpMethod::Analytic);
        else if (w == "asymptotic")
            out.push_back(StpMethod::Asymptotic);
        else if (w == "simulate")
            out.push_back(StpMethod::Simulate);
        else
            throw ConfigError("run.methods entries must be analytic|asymptotic|simulate");
    }
    return out;
}

SweepRecipe recipe_from_config(const Config& cfg, const CommonArgs& a) {
    SweepRecipe recipe;
    std::string vary = cfg.require("run", "vary");
    auto dot = vary.find('.');
    if (dot == std::string::npos) throw ConfigError("run.vary must be `section.key`");
    std::string section = vary.substr(0, dot), key = vary.substr(dot + 1);
    recipe.vary_name = vary;
    recipe.grid = cfg.numbers("run", "grid");
    recipe.scenario_at = [cfg, section, key](double value) {
        Config local = cfg;
        std::ostringstream v;
        v.precision(17);
        v << value;
        local.set(section, key, v.str());
        return scenario_from_config(local);
    };
    recipe.methods = methods_from_config(cfg);
    recipe.sim = simconfig_from_config(cfg);
    recipe.workers = recipe.sim.workers;
    (void)a;
    return recipe;
}

int cmd_sweep(const CommonArgs& a) {
    Stopwatch sw;
    Config cfg = load_config(a);
    auto fp = cfg.fingerprint();
    SweepRecipe recipe = recipe_from_config(cfg, a);
    std::string scheme_name = cfg.get_or("scheme", "kind", "proposed");
    recipe.schemes.push_back(
        {scheme_name, [&cfg](const Scenario& sc) { return distribution_from_config(cfg, sc); }});
    auto rows = run_sweep(recipe);
    write_file(fs::path(a.out_dir) / "sweep.csv", to_csv(rows));
    write_manifest(a, "sweep", fp, {"sweep.csv"}, sw.ms(), recipe.sim.seed);
    std::printf("%zu rows\n", rows.size());
    return kExitOk;
}

int cmd_compare(const CommonArgs& a) {
    Stopwatch sw;
    Config cfg = load_config(a);
    auto fp = cfg.fingerprint();
    SweepRecipe recipe = recipe_from_config(cfg, a);
    Scenario probe = recipe.scenario_at(recipe.grid.front());
    recipe.schemes.push_back({"proposed", [](const Scenario& sc) { return proposed_distribution(sc); }});
    for (const auto& spec : standard_baselines(probe.profile.encoding, probe.levels()))
        recipe.schemes.push_back(
            {spec.name(probe.profile.encoding), [spec](const Scenario& sc) { return baseline_distribution(spec, sc); }});
    auto rows = run_sweep(recipe);
    write_file(fs::path(a.out_dir) / "compare.csv", to_csv(rows));
    write_manifest(a, "compare", fp, {"compare.csv"}, sw.ms(), recipe.sim.seed);
    std::printf("%zu rows\n", rows.size());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-quality video caching: analysis, optimization and simulation"};
    app.require_subcommand(1);
    CommonArgs args[5];
    int (*handlers[5])(const CommonArgs&) = {cmd_analyze, cmd_optimize, cmd_simulate, cmd_sweep, cmd_compare};
    const char* names[5] = {"analyze", "optimize", "simulate", "sweep", "compare"};
    const char* descs[5] = {"exact and asymptotic success probability of a placement",
                            "two-stage solve: relax then pack",
                            "Monte Carlo success probability estimate",
                            "parameter sweep for one scheme",
                            "proposed scheme against the standard baselines"};
    CLI::App* cmds[5];
    for (int i = 0; i < 5; ++i) {
        cmds[i] = app.add_subcommand(names[i], descs[i]);
        add_common(cmds[i], args[i]);
    }
    CLI11_PARSE(app, argc, argv);
    for (int i = 0; i < 5; ++i) {
        if (!cmds[i]->parsed()) continue;
        try {
            return handlers[i](args[i]);
        } catch (const ConfigError& e) {
            std::fprintf(stderr, "config error: %s\n", e.what());
            return kExitConfig;
        } catch (const CapacityError& e) {
            std::fprintf(stderr, "capacity guard: %s\n", e.what());
            return kExitCapacity;
        } catch (const SolverDiagnostics& e) {
            std::fprintf(stderr, "numeric failure: %s\n", e.what());
            return kExitNumeric;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return kExitConfig;
        }
    }
    return kExitOk;
}
