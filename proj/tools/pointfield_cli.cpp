// Batch front end: one subcommand per experiment, a flat key=value config
// file with command-line overrides, deterministic CSV outputs, and exit
// codes 0 (pass), 1 (configuration error), 2 (acceptance failure).

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pointfield/experiments.hpp"
#include "pointfield/run_config.hpp"

namespace {

using namespace pointfield;

struct FlagSet {
    std::string config_path;
    int d = 0;
    std::string n_text;
    int a = 0;
    long long replicas = 0;
    long long seed = 0;
    std::string rho;
    std::string lambda_text;
    std::string out;
    int workers = 0;
    double step = 0.0;
};

struct FlagOptions {
    CLI::Option* config = nullptr;
    CLI::Option* d = nullptr;
    CLI::Option* n = nullptr;
    CLI::Option* a = nullptr;
    CLI::Option* replicas = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* rho = nullptr;
    CLI::Option* lambda = nullptr;
    CLI::Option* out = nullptr;
    CLI::Option* workers = nullptr;
    CLI::Option* step = nullptr;
};

FlagOptions add_common_flags(CLI::App* cmd, FlagSet& flags) {
    FlagOptions opts;
    opts.config = cmd->add_option("--config", flags.config_path,
                                  "key=value config file; flags override it");
    opts.d = cmd->add_option("--d", flags.d, "spatial dimension (1..3)");
    opts.n = cmd->add_option("--n", flags.n_text,
                             "comma-separated grid refinements, e.g. 2,4,8");
    opts.a = cmd->add_option("--a", flags.a, "window half side (integer)");
    opts.replicas = cmd->add_option("--replicas", flags.replicas,
                                    "Monte Carlo replicas / trials");
    opts.seed = cmd->add_option("--seed", flags.seed,
                                "master seed (required; no clock default)");
    opts.rho = cmd->add_option("--rho", flags.rho, "density: const or bump");
    opts.lambda = cmd->add_option("--lambda", flags.lambda_text,
                                  "mixing atoms as z:p,z:p,...");
    opts.out = cmd->add_option("--out", flags.out, "output directory");
    opts.workers =
        cmd->add_option("--workers", flags.workers, "parallel worker threads");
    opts.step = cmd->add_option("--step", flags.step,
                                "collision probe time step");
    return opts;
}

RunConfig build_config(const std::string& experiment, const FlagSet& flags,
                       const FlagOptions& opts) {
    RunConfig cfg;
    if (opts.config->count() > 0) {
        std::ifstream in(flags.config_path);
        if (!in)
            throw ConfigError("config: cannot read file '" + flags.config_path +
                              "'");
        std::ostringstream text;
        text << in.rdbuf();
        cfg = parse_config(text.str());
    }
    cfg.experiment = experiment;
    if (opts.d->count() > 0) cfg.d = flags.d;
    if (opts.n->count() > 0) cfg.n_list = parse_n_list(flags.n_text);
    if (opts.a->count() > 0) cfg.a = flags.a;
    if (opts.replicas->count() > 0)
        cfg.replicas = static_cast<std::uint64_t>(flags.replicas);
    if (opts.seed->count() > 0) {
        cfg.seed = static_cast<std::uint64_t>(flags.seed);
        cfg.seed_set = true;
    }
    if (opts.rho->count() > 0) cfg.rho = flags.rho;
    if (opts.lambda->count() > 0)
        cfg.lambda_atoms = parse_lambda_atoms(flags.lambda_text);
    if (opts.out->count() > 0) cfg.out_dir = flags.out;
    if (cfg.out_dir.empty()) cfg.out_dir = "pointfield-out";
    if (opts.workers->count() > 0) cfg.workers = flags.workers;
    if (opts.step->count() > 0) cfg.step = flags.step;
    validate_config(cfg);
    return cfg;
}

ExperimentReport dispatch(const RunConfig& cfg) {
    const std::uint64_t replicas =
        cfg.replicas ? cfg.replicas : default_replicas(cfg.experiment, cfg.d);
    const MixingDistribution lambda(cfg.lambda_atoms);

    if (cfg.experiment == "laplace-check") {
        std::vector<LaplacePair> pairs;
        pairs.push_back({cfg.rho + "_d" + std::to_string(cfg.d),
                         make_density(cfg.rho, cfg.d, cfg.a), lambda});
        return run_laplace_check(pairs, replicas, cfg.seed, cfg.workers,
                                 cfg.out_dir);
    }
    if (cfg.experiment == "exceedance-check") {
        return run_exceedance_check(make_density(cfg.rho, cfg.d, cfg.a),
                                    lambda, cfg.n_list.front(), cfg.a,
                                    replicas, cfg.seed, cfg.workers,
                                    cfg.out_dir);
    }
    if (cfg.experiment == "scaling") {
        return run_scaling(cfg.d, cfg.n_list, cfg.a,
                           make_density(cfg.rho, cfg.d, cfg.a), lambda,
                           replicas, cfg.seed, cfg.workers, cfg.out_dir);
    }
    if (cfg.experiment == "gibbs-scaling") {
        return run_gibbs_scaling(cfg.d, cfg.n_list, cfg.a, GibbsParams{},
                                 replicas, cfg.seed, cfg.workers, cfg.out_dir);
    }
    CollisionParams params;
    params.main_step = cfg.step;
    params.main_trials = replicas;
    params.trend_trials = std::min<std::uint64_t>(replicas, 4000);
    return run_collision({cfg.d}, params, cfg.seed, cfg.workers, cfg.out_dir);
}

int finish(const RunConfig& cfg, const ExperimentReport& report) {
    std::string summary = "experiment: " + report.experiment + "\n";
    for (const auto& check : report.checks) {
        summary += check.passed ? "[PASS] " : "[FAIL] ";
        summary += check.label;
        if (!check.detail.empty()) summary += " :: " + check.detail;
        summary += "\n";
    }
    summary += report.passed ? "RESULT: PASS\n" : "RESULT: FAIL\n";
    std::cout << summary;

    std::filesystem::create_directories(cfg.out_dir);
    {
        std::ofstream out(std::filesystem::path(cfg.out_dir) / "summary.txt",
                          std::ios::binary);
        out << summary;
    }
    {
        std::ofstream out(std::filesystem::path(cfg.out_dir) / "config.txt",
                          std::ios::binary);
        out << serialize_config(cfg);
    }
    for (const auto& f : report.files)
        std::cout << "wrote " << f << "\n";
    return report.passed ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"point-process energy and collision experiments"};
    app.require_subcommand(1);

    FlagSet flags;
    const std::vector<std::string> names = {
        "laplace-check", "exceedance-check", "scaling", "gibbs-scaling",
        "collision"};
    const std::vector<std::string> blurbs = {
        "Monte Carlo Laplace functional against the exact formula",
        "occupied-cell exceedance identity: closed form, series, Monte Carlo",
        "detector energy versus refinement with explicit bounds",
        "detector energy under the repulsive Gibbs sampler",
        "annulus hitting probabilities against the exact exit formulas"};
    std::vector<std::pair<CLI::App*, FlagOptions>> subs;
    for (std::size_t k = 0; k < names.size(); ++k) {
        CLI::App* cmd = app.add_subcommand(names[k], blurbs[k]);
        subs.emplace_back(cmd, add_common_flags(cmd, flags));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Collapse CLI11's many exit codes onto the pinned contract:
        // 0 for help/version, 1 for every malformed invocation.
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        for (std::size_t k = 0; k < subs.size(); ++k) {
            if (subs[k].first->parsed()) {
                const RunConfig cfg =
                    build_config(names[k], flags, subs[k].second);
                return finish(cfg, dispatch(cfg));
            }
        }
        std::cerr << "no subcommand selected\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
