#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "pointfield/experiments.hpp"
#include "pointfield/run_config.hpp"

using namespace pointfield;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct RunResult {
    int exit_code;
    std::string out;
    std::string err;
};

/// Runs the built command-line binary with the given arguments.
RunResult run_cli(const std::string& args, const fs::path& scratch) {
    const fs::path out_file = scratch / "stdout.txt";
    const fs::path err_file = scratch / "stderr.txt";
    const std::string cmd = std::string(POINTFIELD_CLI_PATH) + " " + args +
                            " >" + out_file.string() + " 2>" +
                            err_file.string();
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    res.out = slurp(out_file);
    res.err = slurp(err_file);
    return res;
}

struct ScratchDir {
    fs::path path;
    explicit ScratchDir(const std::string& name)
        : path(fs::path("cli_scratch") / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~ScratchDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("exceedance series oracle matches the closed form") {
    const auto unit = MixingDistribution::point_mass(1.0);
    const double frozen[5] = {0.009516258196404049, 0.1967346701436833,
                              0.6321205588285577, 1.7293294335267746,
                              4.966310265004573};
    const double ms[5] = {0.1, 0.5, 1.0, 2.0, 5.0};
    for (int k = 0; k < 5; ++k) {
        CHECK(exceedance_series(ms[k], unit) ==
              Catch::Approx(frozen[k]).margin(1e-13));
        CHECK(std::abs(exceedance_series(ms[k], unit) -
                       exact_exceedance(ms[k], unit)) < 1e-12);
    }
    const MixingDistribution lam({{0.5, 0.5}, {2.0, 0.5}});
    CHECK(exceedance_series(1.0, lam) ==
          Catch::Approx(0.9630320518352289).margin(1e-13));
    CHECK(exceedance_series(0.0, lam) == 0.0);
}

TEST_CASE("density selector") {
    const auto c = make_density("const", 2, 1);
    CHECK(c.is_constant());
    CHECK(c.window().half_side == 2.0);  // a plus the one-cell margin
    CHECK(c.total_mass() == Catch::Approx(16.0).epsilon(1e-14));

    const auto b = make_density("bump", 1, 2);
    CHECK_FALSE(b.is_constant());
    CHECK(b.window().half_side == 3.0);

    CHECK_THROWS_AS(make_density("triangle", 2, 1), std::invalid_argument);
}

TEST_CASE("laplace engine passes its own oracle on a small run") {
    std::vector<LaplacePair> pairs;
    pairs.push_back({"d1_const_unit", make_density("const", 1, 1),
                     MixingDistribution::point_mass(1.0)});
    const auto report = run_laplace_check(pairs, 4000, 99, 2, "");
    CHECK(report.experiment == "laplace-check");
    CHECK(report.passed);
    CHECK(report.checks.size() == 6);  // six test exponents
    CHECK(report.files.empty());       // no out dir, no files
}

TEST_CASE("exceedance engine passes and writes its csv") {
    ScratchDir scratch("exceedance_engine");
    const auto report = run_exceedance_check(
        make_density("const", 1, 1), MixingDistribution::point_mass(1.0), 2, 1,
        4000, 7, 2, scratch.path.string());
    CHECK(report.passed);
    REQUIRE(report.files.size() == 1);
    const std::string text = slurp(report.files[0]);
    CHECK(text.rfind("kind,m,exact,estimate,std_error,tolerance,pass\n", 0) ==
          0);
    CHECK(text.find("series") != std::string::npos);
    CHECK(text.find("mc") != std::string::npos);
}

TEST_CASE("config serialization round-trips exactly") {
    RunConfig cfg;
    cfg.experiment = "scaling";
    cfg.d = 3;
    cfg.n_list = {2, 4, 8};
    cfg.a = 1;
    cfg.replicas = 500;
    cfg.seed = 12345;
    cfg.seed_set = true;
    cfg.rho = "bump";
    cfg.lambda_atoms = {{0.1, 0.3}, {2.5, 0.7}};  // 0.1 is not exact binary
    cfg.out_dir = "some/dir";
    cfg.workers = 4;
    cfg.step = 2e-5;

    const std::string once = serialize_config(cfg);
    const std::string twice = serialize_config(parse_config(once));
    CHECK(once == twice);

    const RunConfig back = parse_config(once);
    CHECK(back.experiment == "scaling");
    CHECK(back.d == 3);
    CHECK(back.n_list == std::vector<int>{2, 4, 8});
    CHECK(back.replicas == 500);
    CHECK(back.seed == 12345);
    CHECK(back.seed_set);
    CHECK(back.rho == "bump");
    REQUIRE(back.lambda_atoms.size() == 2);
    CHECK(back.lambda_atoms[0].z == 0.1);
    CHECK(back.lambda_atoms[0].p == 0.3);
    CHECK(back.out_dir == "some/dir");
    CHECK(back.workers == 4);
    CHECK(back.step == 2e-5);
}

TEST_CASE("config parser handles comments and rejects junk") {
    const auto cfg = parse_config(
        "# run header\n"
        "experiment=collision\n"
        "  d=1  # trailing comment\n"
        "\n"
        "seed=9\n");
    CHECK(cfg.experiment == "collision");
    CHECK(cfg.d == 1);
    CHECK(cfg.seed == 9);
    CHECK(cfg.seed_set);

    CHECK_THROWS_AS(parse_config("volume=3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("just words\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("d=two\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("step=fast\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("lambda=1.0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("lambda=1:0.5,oops\n"), ConfigError);
}

TEST_CASE("lambda atom text round-trips") {
    const auto atoms = parse_lambda_atoms("0.5:0.25,1:0.25,3.75:0.5");
    REQUIRE(atoms.size() == 3);
    CHECK(atoms[1].z == 1.0);
    CHECK(atoms[2].p == 0.5);
    const auto again = parse_lambda_atoms(format_lambda_atoms(atoms));
    REQUIRE(again.size() == atoms.size());
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        CHECK(again[k].z == atoms[k].z);
        CHECK(again[k].p == atoms[k].p);
    }
    CHECK_THROWS_AS(parse_lambda_atoms(""), ConfigError);
}

TEST_CASE("config validation names the offending field") {
    RunConfig cfg;
    cfg.experiment = "scaling";
    cfg.seed_set = true;

    auto message_of = [](const RunConfig& bad) {
        try {
            validate_config(bad);
            return std::string("no error");
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
    };

    CHECK(message_of(cfg) == "no error");

    RunConfig no_seed = cfg;
    no_seed.seed_set = false;
    CHECK(message_of(no_seed).find("seed") != std::string::npos);

    RunConfig bad_exp = cfg;
    bad_exp.experiment = "walk";
    CHECK(message_of(bad_exp).find("experiment") != std::string::npos);

    RunConfig bad_d = cfg;
    bad_d.d = 4;
    CHECK(message_of(bad_d).find("d:") != std::string::npos);

    RunConfig bad_n = cfg;
    bad_n.n_list = {4, 2};
    CHECK(message_of(bad_n).find("n:") != std::string::npos);

    RunConfig bad_rho = cfg;
    bad_rho.rho = "spikes";
    CHECK(message_of(bad_rho).find("rho") != std::string::npos);

    RunConfig bad_workers = cfg;
    bad_workers.workers = 0;
    CHECK(message_of(bad_workers).find("workers") != std::string::npos);

    RunConfig bad_step = cfg;
    bad_step.step = 0.0;
    CHECK(message_of(bad_step).find("step") != std::string::npos);

    RunConfig bad_atoms = cfg;
    bad_atoms.lambda_atoms = {{1.0, 0.5}};
    CHECK_THROWS_AS(validate_config(bad_atoms), std::invalid_argument);
}

TEST_CASE("experiment default replica counts") {
    CHECK(default_replicas("laplace-check", 1) == 100000);
    CHECK(default_replicas("exceedance-check", 2) == 100000);
    CHECK(default_replicas("scaling", 2) == 10000);
    CHECK(default_replicas("scaling", 3) == 20000);
    CHECK(default_replicas("gibbs-scaling", 2) == 2000);
    CHECK(default_replicas("collision", 3) == 10000);
}

TEST_CASE("cli help exits zero") {
    ScratchDir scratch("cli_help");
    const auto res = run_cli("--help", scratch.path);
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("exceedance-check") != std::string::npos);
}

TEST_CASE("cli requires a seed and names it") {
    ScratchDir scratch("cli_noseed");
    const auto res = run_cli(
        "exceedance-check --d 1 --out " + (scratch.path / "o").string(),
        scratch.path);
    CHECK(res.exit_code == 1);
    CHECK(res.err.find("seed") != std::string::npos);
}

TEST_CASE("cli rejects bad flag values with exit one") {
    ScratchDir scratch("cli_bad");
    CHECK(run_cli("exceedance-check --seed 1 --d 7", scratch.path).exit_code ==
          1);
    CHECK(run_cli("exceedance-check --seed 1 --d nope", scratch.path)
              .exit_code == 1);
    CHECK(run_cli("no-such-command --seed 1", scratch.path).exit_code == 1);
    CHECK(run_cli("exceedance-check --seed 1 --rho comb", scratch.path)
              .exit_code == 1);
}

TEST_CASE("cli exceedance run is deterministic and worker independent") {
    ScratchDir scratch("cli_determinism");
    const std::string base =
        "exceedance-check --d 1 --n 2 --a 1 --replicas 2000 --seed 5 ";
    const auto o1 = (scratch.path / "r1").string();
    const auto o2 = (scratch.path / "r2").string();
    const auto o4 = (scratch.path / "r4").string();

    const auto r1 = run_cli(base + "--out " + o1 + " --workers 1",
                            scratch.path);
    REQUIRE(r1.exit_code == 0);
    CHECK(r1.out.find("RESULT: PASS") != std::string::npos);
    const auto r2 = run_cli(base + "--out " + o2 + " --workers 1",
                            scratch.path);
    REQUIRE(r2.exit_code == 0);
    const auto r4 = run_cli(base + "--out " + o4 + " --workers 2",
                            scratch.path);
    REQUIRE(r4.exit_code == 0);

    const std::string csv1 = slurp(fs::path(o1) / "exceedance_check.csv");
    CHECK(csv1 == slurp(fs::path(o2) / "exceedance_check.csv"));
    CHECK(csv1 == slurp(fs::path(o4) / "exceedance_check.csv"));

    CHECK(fs::exists(fs::path(o1) / "summary.txt"));
    const std::string echoed = slurp(fs::path(o1) / "config.txt");
    CHECK(echoed.find("experiment=exceedance-check\n") != std::string::npos);
    CHECK(echoed.find("seed=5\n") != std::string::npos);
}

TEST_CASE("cli reads a config file and flags override it") {
    ScratchDir scratch("cli_config");
    const fs::path cfg_path = scratch.path / "run.cfg";
    {
        std::ofstream out(cfg_path);
        out << "experiment=ignored-here\n"  // subcommand wins
               "d=1\n"
               "n=2\n"
               "a=1\n"
               "replicas=500\n"
               "seed=11\n"
               "rho=const\n"
               "lambda=1:1\n"
               "out=" << (scratch.path / "from_file").string() << "\n";
    }
    const auto r = run_cli("exceedance-check --config " + cfg_path.string() +
                               " --replicas 2000 --out " +
                               (scratch.path / "cfg_out").string(),
                           scratch.path);
    REQUIRE(r.exit_code == 0);
    const std::string echoed =
        slurp(scratch.path / "cfg_out" / "config.txt");
    CHECK(echoed.find("replicas=2000\n") != std::string::npos);  // override
    CHECK(echoed.find("seed=11\n") != std::string::npos);        // from file
    CHECK(echoed.find("d=1\n") != std::string::npos);
}

TEST_CASE("cli reports acceptance failure with exit two") {
    // A d=3 scaling run whose refinement list leaves a single point in the
    // unsaturated window cannot certify the decay slope, so the gate must
    // fail closed regardless of the Monte Carlo draw.
    ScratchDir scratch("cli_fail");
    const auto res = run_cli(
        "scaling --d 3 --n 2,4 --a 1 --replicas 150 --seed 5 --out " +
            (scratch.path / "o").string(),
        scratch.path);
    CHECK(res.exit_code == 2);
    CHECK(res.out.find("[FAIL]") != std::string::npos);
    CHECK(res.out.find("RESULT: FAIL") != std::string::npos);
}