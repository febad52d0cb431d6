#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qv/commands.hpp"

using namespace qv;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("qv_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

}  // namespace

TEST_CASE("config parser basics", "[cli]") {
    const auto cfg = RunConfig::parse_text("a = 1\n# comment\n b = 2.5 # trailing\n");
    CHECK(cfg.get_int("a") == 1);
    CHECK(cfg.get_real("b") == 2.5);
    CHECK(cfg.get_real("missing", 7.0) == 7.0);
    CHECK_NOTHROW(cfg.reject_unknown_keys());

    CHECK_THROWS_AS(RunConfig::parse_text("novalue\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse_text("a = 1\na = 2\n"), ConfigError);
    const auto bad = RunConfig::parse_text("a = x\n");
    CHECK_THROWS_AS(bad.get_int("a"), ConfigError);

    const auto extra = RunConfig::parse_text("a = 1\nmystery = 2\n");
    (void)extra.get_int("a");
    CHECK_THROWS_AS(extra.reject_unknown_keys(), ConfigError);

    const auto lst = RunConfig::parse_text("N_list = 101,301,1001\n");
    CHECK(lst.get_int_list("N_list") == std::vector<long>{101, 301, 1001});
}

TEST_CASE("cmd_axioms exit codes", "[cli]") {
    TempDir tmp;
    const auto good = RunConfig::parse_text(
        "delta = 0.5\nfamily = uniform\nu_lo = -1\nu_hi = 1\n");
    CHECK(cmd_axioms(good, tmp.path.string()) == kExitOk);
    CHECK(fs::exists(tmp.path / "axioms_report.csv"));
    CHECK(fs::exists(tmp.path / "config_echo.cfg"));

    // delta = 0 is a config error (exit 2 at the CLI boundary)
    const auto zero = RunConfig::parse_text(
        "delta = 0\nfamily = uniform\nu_lo = -1\nu_hi = 1\n");
    CHECK_THROWS_AS(cmd_axioms(zero, tmp.path.string()), ConfigError);

    // u_hi = 0.5 violates support normalization: domain failure, exit 1,
    // and the report mentions it
    const auto norm = RunConfig::parse_text(
        "delta = 0.5\nfamily = uniform\nu_lo = -1\nu_hi = 0.5\n");
    CHECK(cmd_axioms(norm, tmp.path.string()) == kExitDomain);
    CHECK(slurp(tmp.path / "axioms_report.csv").find("normalization") !=
          std::string::npos);

    // unknown keys rejected
    const auto unk = RunConfig::parse_text(
        "delta = 0.5\nfamily = uniform\nu_lo = -1\nu_hi = 1\nbogus = 2\n");
    CHECK_THROWS_AS(cmd_axioms(unk, tmp.path.string()), ConfigError);
}

TEST_CASE("cmd_equilibrium writes strategy and summary", "[cli]") {
    TempDir tmp;
    const auto cfg = RunConfig::parse_text(
        "family = uniform\nu_lo = -1\nu_hi = 1\ndelta = 0.5\nN = 101\nseed = 3\n");
    CHECK(cmd_equilibrium(cfg, tmp.path.string()) == kExitOk);
    const auto strat = slurp(tmp.path / "strategy.csv");
    CHECK(strat.rfind("u,v\n", 0) == 0);
    const auto summary = slurp(tmp.path / "equilibrium_summary.csv");
    CHECK(summary.find("converged,true") != std::string::npos);
    CHECK(summary.find("has_discontinuity,false") != std::string::npos);

    // rerun: byte-identical outputs
    TempDir tmp2;
    CHECK(cmd_equilibrium(cfg, tmp2.path.string()) == kExitOk);
    CHECK(slurp(tmp2.path / "strategy.csv") == strat);
}

TEST_CASE("cmd_alpha_w emits the solution and the h profile", "[cli]") {
    TempDir tmp;
    const auto cfg = RunConfig::parse_text(
        "family = linear_tilt\ngamma = 0.5\nu_lo = -1\nu_hi = 1\ndelta = 0.3\n"
        "N = 500\nalpha_profile_points = 50\n");
    CHECK(cmd_alpha_w(cfg, tmp.path.string()) == kExitOk);
    const auto summary = slurp(tmp.path / "alpha_w_summary.csv");
    CHECK(summary.find("exists,true") != std::string::npos);
    CHECK(summary.find("alpha,1.18519") != std::string::npos);
    CHECK(summary.find("zeta,") != std::string::npos);
    const auto profile = slurp(tmp.path / "h_profile.csv");
    CHECK(profile.rfind("alpha,h\n", 0) == 0);
    // 50 + 1 rows plus header
    CHECK(std::count(profile.begin(), profile.end(), '\n') == 52);
}

TEST_CASE("cmd_simulate with a stored strategy", "[cli]") {
    TempDir tmp;
    // store a strategy first
    {
        std::ofstream f(tmp.path / "s.csv", std::ios::binary);
        write_strategy_csv(f, make_linear_strategy(-1.0, 1.0, 0.05, 201));
    }
    const auto cfg = RunConfig::parse_text(
        "family = uniform\nu_lo = -1\nu_hi = 1\ndelta = 0.5\nN = 101\nreps = 500\n"
        "seed = 5\nstrategy_file = " +
        (tmp.path / "s.csv").string() + "\n");
    CHECK(cmd_simulate(cfg, tmp.path.string()) == kExitOk);
    const auto sim = slurp(tmp.path / "simulate.csv");
    CHECK(sim.rfind("N,EI,std_err,extremist_rate,V_mean,V_var\n", 0) == 0);
    CHECK(sim.find("\n101,") != std::string::npos);
}

TEST_CASE("cmd_sweep reruns are byte-identical", "[cli]") {
    const std::string text =
        "family = uniform\nu_lo = -1\nu_hi = 1\ndelta = 0.5\n"
        "N_list = 101,301\nreps = 300\nseed = 11\n";
    TempDir a, b;
    CHECK(cmd_sweep(RunConfig::parse_text(text), a.path.string()) == kExitOk);
    CHECK(cmd_sweep(RunConfig::parse_text(text), b.path.string()) == kExitOk);
    CHECK(slurp(a.path / "sweep.csv") == slurp(b.path / "sweep.csv"));
    CHECK(slurp(a.path / "sweep.csv").rfind(
              "N,EI,std_err,extremist_rate,V_mean,V_var,converged,p_hat\n", 0) == 0);
}

TEST_CASE("cmd_diagnose requires a strategy file", "[cli]") {
    TempDir tmp;
    const auto cfg = RunConfig::parse_text(
        "family = uniform\nu_lo = -1\nu_hi = 1\ndelta = 0.5\nN = 101\n");
    CHECK(cmd_diagnose(cfg, tmp.path.string()) == kExitDomain);

    const auto missing = RunConfig::parse_text(
        "family = uniform\nu_lo = -1\nu_hi = 1\ndelta = 0.5\nN = 101\n"
        "strategy_file = /nonexistent/path.csv\n");
    CHECK(cmd_diagnose(missing, tmp.path.string()) == kExitDomain);
}

TEST_CASE("cmd_diagnose runs the mu = 0 checks on a stored strategy", "[cli]") {
    TempDir tmp;
    const auto eq = RunConfig::parse_text(
        "family = uniform\nu_lo = -1\nu_hi = 1\ndelta = 0.5\nN = 101\nseed = 3\n");
    REQUIRE(cmd_equilibrium(eq, tmp.path.string()) == kExitOk);
    const auto cfg = RunConfig::parse_text(
        "family = uniform\nu_lo = -1\nu_hi = 1\ndelta = 0.5\nN = 101\n"
        "strategy_file = " +
        (tmp.path / "strategy.csv").string() + "\n");
    CHECK(cmd_diagnose(cfg, tmp.path.string()) == kExitOk);
    const auto diag = slurp(tmp.path / "diagnostics.csv");
    CHECK(diag.rfind("N,check,metric,value\n", 0) == 0);
    CHECK(diag.find("proportionality,max_rel_dev_bulk,") != std::string::npos);
    CHECK(diag.find("normality,ks,") != std::string::npos);
    CHECK(diag.find("mean_vs_sd,ratio,") != std::string::npos);
}
