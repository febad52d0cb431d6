#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qv/config.hpp"
#include "qv/csv.hpp"
#include "qv/diagnostics.hpp"
#include "qv/distributions.hpp"
#include "qv/equilibrium.hpp"
#include "qv/extremist.hpp"
#include "qv/payoff.hpp"
#include "qv/simulation.hpp"
#include "qv/strategy.hpp"
#include "qv/vote_total.hpp"

namespace qv {

// Exit codes shared by every command: 0 success, 1 domain failure
// (non-convergence, failed axiom, missing inputs), 2 usage / config error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

namespace cli_detail {

inline FamilySpec family_from_config(const RunConfig& cfg) {
    FamilySpec spec;
    spec.family = family_from_string(cfg.get_string("family", "uniform"));
    spec.u_lo = cfg.get_real("u_lo", -1.0);
    spec.u_hi = cfg.get_real("u_hi", 1.0);
    spec.gamma = cfg.get_real("gamma", 0.0);
    spec.mean = cfg.get_real("mean", 0.0);
    spec.sd = cfg.get_real("sd", 1.0);
    spec.mix_eps = cfg.get_real("mix_eps", 0.01);
    return spec;
}

inline PayoffFunction payoff_from_config(const RunConfig& cfg) {
    const double delta = cfg.get_real("delta");
    if (!(delta > 0.0)) throw ConfigError("config: delta must be > 0");
    const long table = cfg.get_int("payoff_table_size", 1 << 14);
    return make_bump_payoff(delta, static_cast<int>(table));
}

inline SolverOptions solver_from_config(const RunConfig& cfg) {
    SolverOptions o;
    o.grid_size = static_cast<int>(cfg.get_int("grid_size", 801));
    o.damping = cfg.get_real("damping", 0.3);
    o.tol_fixed_point = cfg.get_real("tol_fixed_point", 0.0);
    o.tol_foc = cfg.get_real("tol_foc", 1e-6);
    o.max_iters = static_cast<int>(cfg.get_int("max_iters", 400));
    o.v_scan_points = static_cast<int>(cfg.get_int("v_scan_points", 2001));
    o.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
    o.grid.size_log2 = static_cast<int>(cfg.get_int("grid_size_log2", 16));
    if (o.grid_size < 3 || o.damping <= 0.0 || o.damping > 1.0 || o.max_iters < 1 ||
        o.v_scan_points < 3)
        throw ConfigError("config: invalid solver options");
    // a threads key is accepted to cap workers; commands run deterministically
    // regardless of its value
    const long threads = cfg.get_int("threads", 1);
    if (threads < 1) throw ConfigError("config: threads must be >= 1");
    return o;
}

inline std::filesystem::path prepare_out_dir(const RunConfig& cfg,
                                             const std::string& cli_out) {
    std::string dir = cli_out;
    if (dir.empty()) dir = cfg.get_string("out_dir", "");
    if (dir.empty()) {
        if (const char* env = std::getenv("QV_OUT_DIR")) dir = env;
    }
    if (dir.empty()) dir = ".";
    std::filesystem::path p(dir);
    std::filesystem::create_directories(p);
    return p;
}

inline void echo_config(const RunConfig& cfg, const std::filesystem::path& out) {
    std::ofstream f(out / "config_echo.cfg", std::ios::binary);
    f << cfg.raw_text();
}

inline void write_summary(const std::filesystem::path& path,
                          const std::vector<std::pair<std::string, std::string>>& kv) {
    CsvWriter w(path.string());
    w.header({"key", "value"});
    for (const auto& [k, v] : kv) w.row({k, v});
}

inline std::vector<std::pair<std::string, std::string>> report_summary(
    const EquilibriumReport& rep) {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("p_hat", fmt17(rep.p_hat));
    kv.emplace_back("foc_residual_sup", fmt17(rep.foc_residual_sup));
    kv.emplace_back("br_gap_sup", fmt17(rep.br_gap_sup));
    kv.emplace_back("iterations", std::to_string(rep.iterations));
    kv.emplace_back("converged", rep.converged ? "true" : "false");
    kv.emplace_back("s_mean", fmt17(rep.s_mean));
    kv.emplace_back("s_var", fmt17(rep.s_var));
    kv.emplace_back("has_discontinuity", rep.discontinuity ? "true" : "false");
    if (rep.discontinuity) {
        kv.emplace_back("u_star", fmt17(rep.discontinuity->u_star));
        kv.emplace_back("v_minus", fmt17(rep.discontinuity->v_minus));
        kv.emplace_back("v_plus", fmt17(rep.discontinuity->v_plus));
    }
    return kv;
}

}  // namespace cli_detail

/// `axioms`: verify the payoff axioms and the distribution invariants.
inline int cmd_axioms(const RunConfig& cfg, const std::string& cli_out) {
    const double delta = cfg.get_real("delta");
    if (!(delta > 0.0)) throw ConfigError("config: delta must be > 0");
    const long table = cfg.get_int("payoff_table_size", 1 << 14);
    const FamilySpec fspec = cli_detail::family_from_config(cfg);
    cfg.get_int("seed", 1);
    cfg.reject_unknown_keys();
    const auto out = cli_detail::prepare_out_dir(cfg, cli_out);
    cli_detail::echo_config(cfg, out);

    CsvWriter w((out / "axioms_report.csv").string());
    w.header({"check", "pass", "worst", "note"});
    bool ok = true;

    try {
        const PayoffFunction P = make_bump_payoff(delta, static_cast<int>(table));
        const AxiomReport rep = verify_axioms(P);
        for (const auto& c : rep.checks)
            w.row({c.name, c.pass ? "true" : "false", fmt17(c.worst), ""});
        w.row({"psi_inf", "true", fmt17(rep.psi_inf), "sup norm"});
        w.row({"psi_prime_inf", "true", fmt17(rep.psi_prime_inf), "sup norm"});
        ok = ok && rep.all_pass();
    } catch (const std::exception& e) {
        w.row({"payoff_construction", "false", "0", e.what()});
        ok = false;
    }

    try {
        const ValueDistribution F = make_distribution(fspec);
        w.row({"distribution_invariants", "true", "0", ""});
        const Moments m = F.moments();
        w.row({"distribution_mu", "true", fmt17(m.mu), ""});
        w.row({"distribution_sigma2", "true", fmt17(m.sigma2), ""});
    } catch (const std::exception& e) {
        w.row({"distribution_invariants", "false", "0", e.what()});
        ok = false;
    }
    return ok ? kExitOk : kExitDomain;
}

/// `equilibrium`: solve and emit strategy.csv + equilibrium_summary.csv.
inline int cmd_equilibrium(const RunConfig& cfg, const std::string& cli_out) {
    const FamilySpec fspec = cli_detail::family_from_config(cfg);
    const PayoffFunction P = cli_detail::payoff_from_config(cfg);
    const SolverOptions opts = cli_detail::solver_from_config(cfg);
    const long N = cfg.get_int("N");
    cfg.reject_unknown_keys();
    const auto out = cli_detail::prepare_out_dir(cfg, cli_out);
    cli_detail::echo_config(cfg, out);

    const ValueDistribution F = make_distribution(fspec);
    const EquilibriumReport rep = solve_equilibrium(F, P, N, opts);

    {
        std::ofstream f(out / "strategy.csv", std::ios::binary);
        write_strategy_csv(f, rep.strategy);
    }
    auto kv = cli_detail::report_summary(rep);
    kv.emplace_back("N", std::to_string(N));
    cli_detail::write_summary(out / "equilibrium_summary.csv", kv);
    return rep.converged ? kExitOk : kExitDomain;
}

/// `alpha-w`: solve the extremist optimization problem, emit the summary and
/// the h(alpha) profile.
inline int cmd_alpha_w(const RunConfig& cfg, const std::string& cli_out) {
    const FamilySpec fspec = cli_detail::family_from_config(cfg);
    const PayoffFunction P = cli_detail::payoff_from_config(cfg);
    const long N = cfg.get_int("N", 500);
    const bool drop_mu = cfg.get_bool("zeta_drop_mu", false);
    const long profile_points = cfg.get_int("alpha_profile_points", 500);
    cfg.get_int("seed", 1);
    cfg.reject_unknown_keys();
    const auto out = cli_detail::prepare_out_dir(cfg, cli_out);
    cli_detail::echo_config(cfg, out);

    const ValueDistribution F = make_distribution(fspec);
    ExtremistSolution sol = solve_alpha_w(P, F.u_lo());

    {
        CsvWriter w((out / "h_profile.csv").string());
        w.header({"alpha", "h"});
        const double a0 = P.delta, a1 = P.delta + std::sqrt(2.0 * std::abs(F.u_lo()));
        for (long i = 0; i <= profile_points; ++i) {
            const double a = a0 + (a1 - a0) * i / profile_points;
            w.row({fmt17(a), fmt17(extremist_h_max(a, P, F.u_lo(), nullptr))});
        }
    }

    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("exists", sol.exists ? "true" : "false");
    kv.emplace_back("alpha", fmt17(sol.alpha));
    kv.emplace_back("w", fmt17(sol.w));
    const Moments m = F.moments();
    if (sol.exists && m.mu > 0.0) {
        const ExtremistCutoff cut = extremist_cutoff(sol, F, P, N, m.mu, !drop_mu);
        sol.zeta = cut.zeta;
        kv.emplace_back("zeta", fmt17(cut.zeta));
        kv.emplace_back("u_star", fmt17(cut.u_star));
        kv.emplace_back("N", std::to_string(N));
    } else {
        kv.emplace_back("zeta", "nan");
        kv.emplace_back("u_star", "nan");
        kv.emplace_back("N", std::to_string(N));
    }
    cli_detail::write_summary(out / "alpha_w_summary.csv", kv);
    return kExitOk;
}

namespace cli_detail {

inline const std::vector<std::string> kSimulateColumns = {
    "N", "EI", "std_err", "extremist_rate", "V_mean", "V_var"};

inline void write_sim_row(CsvWriter& w, long N, const EIEstimate& e) {
    w.row({std::to_string(N), fmt17(e.ei), fmt17(e.std_err), fmt17(e.extremist_rate),
           fmt17(e.v_mean), fmt17(e.v_var)});
}

inline VoteStrategy load_strategy(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("missing strategy file: " + path.string());
    return read_strategy_csv(f);
}

}  // namespace cli_detail

/// `simulate`: Monte Carlo EI at one N, strategy from file or solved here.
inline int cmd_simulate(const RunConfig& cfg, const std::string& cli_out) {
    const FamilySpec fspec = cli_detail::family_from_config(cfg);
    const PayoffFunction P = cli_detail::payoff_from_config(cfg);
    const SolverOptions opts = cli_detail::solver_from_config(cfg);
    const long N = cfg.get_int("N");
    const long reps = cfg.get_int("reps", 10000);
    const bool solve = cfg.get_bool("solve", !cfg.has("strategy_file"));
    const std::string strategy_file = cfg.get_string("strategy_file", "");
    cfg.reject_unknown_keys();
    const auto out = cli_detail::prepare_out_dir(cfg, cli_out);
    cli_detail::echo_config(cfg, out);

    const ValueDistribution F = make_distribution(fspec);
    VoteStrategy strategy;
    bool converged = true;
    if (solve) {
        const EquilibriumReport rep = solve_equilibrium(F, P, N, opts);
        strategy = rep.strategy;
        converged = rep.converged;
        std::ofstream f(out / "strategy.csv", std::ios::binary);
        write_strategy_csv(f, strategy);
    } else {
        strategy = cli_detail::load_strategy(strategy_file);
    }
    const EIEstimate est = estimate_EI(strategy, F, P, N, reps, opts.seed);
    CsvWriter w((out / "simulate.csv").string());
    w.header(cli_detail::kSimulateColumns);
    cli_detail::write_sim_row(w, N, est);
    return converged ? kExitOk : kExitDomain;
}

/// `sweep`: one EI row per N with the equilibrium re-solved at each N.
inline int cmd_sweep(const RunConfig& cfg, const std::string& cli_out) {
    const FamilySpec fspec = cli_detail::family_from_config(cfg);
    const PayoffFunction P = cli_detail::payoff_from_config(cfg);
    const SolverOptions opts = cli_detail::solver_from_config(cfg);
    const std::vector<long> n_list = cfg.get_int_list("N_list");
    const long reps = cfg.get_int("reps", 100000);
    cfg.reject_unknown_keys();
    const auto out = cli_detail::prepare_out_dir(cfg, cli_out);
    cli_detail::echo_config(cfg, out);

    const ValueDistribution F = make_distribution(fspec);
    auto solver = [&](long N) {
        const EquilibriumReport rep = solve_equilibrium(F, P, N, opts);
        return SweepSolved{rep.strategy, rep.converged, rep.p_hat};
    };
    const auto rows = sweep_EI(solver, F, P, n_list, reps, opts.seed);

    CsvWriter w((out / "sweep.csv").string());
    std::vector<std::string> cols = cli_detail::kSimulateColumns;
    cols.push_back("converged");
    cols.push_back("p_hat");
    w.header(cols);
    bool all_ok = true;
    for (const auto& r : rows) {
        w.row({std::to_string(r.N), fmt17(r.estimate.ei), fmt17(r.estimate.std_err),
               fmt17(r.estimate.extremist_rate), fmt17(r.estimate.v_mean),
               fmt17(r.estimate.v_var), r.converged ? "true" : "false",
               fmt17(r.p_hat)});
        all_ok = all_ok && r.converged;
    }
    return all_ok ? kExitOk : kExitDomain;
}

/// `diagnose`: run the applicable asymptotic checks against a stored
/// strategy. Emits one row per check per N.
inline int cmd_diagnose(const RunConfig& cfg, const std::string& cli_out) {
    const FamilySpec fspec = cli_detail::family_from_config(cfg);
    const PayoffFunction P = cli_detail::payoff_from_config(cfg);
    const long N = cfg.get_int("N");
    const double eps = cfg.get_real("eps", 0.1);
    const std::string strategy_file = cfg.get_string("strategy_file", "");
    cfg.get_int("seed", 1);
    cfg.reject_unknown_keys();
    const auto out = cli_detail::prepare_out_dir(cfg, cli_out);
    cli_detail::echo_config(cfg, out);

    if (strategy_file.empty()) {
        std::cerr << "diagnose: missing strategy (set strategy_file)\n";
        return kExitDomain;
    }
    const ValueDistribution F = make_distribution(fspec);
    VoteStrategy strategy;
    try {
        strategy = cli_detail::load_strategy(strategy_file);
    } catch (const std::exception& e) {
        std::cerr << "diagnose: missing strategy: " << e.what() << "\n";
        return kExitDomain;
    }

    // reconstruct the report data the diagnostics consume
    GridSpec grid;
    grid.h_max = P.delta / 24.0;
    grid.span_min = 2.0 * P.delta + strategy.max_abs_vote() +
                    std::sqrt(2.0 * std::max(std::abs(F.u_lo()), F.u_hi()));
    const auto dist = vote_total_distribution(strategy, F, N - 1, grid);
    EquilibriumReport rep;
    rep.strategy = strategy;
    rep.p_hat = dist.expect_shifted(P.psi, 0.0);
    rep.s_mean = dist.mean;
    rep.s_var = dist.var;
    rep.converged = true;
    if (strategy.cutoff)
        rep.discontinuity = Discontinuity{strategy.cutoff->u_star,
                                          strategy.cutoff->v_extremist,
                                          evaluate(strategy, strategy.cutoff->u_star)};

    CsvWriter w((out / "diagnostics.csv").string());
    w.header({"N", "check", "metric", "value"});
    auto emit = [&](const std::string& check, const std::string& metric, double value) {
        w.row({std::to_string(N), check, metric, fmt17(value)});
    };

    const Moments m = F.moments();
    const auto foc = foc_residual(strategy, F, P, N, grid);
    emit("foc", "sup_residual_bulk", foc.sup_bulk);
    if (std::abs(m.mu) < 1e-9) {
        const auto prop = check_proportionality(rep, F, N);
        emit("proportionality", "max_rel_dev_bulk", prop.max_rel_dev_bulk);
        emit("proportionality", "max_rel_dev_bulk_eq4", prop.max_rel_dev_bulk_eq4);
        emit("proportionality", "p_n", prop.p_n);
        emit("proportionality", "p_hat_ratio", prop.p_hat_ratio);
        if (!strategy.cutoff) emit("normality", "ks", normality_check(rep, F, P, N));
        emit("mean_vs_sd", "ratio", mean_vs_sd_check(rep, F, P, N));
    } else if (m.mu > 0.0) {
        const ExtremistSolution sol = solve_alpha_w(P, F.u_lo());
        const auto conc = concentration_check(rep, sol, F, P, N, eps);
        emit("concentration", "outside_mass", conc.outside_mass);
        emit("concentration", "outside_mass_no_extremist",
             conc.outside_mass_no_extremist);
        emit("concentration", "extremist_prob", conc.extremist_prob);
        if (strategy.cutoff) {
            emit("discontinuity", "min_condition_residual",
                 discontinuity_condition_check(strategy, F, P, N, grid));
        }
    }
    return kExitOk;
}

}  // namespace qv
