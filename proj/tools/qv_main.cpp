// Command-line front end: config-driven batch commands over the quadratic
// voting laboratory. See README.md for the config keys and output schemas.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qv/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"qv - quadratic voting equilibrium laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "flat key = value config file")
            ->required();
        sub->add_option("-o,--out", out_dir,
                        "output directory (default: QV_OUT_DIR or cwd)");
    };

    CLI::App* axioms = app.add_subcommand("axioms", "verify payoff and distribution axioms");
    CLI::App* equilibrium = app.add_subcommand("equilibrium", "solve a symmetric equilibrium");
    CLI::App* alpha_w = app.add_subcommand("alpha-w", "solve the extremist optimization problem");
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo elections at one N");
    CLI::App* sweep = app.add_subcommand("sweep", "EI sweep over a list of N");
    CLI::App* diagnose = app.add_subcommand("diagnose", "asymptotic checks for a stored strategy");
    for (CLI::App* sub : {axioms, equilibrium, alpha_w, simulate, sweep, diagnose})
        add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        const qv::RunConfig cfg = qv::RunConfig::parse_file(config_path);
        if (axioms->parsed()) return qv::cmd_axioms(cfg, out_dir);
        if (equilibrium->parsed()) return qv::cmd_equilibrium(cfg, out_dir);
        if (alpha_w->parsed()) return qv::cmd_alpha_w(cfg, out_dir);
        if (simulate->parsed()) return qv::cmd_simulate(cfg, out_dir);
        if (sweep->parsed()) return qv::cmd_sweep(cfg, out_dir);
        if (diagnose->parsed()) return qv::cmd_diagnose(cfg, out_dir);
    } catch (const qv::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return qv::kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return qv::kExitDomain;
    }
    return qv::kExitUsage;
}
