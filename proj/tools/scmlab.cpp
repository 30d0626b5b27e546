// scmlab - battery dispatch control lab command line.
//
// Subcommands:
//   synth     emit a synthetic demand/PV profile CSV
//   validate  check a profile file against the format contract
//   compare   run the (battery size x controller) comparison grid
//   tune      hyperparameter search for the MOS controller

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <numeric>

#include "scmlab/experiment.hpp"
#include "scmlab/metrics.hpp"

using namespace scmlab;

namespace {

std::vector<BatterySize> parse_sizes(const std::vector<std::string>& items) {
    std::vector<BatterySize> out;
    for (const auto& s : items) {
        const auto dash = s.find('-');
        if (dash == std::string::npos)
            throw ConfigError("bad --size '" + s + "', expected kW-kWh like 2-4");
        out.push_back({std::stod(s.substr(0, dash)), std::stod(s.substr(dash + 1))});
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scmlab: residential PV + battery dispatch control lab"};
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "emit a synthetic profile CSV");
    SynthParams sp;
    std::string synth_out = "profile.csv";
    synth_cmd->add_option("--days", sp.days, "number of days");
    synth_cmd->add_option("--dt", sp.dt_hours, "interval length in hours");
    synth_cmd->add_option("--demand-base", sp.demand_base_kw, "demand base kW");
    synth_cmd->add_option("--pv-peak", sp.pv_peak_kw, "clear-sky PV peak kW");
    synth_cmd->add_option("--noise", sp.noise_std_kw, "gaussian noise std kW");
    synth_cmd->add_option("--seed", sp.seed, "RNG seed");
    synth_cmd->add_option("-o,--out", synth_out, "output CSV path");

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "check a profile file");
    std::string validate_path;
    ColumnMap columns;
    validate_cmd->add_option("file", validate_path, "profile CSV")->required();
    validate_cmd->add_option("--timestamp-col", columns.timestamp, "timestamp column name");
    validate_cmd->add_option("--demand-col", columns.demand, "demand column name");
    validate_cmd->add_option("--pv-col", columns.pv, "pv column name");

    // shared config options for compare/tune
    std::string config_path;
    std::string out_dir, profile_path, hp_file;
    std::vector<std::string> controllers, size_args;
    int workers = -1, horizon = -1, train_days = -1, budget = -1, grid_points = -1;
    std::string tuner_mode;
    bool strict = false, test_only = false;

    auto add_shared = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "experiment config JSON");
        cmd->add_option("--out", out_dir, "output directory (overrides config)");
        cmd->add_option("--profile", profile_path, "profile CSV (overrides config)");
        cmd->add_option("--controller", controllers, "controller list (overrides config)");
        cmd->add_option("--size", size_args, "battery size kW-kWh, repeatable (overrides config)");
        cmd->add_option("--workers", workers, "worker threads (overrides config)");
    };

    auto* compare_cmd = app.add_subcommand("compare", "run the comparison grid");
    add_shared(compare_cmd);
    compare_cmd->add_option("--horizon", horizon, "rolling-QP horizon steps");
    compare_cmd->add_option("--hyperparams", hp_file, "per-size MOS hyperparams JSON");
    compare_cmd->add_flag("--strict", strict, "exit 2 on partial cell failures");
    compare_cmd->add_flag("--test-only", test_only, "evaluate on the post-train split only");

    auto* tune_cmd = app.add_subcommand("tune", "tune MOS hyperparameters");
    add_shared(tune_cmd);
    tune_cmd->add_option("--train-days", train_days, "training split length in days");
    tune_cmd->add_option("--budget", budget, "candidate evaluations");
    tune_cmd->add_option("--grid-points", grid_points, "grid points per dimension");
    tune_cmd->add_option("--mode", tuner_mode, "low_discrepancy or grid");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth_cmd) {
            save_profile(synth_profile(sp), synth_out);
            std::cout << "wrote " << synth_out << "\n";
            return 0;
        }
        if (*validate_cmd) {
            const auto p = load_profile(validate_path, columns);
            std::printf("ok: %zu intervals, dt=%g h, demand mean %.3f kW, pv mean %.3f kW\n",
                        p.size(), p.dt_hours,
                        std::accumulate(p.demand_kw.begin(), p.demand_kw.end(), 0.0) /
                            static_cast<double>(p.size()),
                        std::accumulate(p.pv_kw.begin(), p.pv_kw.end(), 0.0) /
                            static_cast<double>(p.size()));
            return 0;
        }

        ExperimentConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!profile_path.empty()) cfg.profile_path = profile_path;
        if (!controllers.empty()) cfg.controllers = controllers;
        if (!size_args.empty()) cfg.sizes = parse_sizes(size_args);
        if (workers >= 0) cfg.workers = workers;
        if (horizon > 0) cfg.horizon_steps = horizon;
        if (!hp_file.empty()) cfg.hyperparams_file = hp_file;
        if (strict) cfg.strict = true;
        if (test_only) cfg.test_only = true;
        if (train_days > 0) cfg.train_days = train_days;
        if (budget > 0) cfg.tuner.budget = budget;
        if (grid_points > 0) cfg.tuner.grid_points = grid_points;
        if (!tuner_mode.empty()) {
            if (tuner_mode == "grid") cfg.tuner.mode = TunerConfig::Mode::grid;
            else if (tuner_mode == "low_discrepancy")
                cfg.tuner.mode = TunerConfig::Mode::low_discrepancy;
            else throw ConfigError("unknown tuner mode '" + tuner_mode + "'");
        }

        if (*compare_cmd) {
            const int rc = run_compare(cfg);
            std::cout << "results in " << cfg.out_dir << "\n";
            return rc;
        }
        const int rc = run_tune(cfg);
        std::cout << "hyperparams in " << cfg.out_dir << "\n";
        return rc;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
