#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scmlab/controllers.hpp"
#include "scmlab/tuner.hpp"

namespace scmlab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BatterySize {
    double p_kw = 2.0;
    double e_kwh = 4.0;

    std::string label() const;  // e.g. "2-4"
};

/// Declarative experiment description; loadable from JSON, individual fields
/// overridable by CLI flags.
struct ExperimentConfig {
    std::string profile_path;  // empty -> synthesize
    SynthParams synth;
    double eta = 1.0;
    std::vector<BatterySize> sizes{{2.0, 4.0}};
    std::vector<std::string> controllers{"occam", "mos"};
    GreedyPolicy greedy;
    HyperParams mos_hp;               // fallback when no per-size file is given
    std::string hyperparams_file;     // per-size output of run_tune
    int horizon_steps = 48;
    SolveOptions qp_opts;
    TunerConfig tuner;
    int train_days = 30;      // tuning split: first train_days days
    bool test_only = false;   // compare on the remainder after the train split
    std::string out_dir = "out";
    int workers = 0;          // 0 -> hardware concurrency
    bool strict = false;

    void validate() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

/// Grid run over (battery size x controller); writes per-cell trace CSV and
/// metrics JSON, a summary table, plot-ready long-format CSV, and wall times.
/// Failed rolling-QP cells are recorded as missing and the run continues.
/// Returns 0, or 2 when strict is set and some cell failed.
int run_compare(const ExperimentConfig& cfg);

/// Tune MOS per battery size on the training split; writes hyperparams JSON
/// consumable by run_compare plus per-size tuning reports.
int run_tune(const ExperimentConfig& cfg);

/// First `days` whole days of a profile (train split) or the remainder (test).
PowerProfile split_profile(const PowerProfile& p, int days, bool train);

/// Trace CSV helpers shared with the CLI validate path.
void save_trace(const DispatchTrace& trace, const PowerProfile& profile,
                const std::filesystem::path& path);
std::pair<DispatchTrace, PowerProfile> load_trace(const std::filesystem::path& path,
                                                  double dt_hours);

std::map<std::string, HyperParams> load_hyperparams_file(const std::filesystem::path& path);

}  // namespace scmlab
