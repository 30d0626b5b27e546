#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scmlab/controllers.hpp"
#include "scmlab/metrics.hpp"

namespace scmlab {

struct TunerConfig {
    std::array<double, 2> alpha_range{0.01, 1.0};
    std::array<double, 2> mu_range{0.0, 5.0};
    std::array<double, 2> kappa_range{0.0, 0.75};
    double gamma = 0.02;
    int budget = 64;
    std::uint64_t seed = 0;

    enum class Mode { low_discrepancy, grid };
    Mode mode = Mode::low_discrepancy;
    int grid_points = 4;  // per dimension, grid mode only

    void validate() const;
};

struct TunedCandidate {
    HyperParams hp;
    double objective = 0.0;  // l2_sq + gamma * l1 on the training profile
};

struct TuneResult {
    HyperParams best;
    double objective = 0.0;
    std::vector<TunedCandidate> evaluated;

    std::string to_json(std::uint64_t seed) const;
};

double tuning_objective(const MetricsReport& m, double gamma);

/// Evaluate candidate (alpha, mu, kappa) triples by closed-loop MOS simulation
/// on the training profile; deterministic for fixed seed/budget, ties broken
/// by the lexicographically smallest triple.
TuneResult tune(const PowerProfile& train_profile, const BatterySpec& spec, const TunerConfig& cfg);

/// Tuned values shipped as reference defaults for the standard kW-kWh sizes
/// (2-4 ... 6-36); nullopt for any other size.
std::optional<HyperParams> reference_hyperparams(double p_max_kw, double e_max_kwh);

}  // namespace scmlab
