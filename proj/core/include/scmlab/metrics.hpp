#pragma once

#include <span>
#include <string>

#include "scmlab/controllers.hpp"
#include "scmlab/timeseries.hpp"

namespace scmlab {

/// Scores for one dispatch trace. l2_sq and l1 are unscaled sums over
/// intervals; cycles is energy throughput over twice the usable capacity.
struct MetricsReport {
    double l2_sq = 0.0;            // sum p_g^2
    double l1 = 0.0;               // sum |p_g|
    double cycles = 0.0;           // equivalent full cycles
    double avg_daily_peak_kw = 0.0;
    double wall_time_s = 0.0;
    bool partial_day = false;  // daily peak computed over less than one full day

    /// JSON document with the field names above. Timing is volatile across
    /// runs, so callers needing byte-reproducible output exclude it.
    std::string to_json(bool include_timing = true) const;
};

MetricsReport compute_metrics(const DispatchTrace& trace, double e_max_kwh);

struct HindsightResult {
    double x_star_kw = 0.0;
    double cost = 0.0;
};

/// Best single fixed action in hindsight over the power box (SoC ignored):
/// clamp(-mean(net_base)) and its cost.
HindsightResult hindsight_fixed_optimum(std::span<const double> net_base_kw, double p_min_kw,
                                        double p_max_kw);

/// Cumulative cost minus the fixed-action comparator. May be negative: the
/// comparator ignores SoC dynamics and is an optimistic bound.
double regret(const DispatchTrace& trace, const PowerProfile& profile, const BatterySpec& spec);

}  // namespace scmlab
