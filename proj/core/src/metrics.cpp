#include "scmlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

namespace scmlab {

std::string MetricsReport::to_json(bool include_timing) const {
    nlohmann::ordered_json j;
    j["l2_sq"] = l2_sq;
    j["l1"] = l1;
    j["cycles"] = cycles;
    j["avg_daily_peak_kw"] = avg_daily_peak_kw;
    if (include_timing) j["wall_time_s"] = wall_time_s;
    if (partial_day) j["partial_day"] = true;
    return j.dump(2);
}

MetricsReport compute_metrics(const DispatchTrace& trace, double e_max_kwh) {
    if (trace.size() == 0) throw std::invalid_argument("compute_metrics: empty trace");
    MetricsReport r;
    double throughput_kwh = 0.0;
    for (std::size_t t = 0; t < trace.size(); ++t) {
        r.l2_sq += trace.p_g_kw[t] * trace.p_g_kw[t];
        r.l1 += std::abs(trace.p_g_kw[t]);
        throughput_kwh += std::abs(trace.p_b_kw[t]) * trace.dt_hours;
    }
    r.cycles = e_max_kwh > 0.0 ? throughput_kwh / (2.0 * e_max_kwh) : 0.0;

    const auto per_day = static_cast<std::size_t>(std::llround(24.0 / trace.dt_hours));
    std::size_t whole_days = trace.size() / per_day;
    if (whole_days == 0) {
        whole_days = 1;  // single partial day
        r.partial_day = true;
    }
    double peak_sum = 0.0;
    for (std::size_t d = 0; d < whole_days; ++d) {
        double peak = 0.0;
        const std::size_t end = std::min(trace.size(), (d + 1) * per_day);
        for (std::size_t t = d * per_day; t < end; ++t)
            peak = std::max(peak, std::abs(trace.p_g_kw[t]));
        peak_sum += peak;
    }
    r.avg_daily_peak_kw = peak_sum / static_cast<double>(whole_days);
    return r;
}

HindsightResult hindsight_fixed_optimum(std::span<const double> net_base_kw, double p_min_kw,
                                        double p_max_kw) {
    if (net_base_kw.empty()) throw std::invalid_argument("hindsight_fixed_optimum: empty sequence");
    double mean = 0.0;
    for (double b : net_base_kw) mean += b;
    mean /= static_cast<double>(net_base_kw.size());
    HindsightResult h;
    h.x_star_kw = std::clamp(-mean, p_min_kw, p_max_kw);
    for (double b : net_base_kw) {
        const double g = b + h.x_star_kw;
        h.cost += g * g;
    }
    return h;
}

double regret(const DispatchTrace& trace, const PowerProfile& profile, const BatterySpec& spec) {
    if (trace.size() != profile.size())
        throw std::invalid_argument("regret: trace/profile length mismatch");
    std::vector<double> net(profile.size());
    double cost = 0.0;
    for (std::size_t t = 0; t < profile.size(); ++t) {
        net[t] = profile.demand_kw[t] - profile.pv_kw[t];
        cost += trace.p_g_kw[t] * trace.p_g_kw[t];
    }
    return cost - hindsight_fixed_optimum(net, spec.p_min_kw, spec.p_max_kw).cost;
}

}  // namespace scmlab
