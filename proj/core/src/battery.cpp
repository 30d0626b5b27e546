#include "scmlab/battery.hpp"

#include <algorithm>

namespace scmlab {

FeasibleInterval feasible_set(double e_prev_kwh, double dt_hours, const BatterySpec& spec) {
    // Guard against tolerance-level SoC drift so the interval stays nonempty.
    const double e = std::clamp(e_prev_kwh, spec.e_min_kwh, spec.e_max_kwh);
    const double lo = std::max(spec.p_min_kw, (spec.e_min_kwh - e) * spec.eta / dt_hours);
    const double hi = std::min(spec.p_max_kw, (spec.e_max_kwh - e) / (spec.eta * dt_hours));
    return {lo, hi};
}

FeasibleInterval sign_restricted_set(const FeasibleInterval& s, double p_b_prev_kw) {
    if (p_b_prev_kw < 0.0) return {s.lo_kw, std::min(s.hi_kw, 0.0)};
    if (p_b_prev_kw > 0.0) return {std::max(s.lo_kw, 0.0), s.hi_kw};
    return s;
}

}  // namespace scmlab
