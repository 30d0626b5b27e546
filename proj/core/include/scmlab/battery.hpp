#pragma once

#include <stdexcept>
#include <string>

namespace scmlab {

/// SoC drift tolerance for invariant checks (double accumulation over ~1e4 steps).
inline constexpr double kSocTolKwh = 1e-9;

/// Power and energy ratings of the battery plus round-trip efficiency.
/// Sign convention: p > 0 charges, p < 0 discharges.
struct BatterySpec {
    double p_min_kw = -2.0;  // max discharge power (<= 0)
    double p_max_kw = 2.0;   // max charge power (>= 0)
    double e_min_kwh = 0.0;
    double e_max_kwh = 4.0;
    double eta = 1.0;  // in (0, 1]

    void validate() const {
        if (p_min_kw > 0.0 || p_max_kw < 0.0)
            throw std::invalid_argument("BatterySpec: need p_min_kw <= 0 <= p_max_kw");
        if (e_min_kwh < 0.0 || e_min_kwh > e_max_kwh)
            throw std::invalid_argument("BatterySpec: need 0 <= e_min_kwh <= e_max_kwh");
        if (!(eta > 0.0) || eta > 1.0)
            throw std::invalid_argument("BatterySpec: need eta in (0, 1]");
    }
};

/// Closed interval of admissible battery powers for one interval.
struct FeasibleInterval {
    double lo_kw = 0.0;
    double hi_kw = 0.0;

    bool contains(double p, double tol = 0.0) const {
        return p >= lo_kw - tol && p <= hi_kw + tol;
    }
};

/// One-interval SoC update. Charging stores eta*p*dt, discharging drains p*dt/eta.
inline double step_soc(double e_prev_kwh, double p_b_kw, double dt_hours, const BatterySpec& spec) {
    if (p_b_kw >= 0.0) return e_prev_kwh + spec.eta * p_b_kw * dt_hours;
    return e_prev_kwh + p_b_kw * dt_hours / spec.eta;
}

/// Powers that respect both the ratings and the SoC window after one step.
/// Always contains 0 when e_prev is inside the window.
FeasibleInterval feasible_set(double e_prev_kwh, double dt_hours, const BatterySpec& spec);

/// Euclidean projection onto the interval (plain clamp).
inline double project(double y, const FeasibleInterval& s) {
    if (y <= s.lo_kw) return s.lo_kw;
    if (y >= s.hi_kw) return s.hi_kw;
    return y;
}

/// Restrict the interval so the next action cannot flip sign relative to the
/// previous decision; prev == 0 leaves the set unchanged.
FeasibleInterval sign_restricted_set(const FeasibleInterval& s, double p_b_prev_kw);

}  // namespace scmlab
