#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "scmlab/battery.hpp"
#include "scmlab/qp.hpp"
#include "scmlab/timeseries.hpp"

namespace scmlab {

/// MOS tunables: step size, momentum weight, daily-seasonality regularizer.
struct HyperParams {
    double alpha = 0.1;
    double mu = 1.0;
    double kappa = 0.2;

    void validate() const {
        if (!(alpha > 0.0)) throw std::invalid_argument("HyperParams: alpha must be > 0");
        if (mu < 0.0) throw std::invalid_argument("HyperParams: mu must be >= 0");
        if (kappa < 0.0 || kappa >= 1.0)
            throw std::invalid_argument("HyperParams: kappa must be in [0, 1)");
    }
};

/// Closed-loop result of one controller run.
struct DispatchTrace {
    std::vector<double> p_b_kw;
    std::vector<double> p_g_kw;
    std::vector<double> e_kwh;
    double dt_hours = 0.5;

    std::size_t size() const { return p_b_kw.size(); }
};

/// Thrown when the rolling-horizon solver fails; the run is marked failed
/// rather than silently substituted.
struct SolverFailure : std::runtime_error {
    int interval;
    explicit SolverFailure(int t)
        : std::runtime_error("horizon solve did not converge at interval " + std::to_string(t)),
          interval(t) {}
};

// ---- single-step policies ----

/// Rule-based step: absorb the latest observed PV surplus (or cover the
/// deficit), limited by ratings and the SoC window.
std::pair<double, double> occam_step(double p_d_prev_kw, double p_pv_prev_kw, double e_prev_kwh,
                                     double dt_hours, const BatterySpec& spec);

/// One online-gradient step projected onto the feasible interval.
double greedy_projection_step(double p_b_prev_kw, double p_g_prev_kw, double alpha_t,
                              const FeasibleInterval& set);

/// Gradient of the momentum-augmented cost at the previous decision:
/// 2*p_g + mu * d/dp exp(-|p_b|) (subgradient 0 at p_b = 0).
double mos_gradient(double p_g_prev_kw, double p_b_prev_kw, double mu);

/// Momentum step with sign-restricted projection and the one-day-lag
/// regularizer; during warm-up (no prior-day decision) the kappa term is
/// dropped and the (1-kappa) factor replaced by 1.
std::pair<double, double> mos_step(double p_b_prev_kw, double p_g_prev_kw,
                                   std::optional<double> p_b_yesterday_kw, double e_prev_kwh,
                                   const HyperParams& hp, double dt_hours, const BatterySpec& spec);

/// Previous-window persistence: forecast[k] = history[len - horizon + k].
std::vector<double> persistence_forecast(std::span<const double> history, int horizon_steps);

/// Solve the horizon problem from e_prev and return only the first decision.
double rolling_horizon_step(std::span<const double> net_forecast_kw, double e_prev_kwh,
                            HorizonSolver& solver, const SolveOptions& opts);

// ---- closed-loop driver ----

struct OccamPolicy {};

enum class AlphaSchedule { constant, inverse_sqrt };

struct GreedyPolicy {
    AlphaSchedule schedule = AlphaSchedule::constant;
    double alpha = 0.5;
};

struct MosPolicy {
    HyperParams hp;
};

struct RollingQpPolicy {
    int horizon_steps = 48;
    SolveOptions solve_opts;
};

using Policy = std::variant<OccamPolicy, GreedyPolicy, MosPolicy, RollingQpPolicy>;

/// Run a controller over the whole profile. Initial state: e = 0.5 * e_max
/// (clamped into the SoC window), p_b[0] = 0. Decisions at t use only
/// observations through t-1; grid power is computed from the realized values.
DispatchTrace simulate(const PowerProfile& profile, const BatterySpec& spec, const Policy& policy);

/// Verify all DispatchTrace invariants against the profile; throws on violation.
void check_trace(const DispatchTrace& trace, const PowerProfile& profile, const BatterySpec& spec);

}  // namespace scmlab
