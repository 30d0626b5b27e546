#include "scmlab/controllers.hpp"

#include <algorithm>
#include <cmath>

namespace scmlab {

std::pair<double, double> occam_step(double p_d_prev_kw, double p_pv_prev_kw, double e_prev_kwh,
                                     double dt_hours, const BatterySpec& spec) {
    const double residual = p_pv_prev_kw - p_d_prev_kw;
    const double p_b = project(residual, feasible_set(e_prev_kwh, dt_hours, spec));
    return {p_b, step_soc(e_prev_kwh, p_b, dt_hours, spec)};
}

double greedy_projection_step(double p_b_prev_kw, double p_g_prev_kw, double alpha_t,
                              const FeasibleInterval& set) {
    return project(p_b_prev_kw - alpha_t * 2.0 * p_g_prev_kw, set);
}

double mos_gradient(double p_g_prev_kw, double p_b_prev_kw, double mu) {
    double momentum = 0.0;
    if (p_b_prev_kw > 0.0) momentum = -std::exp(-p_b_prev_kw);
    else if (p_b_prev_kw < 0.0) momentum = std::exp(p_b_prev_kw);
    return 2.0 * p_g_prev_kw + mu * momentum;
}

std::pair<double, double> mos_step(double p_b_prev_kw, double p_g_prev_kw,
                                   std::optional<double> p_b_yesterday_kw, double e_prev_kwh,
                                   const HyperParams& hp, double dt_hours,
                                   const BatterySpec& spec) {
    const double grad = mos_gradient(p_g_prev_kw, p_b_prev_kw, hp.mu);
    double raw;
    if (p_b_yesterday_kw) {
        raw = (1.0 - hp.kappa) * p_b_prev_kw - hp.alpha * grad + hp.kappa * *p_b_yesterday_kw;
    } else {
        raw = p_b_prev_kw - hp.alpha * grad;
    }
    const auto set = sign_restricted_set(feasible_set(e_prev_kwh, dt_hours, spec), p_b_prev_kw);
    const double p_b = project(raw, set);
    return {p_b, step_soc(e_prev_kwh, p_b, dt_hours, spec)};
}

std::vector<double> persistence_forecast(std::span<const double> history, int horizon_steps) {
    if (horizon_steps < 1) throw std::invalid_argument("persistence_forecast: horizon must be >= 1");
    const auto h = static_cast<std::size_t>(horizon_steps);
    if (history.size() < h)
        throw std::invalid_argument("persistence_forecast: insufficient history (" +
                                    std::to_string(history.size()) + " < " + std::to_string(h) + ")");
    std::vector<double> out(h);
    for (std::size_t k = 0; k < h; ++k) out[k] = history[history.size() - h + k];
    return out;
}

double rolling_horizon_step(std::span<const double> net_forecast_kw, double e_prev_kwh,
                            HorizonSolver& solver, const SolveOptions& opts) {
    const auto sol = solver.solve(net_forecast_kw, e_prev_kwh, opts);
    if (!sol.converged) throw SolverFailure(-1);
    return sol.p_b_kw.front();
}

namespace {

class RollingDriver {
public:
    RollingDriver(const PowerProfile& profile, const BatterySpec& spec, const RollingQpPolicy& pol)
        : profile_(profile),
          spec_(spec),
          pol_(pol),
          solver_(pol.horizon_steps, profile.dt_hours, spec) {}

    double decide(int t, double e_prev) {
        const auto h = static_cast<std::size_t>(pol_.horizon_steps);
        std::vector<double> net(h);
        const auto tt = static_cast<std::size_t>(t);
        for (std::size_t k = 0; k < h; ++k) {
            // previous-window persistence; repeat the latest observation while
            // less than one full window of history exists
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(tt + k) -
                                       static_cast<std::ptrdiff_t>(h);
            const std::size_t idx = src >= 0 ? static_cast<std::size_t>(src) : tt - 1;
            net[k] = profile_.demand_kw[idx] - profile_.pv_kw[idx];
        }
        const auto sol = solver_.solve(net, e_prev, pol_.solve_opts);
        if (!sol.converged) throw SolverFailure(t);
        solver_.shift_warm_start();
        return sol.p_b_kw.front();
    }

private:
    const PowerProfile& profile_;
    const BatterySpec& spec_;
    RollingQpPolicy pol_;
    HorizonSolver solver_;
};

}  // namespace

DispatchTrace simulate(const PowerProfile& profile, const BatterySpec& spec, const Policy& policy) {
    profile.validate();
    spec.validate();
    const std::size_t n = profile.size();
    const int lag = profile.steps_per_day();

    DispatchTrace tr;
    tr.dt_hours = profile.dt_hours;
    tr.p_b_kw.resize(n);
    tr.p_g_kw.resize(n);
    tr.e_kwh.resize(n);

    double e = std::clamp(0.5 * spec.e_max_kwh, spec.e_min_kwh, spec.e_max_kwh);
    tr.p_b_kw[0] = 0.0;
    tr.e_kwh[0] = e;
    tr.p_g_kw[0] = profile.demand_kw[0] + tr.p_b_kw[0] - profile.pv_kw[0];

    std::optional<RollingDriver> rolling;
    if (const auto* rp = std::get_if<RollingQpPolicy>(&policy)) {
        rolling.emplace(profile, spec, *rp);
    }

    for (std::size_t t = 1; t < n; ++t) {
        double p_b = 0.0;
        if (std::holds_alternative<OccamPolicy>(policy)) {
            auto [p, e_new] = occam_step(profile.demand_kw[t - 1], profile.pv_kw[t - 1], e,
                                         profile.dt_hours, spec);
            p_b = p;
            e = e_new;
        } else if (const auto* gp = std::get_if<GreedyPolicy>(&policy)) {
            const double alpha = gp->schedule == AlphaSchedule::constant
                                     ? gp->alpha
                                     : 1.0 / std::sqrt(static_cast<double>(t));
            p_b = greedy_projection_step(tr.p_b_kw[t - 1], tr.p_g_kw[t - 1], alpha,
                                         feasible_set(e, profile.dt_hours, spec));
            e = step_soc(e, p_b, profile.dt_hours, spec);
        } else if (const auto* mp = std::get_if<MosPolicy>(&policy)) {
            std::optional<double> yesterday;
            if (static_cast<int>(t) >= lag) yesterday = tr.p_b_kw[t - static_cast<std::size_t>(lag)];
            auto [p, e_new] = mos_step(tr.p_b_kw[t - 1], tr.p_g_kw[t - 1], yesterday, e, mp->hp,
                                       profile.dt_hours, spec);
            p_b = p;
            e = e_new;
        } else {
            p_b = rolling->decide(static_cast<int>(t), e);
            e = step_soc(e, p_b, profile.dt_hours, spec);
        }
        tr.p_b_kw[t] = p_b;
        tr.e_kwh[t] = e;
        tr.p_g_kw[t] = profile.demand_kw[t] + p_b - profile.pv_kw[t];
    }
    return tr;
}

void check_trace(const DispatchTrace& tr, const PowerProfile& profile, const BatterySpec& spec) {
    if (tr.p_b_kw.size() != tr.p_g_kw.size() || tr.p_b_kw.size() != tr.e_kwh.size())
        throw std::invalid_argument("DispatchTrace: length mismatch");
    if (tr.size() != profile.size())
        throw std::invalid_argument("DispatchTrace: length differs from profile");
    for (std::size_t t = 0; t < tr.size(); ++t) {
        const auto at = " at interval " + std::to_string(t);
        if (tr.p_b_kw[t] < spec.p_min_kw - kSocTolKwh || tr.p_b_kw[t] > spec.p_max_kw + kSocTolKwh)
            throw std::invalid_argument("DispatchTrace: p_b outside ratings" + at);
        if (tr.e_kwh[t] < spec.e_min_kwh - kSocTolKwh || tr.e_kwh[t] > spec.e_max_kwh + kSocTolKwh)
            throw std::invalid_argument("DispatchTrace: SoC outside bounds" + at);
        if (tr.p_g_kw[t] != profile.demand_kw[t] + tr.p_b_kw[t] - profile.pv_kw[t])
            throw std::invalid_argument("DispatchTrace: grid balance violated" + at);
    }
}

}  // namespace scmlab
