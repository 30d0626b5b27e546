// End-to-end acceptance checks, one pass/fail line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "scmlab/experiment.hpp"
#include "scmlab/metrics.hpp"
#include "scmlab/qp.hpp"
#include "scmlab/tuner.hpp"

using namespace scmlab;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int idx, const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] %2d %-28s %s\n", ok ? "PASS" : "FAIL", idx, name.c_str(), detail.c_str());
    if (!ok) ++g_failures;
}

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

PowerProfile random_profile(std::size_t steps, std::uint64_t seed) {
    SynthParams sp;
    sp.days = static_cast<int>((steps + 47) / 48);
    sp.seed = seed;
    auto p = synth_profile(sp);
    p.demand_kw.resize(steps);
    p.pv_kw.resize(steps);
    return p;
}

double trace_l2(const DispatchTrace& tr) {
    double s = 0.0;
    for (double g : tr.p_g_kw) s += g * g;
    return s;
}

// ---- criterion 1: rule-based controller == constant-step projected gradient ----
void check_equivalence() {
    const auto t0 = clock_type::now();
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<BatterySpec> specs;
    for (int i = 0; i < 5; ++i) {
        BatterySpec s;
        s.p_max_kw = 1.0 + 4.0 * u01(rng);
        s.p_min_kw = -(1.0 + 4.0 * u01(rng));
        s.e_min_kwh = 0.0;
        s.e_max_kwh = 2.0 + 10.0 * u01(rng);
        s.eta = 1.0;
        specs.push_back(s);
    }
    double max_dev = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto profile = random_profile(1000, seed);
        for (const auto& spec : specs) {
            const auto a = simulate(profile, spec, OccamPolicy{});
            const auto b = simulate(profile, spec, GreedyPolicy{AlphaSchedule::constant, 0.5});
            for (std::size_t t = 0; t < a.size(); ++t)
                max_dev = std::max(max_dev, std::abs(a.p_b_kw[t] - b.p_b_kw[t]));
        }
    }
    const double dt = seconds_since(t0);
    char buf[128];
    std::snprintf(buf, sizeof buf, "max |dp_b| = %.2e over 100 runs, %.2f s", max_dev, dt);
    report(1, "greedy-equivalence", max_dev <= 1e-9 && dt < 2.0, buf);
}

// ---- criterion 2: clairvoyant QP dominates all controllers and random dispatch ----
void check_qp_dominance() {
    const BatterySpec spec{-2.0, 2.0, 0.0, 4.0, 1.0};
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    bool ok = true;
    double worst_margin = 0.0;
    for (std::uint64_t inst = 1; inst <= 10; ++inst) {
        const auto profile = random_profile(48, 300 + inst);
        HorizonProblem hp;
        hp.dt_hours = profile.dt_hours;
        hp.spec = spec;
        hp.e0_kwh = 0.5 * spec.e_max_kwh;
        for (std::size_t t = 0; t < 48; ++t)
            hp.net_base_kw.push_back(profile.demand_kw[t] - profile.pv_kw[t]);
        const auto sol = solve_horizon(hp);
        if (!sol.converged) {
            ok = false;
            continue;
        }
        auto dominated = [&](double cost) {
            worst_margin = std::max(worst_margin, sol.objective_value - cost);
            if (sol.objective_value > cost * (1.0 + 1e-6) + 1e-9) ok = false;
        };
        dominated(trace_l2(simulate(profile, spec, OccamPolicy{})));
        dominated(trace_l2(simulate(profile, spec, MosPolicy{{0.1, 1.0, 0.2}})));
        for (int r = 0; r < 1000; ++r) {
            double e = hp.e0_kwh, cost = 0.0;
            for (std::size_t t = 0; t < 48; ++t) {
                const auto set = feasible_set(e, hp.dt_hours, spec);
                const double p = set.lo_kw + (set.hi_kw - set.lo_kw) * u01(rng);
                e = step_soc(e, p, hp.dt_hours, spec);
                cost += (hp.net_base_kw[t] + p) * (hp.net_base_kw[t] + p);
            }
            dominated(cost);
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "worst margin %.2e over 10 instances", worst_margin);
    report(2, "clairvoyant-dominance", ok, buf);
}

// ---- criterion 3: small horizons vs exhaustive 0.05 kW grid enumeration ----
double grid_enumeration_optimum(const HorizonProblem& hp, double grid_kw) {
    const auto& b = hp.net_base_kw;
    const int actions =
        static_cast<int>(std::floor((hp.spec.p_max_kw - hp.spec.p_min_kw) / grid_kw + 1e-9)) + 1;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dp{0.0};
    for (std::size_t t = 0; t < b.size(); ++t) {
        std::vector<double> next(dp.size() + static_cast<std::size_t>(actions) - 1, inf);
        for (std::size_t s = 0; s < dp.size(); ++s) {
            if (dp[s] == inf) continue;
            for (int j = 0; j < actions; ++j) {
                const double p = hp.spec.p_min_kw + grid_kw * j;
                const double e =
                    hp.e0_kwh + hp.dt_hours * (static_cast<double>(t + 1) * hp.spec.p_min_kw +
                                               grid_kw * static_cast<double>(s + static_cast<std::size_t>(j)));
                if (e < hp.spec.e_min_kwh - 1e-9 || e > hp.spec.e_max_kwh + 1e-9) continue;
                const double cost = dp[s] + (b[t] + p) * (b[t] + p);
                auto& slot = next[s + static_cast<std::size_t>(j)];
                if (cost < slot) slot = cost;
            }
        }
        dp = std::move(next);
    }
    double best = inf;
    for (double v : dp) best = std::min(best, v);
    return best;
}

void check_small_instance_oracle() {
    const auto t0 = clock_type::now();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<int> hdist(2, 8);
    std::uniform_int_distribution<int> pdist(10, 30);
    std::uniform_int_distribution<int> edist(40, 240);
    bool ok = true;
    double worst_rel = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        HorizonProblem hp;
        hp.spec.p_max_kw = 0.05 * pdist(rng);
        hp.spec.p_min_kw = -0.05 * pdist(rng);
        hp.spec.e_min_kwh = 0.0;
        hp.spec.e_max_kwh = 0.025 * edist(rng);
        hp.spec.eta = 1.0;
        hp.dt_hours = 0.5;
        hp.e0_kwh = 0.025 * std::uniform_int_distribution<int>(
                                0, static_cast<int>(hp.spec.e_max_kwh / 0.025))(rng);
        const int h = hdist(rng);
        const double bias = (inst % 2 == 0) ? 3.0 : -3.0;
        for (int t = 0; t < h; ++t) hp.net_base_kw.push_back(bias + (-1.0 + 2.0 * u01(rng)));

        const auto sol = solve_horizon(hp);
        const double oracle = grid_enumeration_optimum(hp, 0.05);
        if (!sol.converged) ok = false;
        const double rel = std::abs(sol.objective_value - oracle) / std::max(oracle, 1e-12);
        worst_rel = std::max(worst_rel, rel);
        if (rel > 0.02) ok = false;
    }
    const double dt = seconds_since(t0);
    char buf[96];
    std::snprintf(buf, sizeof buf, "worst relative gap %.4f%%, %.2f s", 100.0 * worst_rel, dt);
    report(3, "small-instance-oracle", ok && dt < 30.0, buf);
}

// ---- criterion 4: analytic momentum gradient vs central finite differences ----
void check_gradient() {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> ux(-3.0, 3.0);
    std::uniform_real_distribution<double> uc(-2.0, 2.0);
    std::uniform_real_distribution<double> um(0.0, 5.0);
    int checked = 0;
    double worst = 0.0;
    while (checked < 10000) {
        const double x = ux(rng);
        if (std::abs(x) <= 1e-6) continue;
        const double c = uc(rng);
        const double mu = um(rng);
        const double h = std::min(1e-4, std::abs(x) / 2.0);
        auto f = [&](double v) { return (c + v) * (c + v) + mu * std::exp(-std::abs(v)); };
        const double fd = (f(x + h) - f(x - h)) / (2.0 * h);
        const double g = mos_gradient(c + x, x, mu);
        worst = std::max(worst, std::abs(g - fd) / std::max(1.0, std::abs(g)));
        ++checked;
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "worst relative error %.2e at 10^4 points", worst);
    report(4, "momentum-gradient", worst <= 1e-5, buf);
}

// ---- criterion 5: feasibility fuzz + closed-loop bound checks ----
void check_feasibility() {
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    bool ok = true;
    for (int i = 0; i < 1000000; ++i) {
        BatterySpec spec;
        spec.p_max_kw = 0.5 + 6.0 * u01(rng);
        spec.p_min_kw = -(0.5 + 6.0 * u01(rng));
        spec.e_min_kwh = 2.0 * u01(rng);
        spec.e_max_kwh = spec.e_min_kwh + 0.5 + 10.0 * u01(rng);
        spec.eta = 0.5 + 0.5 * u01(rng);
        const double dt = 0.05 + u01(rng);
        const double e = spec.e_min_kwh + (spec.e_max_kwh - spec.e_min_kwh) * u01(rng);
        const auto set = feasible_set(e, dt, spec);
        const double p = set.lo_kw + (set.hi_kw - set.lo_kw) * u01(rng);
        const double e_next = step_soc(e, p, dt, spec);
        if (e_next < spec.e_min_kwh - 1e-9 || e_next > spec.e_max_kwh + 1e-9) ok = false;
    }
    const auto profile = random_profile(96, 606);
    const BatterySpec spec{-2.0, 2.0, 0.0, 4.0, 0.9};
    const std::vector<Policy> policies{OccamPolicy{}, GreedyPolicy{AlphaSchedule::inverse_sqrt, 0.5},
                                       MosPolicy{{0.15, 1.5, 0.3}}, RollingQpPolicy{48, {}}};
    for (const auto& pol : policies) {
        try {
            check_trace(simulate(profile, spec, pol), profile, spec);
        } catch (const std::exception&) {
            ok = false;
        }
    }
    report(5, "feasibility-fuzz", ok, "10^6 samples + 4 controller traces");
}

// ---- criterion 6: average regret shrinks with the horizon ----
void check_regret_trend() {
    const BatterySpec spec{-2.0, 2.0, 0.0, 40000.0, 1.0};  // energy never binds
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    auto avg_regret = [&](std::size_t steps, std::uint64_t seed) {
        std::mt19937_64 local(seed);
        PowerProfile p;
        p.dt_hours = 0.5;
        p.demand_kw.resize(steps);
        p.pv_kw.assign(steps, 0.0);
        for (auto& v : p.demand_kw) v = u(local);
        const auto tr = simulate(p, spec, GreedyPolicy{AlphaSchedule::inverse_sqrt, 0.5});
        return regret(tr, p, spec) / static_cast<double>(steps);
    };
    const double at_100 = avg_regret(100, 808);
    const double at_10000 = avg_regret(10000, 808);
    char buf[96];
    std::snprintf(buf, sizeof buf, "R_T/T: %.4f at T=100, %.4f at T=10000", at_100, at_10000);
    report(6, "regret-trend", at_10000 <= at_100, buf);
}

// ---- criterion 7: per-step controllers vs receding-horizon wall time ----
void check_runtime_ratio() {
    SynthParams sp;
    sp.days = 240;  // 8 months at 30-minute resolution
    sp.seed = 909;
    const auto profile = synth_profile(sp);
    const BatterySpec spec{-2.0, 2.0, 0.0, 4.0, 1.0};
    auto timed = [&](const Policy& pol) {
        const auto t0 = clock_type::now();
        const auto tr = simulate(profile, spec, pol);
        const double dt = seconds_since(t0);
        return std::pair{dt, trace_l2(tr)};
    };
    const auto [t_occam, l2_occam] = timed(OccamPolicy{});
    const auto [t_mos, l2_mos] = timed(MosPolicy{{0.1, 1.0, 0.2}});
    const auto [t_qp, l2_qp] = timed(RollingQpPolicy{48, {}});
    (void)l2_occam;
    (void)l2_mos;
    (void)l2_qp;
    const bool ok = t_occam <= t_qp / 100.0 && t_mos <= t_qp / 100.0;
    char buf[128];
    std::snprintf(buf, sizeof buf, "occam %.4fs, mos %.4fs, rolling qp %.2fs", t_occam, t_mos, t_qp);
    report(7, "runtime-ratio", ok, buf);
}

// ---- criterion 8: tuned momentum controller vs the rule-based baseline ----
void check_directional() {
    SynthParams sp;
    sp.days = 60;
    sp.pv_peak_kw = 6.0;  // PV-heavy: net demand skews negative
    sp.seed = 1001;
    const auto full = synth_profile(sp);
    const auto train = split_profile(full, 30, true);
    const auto test = split_profile(full, 30, false);
    const BatterySpec spec{-2.0, 2.0, 0.0, 4.0, 1.0};

    TunerConfig tc;
    tc.budget = 64;
    tc.seed = 1;
    const auto tuned = tune(train, spec, tc);

    const auto m_mos = compute_metrics(simulate(test, spec, MosPolicy{tuned.best}), spec.e_max_kwh);
    const auto m_occ = compute_metrics(simulate(test, spec, OccamPolicy{}), spec.e_max_kwh);
    const bool ok = m_mos.l2_sq < m_occ.l2_sq && m_mos.cycles >= m_occ.cycles;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "(informational) l2_sq %.1f vs %.1f, cycles %.2f vs %.2f on test split",
                  m_mos.l2_sq, m_occ.l2_sq, m_mos.cycles, m_occ.cycles);
    report(8, "directional-improvement", ok, buf);
}

// ---- criterion 9: grid-mode tuning equals the exhaustive argmin ----
void check_tuner_oracle() {
    SynthParams sp;
    sp.days = 3;
    sp.seed = 77;
    const auto profile = synth_profile(sp);
    const BatterySpec spec{-2.0, 2.0, 0.0, 4.0, 1.0};
    TunerConfig tc;
    tc.mode = TunerConfig::Mode::grid;
    tc.grid_points = 3;
    const auto r = tune(profile, spec, tc);

    auto grid_value = [](const std::array<double, 2>& range, int i) {
        return range[0] + (range[1] - range[0]) * static_cast<double>(i) / 2.0;
    };
    HyperParams best{};
    double best_obj = std::numeric_limits<double>::infinity();
    for (int ia = 0; ia < 3; ++ia)
        for (int im = 0; im < 3; ++im)
            for (int ik = 0; ik < 3; ++ik) {
                const HyperParams hp{grid_value(tc.alpha_range, ia), grid_value(tc.mu_range, im),
                                     grid_value(tc.kappa_range, ik)};
                const auto tr = simulate(profile, spec, MosPolicy{hp});
                const double obj =
                    tuning_objective(compute_metrics(tr, spec.e_max_kwh), tc.gamma);
                if (obj < best_obj) {
                    best_obj = obj;
                    best = hp;
                }
            }
    const bool ok = r.best.alpha == best.alpha && r.best.mu == best.mu &&
                    r.best.kappa == best.kappa && r.objective == best_obj;
    char buf[96];
    std::snprintf(buf, sizeof buf, "argmin (%.3f, %.3f, %.3f)", best.alpha, best.mu, best.kappa);
    report(9, "tuner-grid-oracle", ok, buf);
}

// ---- criterion 10: byte-identical outputs for identical config + seeds ----
std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void check_determinism() {
    const auto base = fs::temp_directory_path() /
                      ("scmlab_accept_" + std::to_string(::getpid()));
    fs::remove_all(base);
    ExperimentConfig cfg;
    cfg.synth.days = 2;
    cfg.synth.seed = 3;
    cfg.controllers = {"occam", "mos", "rolling_qp"};
    cfg.sizes = {{2.0, 4.0}};
    cfg.workers = 3;

    cfg.out_dir = (base / "a").string();
    const int rc_a = run_compare(cfg);
    cfg.out_dir = (base / "b").string();
    const int rc_b = run_compare(cfg);

    bool ok = rc_a == 0 && rc_b == 0;
    for (const char* name :
         {"metrics_2-4_occam.json", "metrics_2-4_mos.json", "metrics_2-4_rolling_qp.json"}) {
        const auto a = slurp(base / "a" / name);
        if (a.empty() || a != slurp(base / "b" / name)) ok = false;
    }
    fs::remove_all(base);
    report(10, "determinism", ok, "metrics JSON byte-identical across two runs");
}

}  // namespace

int main() {
    check_equivalence();
    check_qp_dominance();
    check_small_instance_oracle();
    check_gradient();
    check_feasibility();
    check_regret_trend();
    check_runtime_ratio();
    check_directional();
    check_tuner_oracle();
    check_determinism();
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all 10 criteria passed\n");
    return 0;
}
