#include "scmlab/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "scmlab/metrics.hpp"

namespace scmlab {
namespace {

using nlohmann::json;

std::string trim_number(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e15)
        return std::to_string(static_cast<long long>(v));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

BatterySpec make_spec(const BatterySize& size, double eta) {
    return BatterySpec{-size.p_kw, size.p_kw, 0.0, size.e_kwh, eta};
}

Policy make_policy(const std::string& name, const ExperimentConfig& cfg, const HyperParams& hp) {
    if (name == "occam") return OccamPolicy{};
    if (name == "greedy") return cfg.greedy;
    if (name == "mos") return MosPolicy{hp};
    if (name == "rolling_qp") return RollingQpPolicy{cfg.horizon_steps, cfg.qp_opts};
    throw ConfigError("unknown controller: " + name);
}

struct CellResult {
    std::string size_label;
    std::string controller;
    bool ok = false;
    std::string error;
    MetricsReport metrics;
    double regret_value = 0.0;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

}  // namespace

std::string BatterySize::label() const { return trim_number(p_kw) + "-" + trim_number(e_kwh); }

void ExperimentConfig::validate() const {
    if (controllers.empty()) throw ConfigError("config: at least one controller required");
    if (sizes.empty()) throw ConfigError("config: at least one battery size required");
    for (const auto& s : sizes)
        if (!(s.p_kw > 0.0) || !(s.e_kwh > 0.0))
            throw ConfigError("config: battery sizes must be positive");
    if (horizon_steps < 1) throw ConfigError("config: horizon_steps must be >= 1");
    if (!(eta > 0.0) || eta > 1.0) throw ConfigError("config: eta must be in (0, 1]");
    for (const auto& c : controllers)
        if (c != "occam" && c != "greedy" && c != "mos" && c != "rolling_qp")
            throw ConfigError("config: unknown controller '" + c + "'");
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }

    ExperimentConfig cfg;
    try {
        cfg.profile_path = j.value("profile", "");
        if (j.contains("synth")) {
            const auto& s = j["synth"];
            cfg.synth.days = s.value("days", cfg.synth.days);
            cfg.synth.dt_hours = s.value("dt_hours", cfg.synth.dt_hours);
            cfg.synth.demand_base_kw = s.value("demand_base_kw", cfg.synth.demand_base_kw);
            cfg.synth.pv_peak_kw = s.value("pv_peak_kw", cfg.synth.pv_peak_kw);
            cfg.synth.noise_std_kw = s.value("noise_std_kw", cfg.synth.noise_std_kw);
            cfg.synth.seed = s.value("seed", cfg.synth.seed);
        }
        cfg.eta = j.value("eta", cfg.eta);
        if (j.contains("sizes")) {
            cfg.sizes.clear();
            for (const auto& s : j["sizes"])
                cfg.sizes.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
        }
        if (j.contains("controllers"))
            cfg.controllers = j["controllers"].get<std::vector<std::string>>();
        if (j.contains("greedy")) {
            cfg.greedy.alpha = j["greedy"].value("alpha", cfg.greedy.alpha);
            const std::string sched = j["greedy"].value("schedule", "constant");
            if (sched == "constant") cfg.greedy.schedule = AlphaSchedule::constant;
            else if (sched == "inverse_sqrt") cfg.greedy.schedule = AlphaSchedule::inverse_sqrt;
            else throw ConfigError("config: unknown greedy schedule '" + sched + "'");
        }
        if (j.contains("mos")) {
            cfg.mos_hp.alpha = j["mos"].value("alpha", cfg.mos_hp.alpha);
            cfg.mos_hp.mu = j["mos"].value("mu", cfg.mos_hp.mu);
            cfg.mos_hp.kappa = j["mos"].value("kappa", cfg.mos_hp.kappa);
        }
        cfg.hyperparams_file = j.value("hyperparams_file", "");
        cfg.horizon_steps = j.value("horizon_steps", cfg.horizon_steps);
        if (j.contains("qp")) {
            cfg.qp_opts.tol = j["qp"].value("tol", cfg.qp_opts.tol);
            cfg.qp_opts.max_iter = j["qp"].value("max_iter", cfg.qp_opts.max_iter);
        }
        if (j.contains("tuner")) {
            const auto& t = j["tuner"];
            cfg.tuner.budget = t.value("budget", cfg.tuner.budget);
            cfg.tuner.seed = t.value("seed", cfg.tuner.seed);
            cfg.tuner.gamma = t.value("gamma", cfg.tuner.gamma);
            cfg.tuner.grid_points = t.value("grid_points", cfg.tuner.grid_points);
            const std::string mode = t.value("mode", "low_discrepancy");
            if (mode == "grid") cfg.tuner.mode = TunerConfig::Mode::grid;
            else if (mode == "low_discrepancy") cfg.tuner.mode = TunerConfig::Mode::low_discrepancy;
            else throw ConfigError("config: unknown tuner mode '" + mode + "'");
        }
        cfg.train_days = j.value("train_days", cfg.train_days);
        cfg.test_only = j.value("test_only", cfg.test_only);
        cfg.out_dir = j.value("out_dir", cfg.out_dir);
        cfg.workers = j.value("workers", cfg.workers);
        cfg.strict = j.value("strict", cfg.strict);
    } catch (const json::exception& e) {
        throw ConfigError("config field error in " + path.string() + ": " + e.what());
    }
    return cfg;
}

PowerProfile split_profile(const PowerProfile& p, int days, bool train) {
    p.validate();
    const auto cut = static_cast<std::size_t>(days) * static_cast<std::size_t>(p.steps_per_day());
    if (cut == 0 || cut >= p.size())
        throw std::invalid_argument("split_profile: split leaves an empty side");
    PowerProfile out;
    out.dt_hours = p.dt_hours;
    const auto step = static_cast<std::int64_t>(std::llround(p.dt_hours * 3600.0));
    if (train) {
        out.start_epoch = p.start_epoch;
        out.demand_kw.assign(p.demand_kw.begin(), p.demand_kw.begin() + static_cast<std::ptrdiff_t>(cut));
        out.pv_kw.assign(p.pv_kw.begin(), p.pv_kw.begin() + static_cast<std::ptrdiff_t>(cut));
    } else {
        out.start_epoch = p.start_epoch + static_cast<std::int64_t>(cut) * step;
        out.demand_kw.assign(p.demand_kw.begin() + static_cast<std::ptrdiff_t>(cut), p.demand_kw.end());
        out.pv_kw.assign(p.pv_kw.begin() + static_cast<std::ptrdiff_t>(cut), p.pv_kw.end());
    }
    return out;
}

void save_trace(const DispatchTrace& trace, const PowerProfile& profile,
                const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "t,p_d,p_pv,p_b,p_g,e\n";
    char buf[160];
    for (std::size_t t = 0; t < trace.size(); ++t) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", t,
                      profile.demand_kw[t], profile.pv_kw[t], trace.p_b_kw[t], trace.p_g_kw[t],
                      trace.e_kwh[t]);
        out << buf;
    }
}

std::pair<DispatchTrace, PowerProfile> load_trace(const std::filesystem::path& path,
                                                  double dt_hours) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);  // header
    DispatchTrace tr;
    tr.dt_hours = dt_hours;
    PowerProfile p;
    p.dt_hours = dt_hours;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double d, pv, pb, pg, e;
        std::size_t t;
        if (std::sscanf(line.c_str(), "%zu,%lg,%lg,%lg,%lg,%lg", &t, &d, &pv, &pb, &pg, &e) != 6)
            throw std::runtime_error("bad trace row in " + path.string() + ": " + line);
        p.demand_kw.push_back(d);
        p.pv_kw.push_back(pv);
        tr.p_b_kw.push_back(pb);
        tr.p_g_kw.push_back(pg);
        tr.e_kwh.push_back(e);
    }
    return {tr, p};
}

std::map<std::string, HyperParams> load_hyperparams_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open hyperparams file: " + path.string());
    json j;
    in >> j;
    std::map<std::string, HyperParams> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        out[it.key()] = {it.value().at("alpha").get<double>(), it.value().at("mu").get<double>(),
                         it.value().at("kappa").get<double>()};
    }
    return out;
}

namespace {

PowerProfile experiment_profile(const ExperimentConfig& cfg) {
    PowerProfile p = cfg.profile_path.empty() ? synth_profile(cfg.synth)
                                              : load_profile(cfg.profile_path);
    if (cfg.test_only) p = split_profile(p, cfg.train_days, /*train=*/false);
    return p;
}

}  // namespace

int run_compare(const ExperimentConfig& cfg) {
    cfg.validate();
    const PowerProfile profile = experiment_profile(cfg);
    std::filesystem::create_directories(cfg.out_dir);

    std::map<std::string, HyperParams> per_size_hp;
    if (!cfg.hyperparams_file.empty()) per_size_hp = load_hyperparams_file(cfg.hyperparams_file);

    struct Cell {
        BatterySize size;
        std::string controller;
    };
    std::vector<Cell> cells;
    for (const auto& size : cfg.sizes)
        for (const auto& ctrl : cfg.controllers) cells.push_back({size, ctrl});

    std::vector<CellResult> results(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            const auto& cell = cells[i];
            auto& res = results[i];
            res.size_label = cell.size.label();
            res.controller = cell.controller;
            try {
                const BatterySpec spec = make_spec(cell.size, cfg.eta);
                HyperParams hp = cfg.mos_hp;
                if (auto it = per_size_hp.find(cell.size.label()); it != per_size_hp.end())
                    hp = it->second;
                const Policy policy = make_policy(cell.controller, cfg, hp);

                const auto t0 = std::chrono::steady_clock::now();
                const DispatchTrace trace = simulate(profile, spec, policy);
                const auto t1 = std::chrono::steady_clock::now();
                check_trace(trace, profile, spec);

                res.metrics = compute_metrics(trace, spec.e_max_kwh);
                res.metrics.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
                res.regret_value = regret(trace, profile, spec);
                const std::string stem = res.size_label + "_" + cell.controller;
                save_trace(trace, profile,
                           std::filesystem::path(cfg.out_dir) / ("trace_" + stem + ".csv"));
                write_text(std::filesystem::path(cfg.out_dir) / ("metrics_" + stem + ".json"),
                           res.metrics.to_json(/*include_timing=*/false) + "\n");
                res.ok = true;
            } catch (const std::exception& e) {
                res.error = e.what();
            }
        }
    };

    unsigned nworkers = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers)
                                        : std::max(1u, std::thread::hardware_concurrency());
    nworkers = std::min<unsigned>(nworkers, static_cast<unsigned>(cells.size()));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < nworkers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    // summary, long-format plot data and wall times, in deterministic cell order
    std::ostringstream summary, plotdata;
    summary << "size,controller,status,l2_sq,l1,cycles,avg_daily_peak_kw,regret,wall_time_s\n";
    plotdata << "size,controller,metric,value\n";
    nlohmann::ordered_json timings;
    bool any_failed = false;
    char buf[256];
    for (const auto& res : results) {
        if (res.ok) {
            std::snprintf(buf, sizeof buf, "%s,%s,ok,%.17g,%.17g,%.17g,%.17g,%.17g,%.6f\n",
                          res.size_label.c_str(), res.controller.c_str(), res.metrics.l2_sq,
                          res.metrics.l1, res.metrics.cycles, res.metrics.avg_daily_peak_kw,
                          res.regret_value, res.metrics.wall_time_s);
            summary << buf;
            const std::pair<const char*, double> panels[] = {
                {"l2_sq", res.metrics.l2_sq},
                {"l1", res.metrics.l1},
                {"cycles", res.metrics.cycles},
                {"avg_daily_peak_kw", res.metrics.avg_daily_peak_kw}};
            for (const auto& [metric, value] : panels) {
                std::snprintf(buf, sizeof buf, "%s,%s,%s,%.17g\n", res.size_label.c_str(),
                              res.controller.c_str(), metric, value);
                plotdata << buf;
            }
            timings[res.size_label + "_" + res.controller] = res.metrics.wall_time_s;
        } else {
            any_failed = true;
            summary << res.size_label << ',' << res.controller << ",missing,,,,,,\n";
        }
    }
    write_text(std::filesystem::path(cfg.out_dir) / "summary.csv", summary.str());
    write_text(std::filesystem::path(cfg.out_dir) / "plotdata.csv", plotdata.str());
    write_text(std::filesystem::path(cfg.out_dir) / "timings.json", timings.dump(2) + "\n");

    return (any_failed && cfg.strict) ? 2 : 0;
}

int run_tune(const ExperimentConfig& cfg) {
    cfg.validate();
    PowerProfile full = cfg.profile_path.empty() ? synth_profile(cfg.synth)
                                                 : load_profile(cfg.profile_path);
    PowerProfile train = full;
    if (static_cast<int>(full.size()) > cfg.train_days * full.steps_per_day())
        train = split_profile(full, cfg.train_days, /*train=*/true);
    std::filesystem::create_directories(cfg.out_dir);

    nlohmann::ordered_json combined;
    for (const auto& size : cfg.sizes) {
        const BatterySpec spec = make_spec(size, cfg.eta);
        const TuneResult result = tune(train, spec, cfg.tuner);
        write_text(std::filesystem::path(cfg.out_dir) / ("tune_" + size.label() + ".json"),
                   result.to_json(cfg.tuner.seed) + "\n");
        combined[size.label()] = {{"alpha", result.best.alpha},
                                  {"mu", result.best.mu},
                                  {"kappa", result.best.kappa}};
    }
    write_text(std::filesystem::path(cfg.out_dir) / "hyperparams.json", combined.dump(2) + "\n");
    return 0;
}

}  // namespace scmlab
