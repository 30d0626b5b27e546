#include "scmlab/tuner.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <tuple>

namespace scmlab {
namespace {

double halton(std::uint64_t index, unsigned base) {
    double f = 1.0, r = 0.0;
    for (std::uint64_t i = index; i > 0; i /= base) {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(i % base);
    }
    return r;
}

// seeded Cranley-Patterson rotation so different seeds explore shifted nets
double rotated(double v, std::uint64_t seed, unsigned dim) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (dim + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    const double shift = static_cast<double>((z ^ (z >> 31)) >> 11) * 0x1.0p-53;
    const double x = v + shift;
    return x - std::floor(x);
}

double lerp_range(const std::array<double, 2>& range, double u) {
    return range[0] + (range[1] - range[0]) * u;
}

bool lex_less(const HyperParams& a, const HyperParams& b) {
    return std::tie(a.alpha, a.mu, a.kappa) < std::tie(b.alpha, b.mu, b.kappa);
}

}  // namespace

void TunerConfig::validate() const {
    if (alpha_range[0] > alpha_range[1] || mu_range[0] > mu_range[1] ||
        kappa_range[0] > kappa_range[1])
        throw std::invalid_argument("TunerConfig: empty range");
    if (!(alpha_range[0] > 0.0)) throw std::invalid_argument("TunerConfig: alpha must be > 0");
    if (gamma < 0.0) throw std::invalid_argument("TunerConfig: gamma must be >= 0");
    if (budget < 1) throw std::invalid_argument("TunerConfig: budget must be >= 1");
    if (mode == Mode::grid && grid_points < 1)
        throw std::invalid_argument("TunerConfig: grid_points must be >= 1");
}

double tuning_objective(const MetricsReport& m, double gamma) { return m.l2_sq + gamma * m.l1; }

TuneResult tune(const PowerProfile& train_profile, const BatterySpec& spec,
                const TunerConfig& cfg) {
    cfg.validate();
    train_profile.validate();
    if (static_cast<int>(train_profile.size()) < 2 * train_profile.steps_per_day())
        throw std::invalid_argument("tune: training profile must cover at least 2 days");

    std::vector<HyperParams> candidates;
    if (cfg.mode == TunerConfig::Mode::grid) {
        const int g = cfg.grid_points;
        auto grid_value = [g](const std::array<double, 2>& range, int i) {
            if (g == 1) return 0.5 * (range[0] + range[1]);
            return range[0] + (range[1] - range[0]) * static_cast<double>(i) / (g - 1);
        };
        for (int ia = 0; ia < g; ++ia)
            for (int im = 0; im < g; ++im)
                for (int ik = 0; ik < g; ++ik)
                    candidates.push_back({grid_value(cfg.alpha_range, ia),
                                          grid_value(cfg.mu_range, im),
                                          grid_value(cfg.kappa_range, ik)});
    } else {
        for (int i = 0; i < cfg.budget; ++i) {
            const auto idx = static_cast<std::uint64_t>(i) + 1;
            candidates.push_back({lerp_range(cfg.alpha_range, rotated(halton(idx, 2), cfg.seed, 0)),
                                  lerp_range(cfg.mu_range, rotated(halton(idx, 3), cfg.seed, 1)),
                                  lerp_range(cfg.kappa_range, rotated(halton(idx, 5), cfg.seed, 2))});
        }
    }

    TuneResult result;
    bool have_best = false;
    for (const auto& hp : candidates) {
        hp.validate();
        const auto trace = simulate(train_profile, spec, MosPolicy{hp});
        const double obj = tuning_objective(compute_metrics(trace, spec.e_max_kwh), cfg.gamma);
        result.evaluated.push_back({hp, obj});
        if (!have_best || obj < result.objective ||
            (obj == result.objective && lex_less(hp, result.best))) {
            result.best = hp;
            result.objective = obj;
            have_best = true;
        }
    }
    if (!have_best) throw std::runtime_error("tune: no candidate evaluated");
    return result;
}

std::string TuneResult::to_json(std::uint64_t seed) const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["chosen"] = {{"alpha", best.alpha}, {"mu", best.mu}, {"kappa", best.kappa}};
    j["objective"] = objective;
    auto& cands = j["candidates"] = nlohmann::ordered_json::array();
    for (const auto& c : evaluated) {
        cands.push_back({{"alpha", c.hp.alpha},
                         {"mu", c.hp.mu},
                         {"kappa", c.hp.kappa},
                         {"objective", c.objective}});
    }
    return j.dump(2);
}

std::optional<HyperParams> reference_hyperparams(double p_max_kw, double e_max_kwh) {
    struct Entry {
        double kw, kwh;
        HyperParams hp;
    };
    static const Entry table[] = {
        {2.0, 4.0, {0.051, 0.236, 0.128}},   {2.0, 8.0, {0.132, 0.761, 0.278}},
        {2.0, 12.0, {0.22, 1.743, 0.526}},   {4.0, 8.0, {0.083, 0.876, 0.262}},
        {4.0, 16.0, {0.15, 1.87, 0.463}},    {4.0, 24.0, {0.218, 2.3, 0.518}},
        {6.0, 12.0, {0.132, 1.775, 0.442}},  {6.0, 24.0, {0.217, 2.293, 0.517}},
        {6.0, 36.0, {0.227, 2.3233, 0.5}},
    };
    for (const auto& e : table)
        if (e.kw == p_max_kw && e.kwh == e_max_kwh) return e.hp;
    return std::nullopt;
}

}  // namespace scmlab
