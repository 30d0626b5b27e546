#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "scmlab/tuner.hpp"

using namespace scmlab;

namespace {

const BatterySpec kSpec{-2.0, 2.0, 0.0, 4.0, 1.0};

PowerProfile train_profile(int days = 5, std::uint64_t seed = 11) {
    SynthParams sp;
    sp.days = days;
    sp.seed = seed;
    return synth_profile(sp);
}

}  // namespace

TEST_CASE("tuning_objective is the gamma-regularized score") {
    MetricsReport m;
    m.l2_sq = 10.0;
    m.l1 = 4.0;
    CHECK(tuning_objective(m, 0.02) == doctest::Approx(10.08));
    CHECK(tuning_objective(m, 0.0) == doctest::Approx(m.l2_sq));
}

TEST_CASE("singleton search space returns the forced triple") {
    TunerConfig cfg;
    cfg.alpha_range = {0.1, 0.1};
    cfg.mu_range = {1.0, 1.0};
    cfg.kappa_range = {0.2, 0.2};
    cfg.budget = 1;
    const auto r = tune(train_profile(2), kSpec, cfg);
    CHECK(r.best.alpha == doctest::Approx(0.1));
    CHECK(r.best.mu == doctest::Approx(1.0));
    CHECK(r.best.kappa == doctest::Approx(0.2));
    CHECK(r.evaluated.size() == 1);
}

TEST_CASE("grid mode equals the exhaustive argmin over the same grid") {
    const auto profile = train_profile(4);
    TunerConfig cfg;
    cfg.mode = TunerConfig::Mode::grid;
    cfg.grid_points = 3;
    const auto r = tune(profile, kSpec, cfg);
    REQUIRE(r.evaluated.size() == 27);

    // independent exhaustive pass over the identical 3x3x3 grid
    auto grid_value = [](const std::array<double, 2>& range, int i) {
        return range[0] + (range[1] - range[0]) * static_cast<double>(i) / 2.0;
    };
    HyperParams best{};
    double best_obj = std::numeric_limits<double>::infinity();
    for (int ia = 0; ia < 3; ++ia)
        for (int im = 0; im < 3; ++im)
            for (int ik = 0; ik < 3; ++ik) {
                const HyperParams hp{grid_value(cfg.alpha_range, ia), grid_value(cfg.mu_range, im),
                                     grid_value(cfg.kappa_range, ik)};
                const auto tr = simulate(profile, kSpec, MosPolicy{hp});
                const double obj = tuning_objective(compute_metrics(tr, kSpec.e_max_kwh), cfg.gamma);
                if (obj < best_obj) {
                    best_obj = obj;
                    best = hp;
                }
            }
    CHECK(r.objective == doctest::Approx(best_obj).epsilon(1e-12));
    CHECK(r.best.alpha == doctest::Approx(best.alpha));
    CHECK(r.best.mu == doctest::Approx(best.mu));
    CHECK(r.best.kappa == doctest::Approx(best.kappa));
}

TEST_CASE("returned objective never exceeds any evaluated candidate") {
    TunerConfig cfg;
    cfg.budget = 12;
    cfg.seed = 3;
    const auto r = tune(train_profile(3), kSpec, cfg);
    REQUIRE(r.evaluated.size() == 12);
    for (const auto& c : r.evaluated) CHECK(r.objective <= c.objective);
}

TEST_CASE("doubling the budget never increases the returned objective") {
    const auto profile = train_profile(3);
    TunerConfig cfg;
    cfg.seed = 7;
    double prev = std::numeric_limits<double>::infinity();
    for (int budget : {4, 8, 16, 32}) {
        cfg.budget = budget;
        const auto r = tune(profile, kSpec, cfg);
        CHECK(r.objective <= prev + 1e-12);
        prev = r.objective;
    }
}

TEST_CASE("sampling is nested and deterministic for a fixed seed") {
    const auto profile = train_profile(2);
    TunerConfig small;
    small.budget = 6;
    small.seed = 99;
    TunerConfig large = small;
    large.budget = 12;
    const auto a = tune(profile, kSpec, small);
    const auto b = tune(profile, kSpec, large);
    REQUIRE(b.evaluated.size() == 12);
    for (std::size_t i = 0; i < a.evaluated.size(); ++i) {
        CHECK(a.evaluated[i].hp.alpha == b.evaluated[i].hp.alpha);
        CHECK(a.evaluated[i].hp.mu == b.evaluated[i].hp.mu);
        CHECK(a.evaluated[i].hp.kappa == b.evaluated[i].hp.kappa);
        CHECK(a.evaluated[i].objective == b.evaluated[i].objective);
    }
}

TEST_CASE("reference hyperparameters for the standard sizes") {
    const auto a = reference_hyperparams(2.0, 4.0);
    REQUIRE(a.has_value());
    CHECK(a->alpha == doctest::Approx(0.051));
    CHECK(a->mu == doctest::Approx(0.236));
    CHECK(a->kappa == doctest::Approx(0.128));
    const auto b = reference_hyperparams(6.0, 36.0);
    REQUIRE(b.has_value());
    CHECK(b->alpha == doctest::Approx(0.227));
    CHECK(b->mu == doctest::Approx(2.3233));
    CHECK(b->kappa == doctest::Approx(0.5));
    CHECK_FALSE(reference_hyperparams(3.0, 10.0).has_value());
}

TEST_CASE("result JSON lists the candidates and the chosen triple") {
    TunerConfig cfg;
    cfg.budget = 5;
    cfg.seed = 2;
    const auto r = tune(train_profile(2), kSpec, cfg);
    const auto j = nlohmann::json::parse(r.to_json(cfg.seed));
    CHECK(j["seed"].get<std::uint64_t>() == 2);
    CHECK(j["candidates"].size() == 5);
    CHECK(j["chosen"]["alpha"].get<double>() == doctest::Approx(r.best.alpha));
    CHECK(j["objective"].get<double>() == doctest::Approx(r.objective));
}

TEST_CASE("config validation") {
    TunerConfig cfg;
    cfg.budget = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.gamma = -0.1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.mu_range = {2.0, 1.0};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.alpha_range = {0.0, 1.0};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    TunerConfig short_ok;
    CHECK_THROWS_AS(tune(train_profile(1), kSpec, short_ok), std::invalid_argument);
}
