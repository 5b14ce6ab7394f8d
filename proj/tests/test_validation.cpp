#include <algorithm>

#include "dirtensor/validation.hpp"
#include "doctest.h"

using namespace dirtensor;

TEST_CASE("identity grids pass and the fuzzed control fails") {
    IdentityGridConfig cfg;
    cfg.K_max = 3;
    cfg.N_max = 4;
    cfg.alphas_per_cell = 5;
    cfg.corr_K_max = 2;
    cfg.corr_N_max = 3;
    cfg.measures_per_cell = 3;
    const RngStream rng(11);
    for (bool inverse : {false, true}) {
        const auto cells = moment_identity_grid(cfg, inverse, rng);
        CHECK(cells.size() == 12);
        for (const auto& c : cells) {
            CHECK(c.trials == 5);
            CHECK(c.pass());
        }
    }
    const auto corr = correspondence_grid(cfg, rng);
    CHECK(corr.size() == 2 * 2 * 3 * 3 * 2);
    for (const auto& c : corr) CHECK(c.pass());

    cfg.fuzz = 1e-6;
    const auto bad = moment_identity_grid(cfg, false, rng);
    CHECK(std::none_of(bad.begin(), bad.end(), [](const auto& c) { return c.pass(); }));
    const auto bad_corr = correspondence_grid(cfg, rng);
    CHECK(std::none_of(bad_corr.begin(), bad_corr.end(), [](const auto& c) { return c.pass(); }));
}

TEST_CASE("moments validation on a small grid") {
    MomentsConfig cfg;
    cfg.m_grid = {100, 1000};
    cfg.replications = 4;
    cfg.pairs = 10;
    cfg.pair_N_max = 4;
    cfg.pair_m = 2000;
    const auto res = moments_validation(cfg, RngStream(5));
    CHECK(res.convergence.size() == cfg.N_max * 2);
    CHECK(res.pairs.size() == 40);
    CHECK(res.cross_checks.size() == 8 + 10 * 4);
    CHECK(res.cross_checks_pass());
    CHECK(res.pair_coverage() >= 0.9);
    for (const auto& row : res.convergence) {
        CHECK(row.q25 <= row.mean + 1e-12);
        CHECK(row.theoretical > 0.0);
    }
    // Spread of the replications narrows with m.
    const auto& a = res.convergence[0];
    const auto& b = res.convergence[1];
    CHECK(b.q75 - b.q25 < a.q75 - a.q25);

    cfg.fuzz = 1e-6;
    CHECK_FALSE(moments_validation(cfg, RngStream(5)).cross_checks_pass());

    cfg.x = {0.5};
    CHECK_THROWS(moments_validation(cfg, RngStream(5)));
}

TEST_CASE("moments validation is deterministic across job counts") {
    MomentsConfig cfg;
    cfg.m_grid = {200};
    cfg.replications = 3;
    cfg.pairs = 4;
    cfg.pair_N_max = 3;
    cfg.pair_m = 300;
    const auto a = moments_validation(cfg, RngStream(9));
    cfg.jobs = 3;
    const auto b = moments_validation(cfg, RngStream(9));
    REQUIRE(a.pairs.size() == b.pairs.size());
    for (std::size_t i = 0; i < a.pairs.size(); ++i) CHECK(a.pairs[i].empirical == b.pairs[i].empirical);
    for (std::size_t i = 0; i < a.convergence.size(); ++i) CHECK(a.convergence[i].mean == b.convergence[i].mean);
}

TEST_CASE("distance comparison audit has no violations") {
    DistanceAuditConfig cfg;
    cfg.N = {1, 3};
    cfg.abar = {0.3, 4.0};
    cfg.pairs = 20;
    const auto cells = distance_audit(cfg, RngStream(3));
    CHECK(cells.size() == 4);
    for (const auto& c : cells) {
        CHECK(c.pairs == 20);
        CHECK(c.violations() == 0);
        CHECK(c.c1 == doctest::Approx(c.c1_partitions).epsilon(1e-12));
        CHECK(c.max_tv_ratio <= 1.0 + 1e-9);
    }
}

TEST_CASE("table rows for one small instance") {
    TableConfig cfg;
    cfg.instances = {{TopicCondition::anchor_word, 2, 3}};
    cfg.probe.restarts = 8;
    const auto rows = identifiability_table(cfg, RngStream(4));
    // N = 1, 2 and K_fit = 2, 3.
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) {
        CHECK_FALSE(r.false_counterexample());
        CHECK(r.rank == 2);
        if (r.N == 1) CHECK(r.report.verdict == Verdict::counterexample);
        if (r.overfitted()) CHECK(r.alt_bound == 4);
    }
}
