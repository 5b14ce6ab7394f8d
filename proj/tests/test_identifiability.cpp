#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <vector>

#include "dirtensor/identifiability.hpp"
#include "dirtensor/metrics.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace dirtensor;

namespace {

TopicMatrix rows_of(std::vector<std::vector<double>> rows) { return TopicMatrix(std::move(rows)); }

// Kruskal rank by brute force with full-pivot LU on every subset.
std::size_t brute_kruskal(const TopicMatrix& t) {
    const std::size_t K = t.K();
    std::size_t best = 0;
    for (std::size_t R = 1; R <= K; ++R) {
        bool ok = true;
        for (unsigned mask = 0; mask < (1u << K) && ok; ++mask) {
            if (static_cast<std::size_t>(__builtin_popcount(mask)) != R) continue;
            Eigen::MatrixXd m(static_cast<long>(R), static_cast<long>(t.V()));
            long r = 0;
            for (std::size_t k = 0; k < K; ++k)
                if (mask & (1u << k)) {
                    for (std::size_t v = 0; v < t.V(); ++v) m(r, static_cast<long>(v)) = t(k, v);
                    ++r;
                }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
            lu.setThreshold(1e-9);
            if (static_cast<std::size_t>(lu.rank()) < R) ok = false;
        }
        if (!ok) break;
        best = R;
    }
    return best;
}

ProbeOptions quick(std::size_t restarts = 12) {
    ProbeOptions o;
    o.restarts = restarts;
    return o;
}

}  // namespace

TEST_CASE("kruskal rank examples") {
    auto basis = rows_of({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    CHECK(kruskal_rank(basis).kruskal_rank == 3);
    CHECK(kruskal_rank(basis).rank == 3);

    auto dup = rows_of({{0.2, 0.8}, {0.2, 0.8}});
    CHECK(kruskal_rank(dup).kruskal_rank == 1);
    CHECK(kruskal_rank(dup).rank == 1);

    RngStream rng(3);
    auto base = testutil::random_topics(3, 10, rng, 0.05);
    auto rows = base.rows();
    std::vector<double> avg(10, 0.0);
    for (std::size_t v = 0; v < 10; ++v) avg[v] = (rows[0][v] + rows[1][v] + rows[2][v]) / 3.0;
    rows.push_back(avg);
    auto dep = TopicMatrix::unchecked(4, 10, [&] {
        std::vector<double> flat;
        for (auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
        return flat;
    }());
    auto info = kruskal_rank(dep);
    CHECK(info.rank == 3);
    CHECK(info.kruskal_rank == 3);
}

TEST_CASE("kruskal rank agrees with LU oracle and obeys ordering") {
    RngStream rng(17);
    for (int rep = 0; rep < 60; ++rep) {
        const std::size_t K = 1 + rep % 5, V = 2 + (rep / 5) % 4;
        auto rows = testutil::random_topics(K, V, rng).rows();
        // Plant duplicates and convex combinations now and then.
        if (K >= 2 && rep % 3 == 0) rows[1] = rows[0];
        if (K >= 3 && rep % 4 == 1)
            for (std::size_t v = 0; v < V; ++v) rows[2][v] = 0.5 * (rows[0][v] + rows[1][v]);
        TopicMatrix t(rows);
        auto info = kruskal_rank(t);
        CHECK(info.kruskal_rank == brute_kruskal(t));
        CHECK(info.kruskal_rank <= info.rank);
        CHECK(info.rank <= std::min(K, V));
        bool distinct = true;
        for (std::size_t a = 0; a < K; ++a)
            for (std::size_t b = a + 1; b < K; ++b)
                if (rows[a] == rows[b]) distinct = false;
        if (K >= 2) CHECK((info.kruskal_rank >= 2) == distinct);
    }
}

TEST_CASE("anchor word examples") {
    auto basis = rows_of({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    auto a = anchor_word_check(basis);
    CHECK(a.has_anchor);
    CHECK(a.anchors == std::vector<std::size_t>{0, 1, 2});

    auto pos = rows_of({{0.3, 0.7}, {0.6, 0.4}});
    CHECK_FALSE(anchor_word_check(pos).has_anchor);

    auto block = rows_of({{0.5, 0.5, 0}, {0, 0.5, 0.5}});
    auto b = anchor_word_check(block);
    CHECK(b.has_anchor);
    CHECK(b.anchors == std::vector<std::size_t>{0, 2});
}

TEST_CASE("desk instances carry their structural certificate") {
    RngStream rng(5);
    for (std::size_t K0 = 1; K0 <= 3; ++K0) {
        auto li = desk_instance(TopicCondition::linearly_independent, K0, K0 + 1, rng);
        CHECK(kruskal_rank(li.atoms()).rank == K0);
        if (K0 >= 2) CHECK_FALSE(anchor_word_check(li.atoms()).has_anchor);

        auto an = desk_instance(TopicCondition::anchor_word, K0, K0 + 2, rng);
        CHECK(anchor_word_check(an.atoms()).has_anchor);

        auto di = desk_instance(TopicCondition::distinct, K0, 3, rng);
        auto info = kruskal_rank(di.atoms());
        CHECK(info.rank <= 2);
        if (K0 >= 2) CHECK(info.kruskal_rank == 2);
    }
    CHECK_THROWS(desk_instance(TopicCondition::linearly_independent, 3, 2, rng));
    CHECK_THROWS(desk_instance(TopicCondition::anchor_word, 3, 3, rng));
}

TEST_CASE("table bounds") {
    CHECK(exact_fitted_bound(TopicCondition::distinct, 3) == 5);
    CHECK(exact_fitted_bound(TopicCondition::linearly_independent, 3) == 3);
    CHECK(exact_fitted_bound(TopicCondition::anchor_word, 3) == 2);
    CHECK(overfitted_bound(TopicCondition::distinct, 3, 4) == 6);
    CHECK(overfitted_bound(TopicCondition::linearly_independent, 3, 4) == 4);
    CHECK(overfitted_bound(TopicCondition::anchor_word, 3, 4) == 2);
}

TEST_CASE("mean preserving perturbation keeps the one-word density") {
    RngStream rng(8);
    auto G0 = desk_instance(TopicCondition::linearly_independent, 2, 3, rng);
    std::vector<double> d{0.5, -0.25, -0.25};
    auto G = mean_preserving_perturbation(G0, 0.05, d);
    auto m0 = G0.mean_topic(), m1 = G.mean_topic();
    for (std::size_t v = 0; v < 3; ++v) CHECK(std::abs(m0[v] - m1[v]) < 1e-15);
    CHECK(tv_distance(lda_density(LdaParams(G, 2.0), 1), lda_density(LdaParams(G0, 2.0), 1)) < 1e-15);
    CHECK(wasserstein(G, G0, 1).value > 0.01);
    CHECK(tv_distance(lda_density(LdaParams(G, 2.0), 2), lda_density(LdaParams(G0, 2.0), 2)) > 1e-4);
    CHECK_THROWS(mean_preserving_perturbation(G0, 0.05, {1.0, 0.0, 0.0}));
    CHECK_THROWS(mean_preserving_perturbation(G0, 5.0, d));
}

TEST_CASE("probe finds the one-word counterexample") {
    RngStream rng(21);
    for (std::size_t K0 = 2; K0 <= 3; ++K0) {
        auto G0 = desk_instance(TopicCondition::anchor_word, K0, K0 + 1, rng);
        auto rep = identifiability_probe(G0, 1.0, 1, K0, quick(), rng.derive({K0}));
        REQUIRE(rep.verdict == Verdict::counterexample);
        REQUIRE(rep.witness.has_value());
        // Recompute the witness invariants independently of the probe.
        const double tv = tv_distance(lda_density(LdaParams(*rep.witness, 1.0), 1),
                                      lda_density(LdaParams(G0, 1.0), 1));
        CHECK(tv <= 1e-8);
        CHECK(wasserstein(*rep.witness, G0, 1).value >= 1e-3);
    }
}

TEST_CASE("probe identifies at the table lengths") {
    RngStream rng(22);
    auto an = desk_instance(TopicCondition::anchor_word, 2, 3, rng);
    CHECK(identifiability_probe(an, 1.0, 2, 2, quick(), rng.derive({1})).verdict == Verdict::identified);

    auto li = desk_instance(TopicCondition::linearly_independent, 2, 3, rng);
    CHECK(identifiability_probe(li, 1.0, 3, 2, quick(), rng.derive({2})).verdict == Verdict::identified);
    CHECK(identifiability_probe(li, 1.0, 2, 2, quick(), rng.derive({3})).verdict == Verdict::counterexample);

    auto di = desk_instance(TopicCondition::distinct, 2, 2, rng);
    CHECK(identifiability_probe(di, 1.0, 3, 2, quick(), rng.derive({4})).verdict == Verdict::identified);
}

TEST_CASE("probe verdicts are monotone in N and agree across model classes") {
    RngStream rng(23);
    auto G0 = desk_instance(TopicCondition::distinct, 2, 2, rng);
    bool identified = false;
    for (std::size_t N = 1; N <= 4; ++N) {
        auto o = quick();
        auto lda = identifiability_probe(G0, 1.5, N, 2, o, rng.derive({N}));
        o.model = ModelKind::mixture;
        auto mix = identifiability_probe(G0, 1.5, N, 2, o, rng.derive({N}));
        CHECK(lda.verdict == mix.verdict);
        if (identified) CHECK(lda.verdict != Verdict::counterexample);
        if (lda.verdict == Verdict::identified) identified = true;
    }
    CHECK(identified);
}

TEST_CASE("probe is deterministic and independent of job count") {
    RngStream rng(24);
    auto G0 = desk_instance(TopicCondition::linearly_independent, 2, 3, rng);
    auto o = quick(6);
    auto a = identifiability_probe(G0, 1.0, 2, 3, o, rng.derive({9}));
    o.jobs = 3;
    auto b = identifiability_probe(G0, 1.0, 2, 3, o, rng.derive({9}));
    CHECK(a.verdict == b.verdict);
    CHECK(a.best_objective == b.best_objective);
    CHECK(a.worst_objective == b.worst_objective);
    CHECK(a.evaluations == b.evaluations);
}

TEST_CASE("inverse bound ratios") {
    RngStream rng(31);
    // Single atom: TV grows linearly in the atom displacement.
    MixingMeasure one({1.0}, rows_of({{0.2, 0.3, 0.5}}));
    auto single = inverse_bound_probe(one, 1.0, 2, 1.0, 1, 20, {1e-1, 1e-2, 1e-3}, rng);
    CHECK(single.min_ratio > 0.1);
    CHECK(single.per_radius.size() == 3);

    auto G0 = desk_instance(TopicCondition::linearly_independent, 2, 3, rng);
    auto res = inverse_bound_probe(G0, 1.0, 3, 1.0, 2, 30, {1e-1, 1e-2, 1e-3, 1e-4}, rng.derive({1}));
    CHECK(res.min_ratio > 1e-4);
    for (const auto& p : res.per_radius) CHECK(p.min_ratio >= res.min_ratio);

    // The mean-preserving family at N = 1 has ratio zero up to round-off.
    auto G = mean_preserving_perturbation(G0, 1e-2, {0.5, -0.25, -0.25});
    const double ratio = tv_distance(lda_density(LdaParams(G, 1.0), 1), lda_density(LdaParams(G0, 1.0), 1)) /
                         wasserstein(G, G0, 1).value;
    CHECK(ratio < 1e-6);
    CHECK_THROWS(inverse_bound_probe(G0, 1.0, 3, 1.0, 1, 5, {0.1}, rng));
}
