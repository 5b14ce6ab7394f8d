#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "dirtensor/combinatorics.hpp"
#include "dirtensor/metrics.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace dirtensor;

namespace {

DiscreteDensity vec_density(std::vector<double> p) {
    const std::size_t V = p.size();
    return DiscreteDensity(V, Tensor::vector(std::move(p)));
}

// Vertex enumeration: every choice of m+n-1 cells whose equality system has a
// unique nonnegative solution is a basic feasible point; the LP optimum is the
// cheapest of them.
double brute_transport(const std::vector<double>& s, const std::vector<double>& d,
                       const std::vector<double>& c) {
    const std::size_t m = s.size(), n = d.size(), cells = m * n, nb = m + n - 1;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> pick(cells, 0);
    std::fill(pick.end() - static_cast<long>(nb), pick.end(), 1);
    do {
        std::vector<std::size_t> chosen;
        for (std::size_t k = 0; k < cells; ++k)
            if (pick[k]) chosen.push_back(k);
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<long>(m + n), static_cast<long>(nb));
        Eigen::VectorXd b(static_cast<long>(m + n));
        for (std::size_t i = 0; i < m; ++i) b(static_cast<long>(i)) = s[i];
        for (std::size_t j = 0; j < n; ++j) b(static_cast<long>(m + j)) = d[j];
        for (std::size_t t = 0; t < nb; ++t) {
            A(static_cast<long>(chosen[t] / n), static_cast<long>(t)) = 1.0;
            A(static_cast<long>(m + chosen[t] % n), static_cast<long>(t)) = 1.0;
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        if (qr.rank() < static_cast<long>(nb)) continue;
        Eigen::VectorXd x = qr.solve(b);
        if ((A * x - b).norm() > 1e-9 || x.minCoeff() < -1e-12) continue;
        double cost = 0.0;
        for (std::size_t t = 0; t < nb; ++t) cost += x(static_cast<long>(t)) * c[chosen[t]];
        best = std::min(best, cost);
    } while (std::next_permutation(pick.begin(), pick.end()));
    return best;
}

MixingMeasure relabel(const MixingMeasure& G, const Permutation& perm) {
    std::vector<double> w(G.K());
    std::vector<std::vector<double>> rows(G.K());
    for (std::size_t k = 0; k < G.K(); ++k) {
        w[k] = G.weights()[perm(k)];
        auto a = G.atom(perm(k));
        rows[k].assign(a.begin(), a.end());
    }
    return MixingMeasure(std::move(w), TopicMatrix(std::move(rows)));
}

std::vector<double> floored_simplex(std::size_t V, double c0, RngStream& rng) {
    auto w = testutil::random_simplex(V, rng);
    for (auto& v : w) v = c0 + (1.0 - static_cast<double>(V) * c0) * v;
    return w;
}

Tensor power_product(const std::vector<double>& theta, std::size_t N) {
    std::vector<Tensor> parts(N, Tensor::vector(theta));
    return outer_product(parts);
}

}  // namespace

TEST_CASE("TV examples") {
    auto p = vec_density({0.6, 0.4});
    auto q = vec_density({0.5, 0.5});
    CHECK(tv_distance(p, p) == 0.0);
    CHECK(tv_distance(p, q) == doctest::Approx(0.1));
    CHECK(tv_distance(vec_density({1, 0}), vec_density({0, 1})) == 1.0);
    CHECK_THROWS(tv_distance(p, vec_density({1, 0, 0})));
}

TEST_CASE("Hellinger and KL examples") {
    auto a = vec_density({0.5, 0.5});
    auto b = vec_density({0.75, 0.25});
    CHECK(hellinger_distance(a, a) == 0.0);
    CHECK(kl_divergence(a, a).value == 0.0);
    // Two-term formula, both orientations.
    CHECK(kl_divergence(b, a).value == doctest::Approx(0.13081203594113697).epsilon(1e-14));
    CHECK(kl_divergence(a, b).value == doctest::Approx(0.14384103622589042).epsilon(1e-14));
    auto z = kl_divergence(a, vec_density({1.0, 0.0}));
    CHECK(z.infinite);
    CHECK(std::isinf(z.value));
    CHECK_FALSE(kl_divergence(vec_density({1.0, 0.0}), a).infinite);
    CHECK(hellinger_distance(vec_density({1, 0}), vec_density({0, 1})) == doctest::Approx(1.0));
}

TEST_CASE("distance chain on random pairs") {
    RngStream rng(17);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t V = 2 + trial % 6;
        auto p = testutil::random_simplex(V, rng), q = testutil::random_simplex(V, rng);
        const double tv = tv_distance(p, q), h2 = hellinger_squared(p, q);
        const auto kl = kl_divergence(p, q);
        CHECK(h2 <= tv + 1e-15);
        CHECK(tv <= std::sqrt(2.0 * h2) + 1e-15);
        CHECK(h2 <= kl.value / 2 + 1e-15);
        CHECK(tv <= 1.0);
        CHECK(h2 <= 1.0);
    }
}

TEST_CASE("Wasserstein examples") {
    TopicMatrix ab({{1.0, 0.0}, {1.0 - 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)}});
    // ||a - b|| = 1
    MixingMeasure G({0.5, 0.5}, ab);
    MixingMeasure Gp({1.0}, TopicMatrix({{1.0, 0.0}}));
    auto w = wasserstein(G, Gp, 1);
    CHECK(w.value == doctest::Approx(0.5));
    CHECK(w.plan(0, 0) == doctest::Approx(0.5));
    CHECK(w.plan(1, 0) == doctest::Approx(0.5));

    auto self = wasserstein(G, G, 2);
    CHECK(self.value == doctest::Approx(0.0));
    CHECK(self.plan(0, 0) == doctest::Approx(0.5));
    CHECK(self.plan(1, 1) == doctest::Approx(0.5));

    MixingMeasure pa({1.0}, TopicMatrix({{0.2, 0.8}})), pb({1.0}, TopicMatrix({{0.6, 0.4}}));
    const double dist = std::sqrt(0.32);
    CHECK(wasserstein(pa, pb, 1).value == doctest::Approx(dist));
    CHECK(wasserstein(pa, pb, 2).value == doctest::Approx(dist));
    CHECK(wasserstein(pa, pb, 2).power == doctest::Approx(0.32));
    CHECK_THROWS(wasserstein(pa, MixingMeasure({1.0}, TopicMatrix({{1.0, 0.0, 0.0}})), 1));
}

TEST_CASE("transport simplex equals vertex enumeration") {
    RngStream rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t m = 1 + trial % 3, n = 1 + (trial / 3) % 4;
        auto s = testutil::random_simplex(m, rng), d = testutil::random_simplex(n, rng);
        std::vector<double> c(m * n);
        for (auto& v : c) v = rng.uniform();
        if (trial % 5 == 0) {
            // Degenerate marginals: partial sums coincide.
            s.assign(m, 1.0 / static_cast<double>(m));
            d.assign(n, 1.0 / static_cast<double>(n));
        }
        auto plan = solve_transport(s, d, c);
        CHECK(plan.cost == doctest::Approx(brute_transport(s, d, c)).epsilon(1e-10));
        for (std::size_t i = 0; i < m; ++i) {
            double rs = 0;
            for (std::size_t j = 0; j < n; ++j) {
                CHECK(plan(i, j) >= 0.0);
                rs += plan(i, j);
            }
            CHECK(std::abs(rs - s[i]) <= 1e-9);
        }
        for (std::size_t j = 0; j < n; ++j) {
            double cs = 0;
            for (std::size_t i = 0; i < m; ++i) cs += plan(i, j);
            CHECK(std::abs(cs - d[j]) <= 1e-9);
        }
    }
}

TEST_CASE("transport drops zero-weight atoms and handles 64 x 64") {
    std::vector<double> s{0.5, 0.0, 0.5}, d{0.0, 1.0};
    std::vector<double> c{1, 2, 3, 4, 5, 6};
    auto plan = solve_transport(s, d, c);
    CHECK(plan.cost == doctest::Approx(0.5 * 2 + 0.5 * 6));
    CHECK(plan(1, 1) == 0.0);
    CHECK_THROWS(solve_transport(std::vector<double>{1.0}, std::vector<double>{0.5}, std::vector<double>{1}));

    RngStream rng(5);
    const std::size_t K = 64;
    auto a = testutil::random_simplex(K, rng), b = testutil::random_simplex(K, rng);
    std::vector<double> cost(K * K);
    for (auto& v : cost) v = rng.uniform();
    auto big = solve_transport(a, b, cost);
    // Duality-free sanity: cost never exceeds that of the independent coupling.
    double indep = 0.0;
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j) indep += a[i] * b[j] * cost[i * K + j];
    CHECK(big.cost <= indep);
    // Identity cost on equal marginals: zero.
    std::vector<double> eye(K * K, 1.0);
    for (std::size_t i = 0; i < K; ++i) eye[i * K + i] = 0.0;
    CHECK(solve_transport(a, a, eye).cost == doctest::Approx(0.0));
}

TEST_CASE("Wasserstein metric properties") {
    RngStream rng(71);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t V = 3;
        auto G1 = testutil::random_measure(1 + trial % 3, V, rng);
        auto G2 = testutil::random_measure(1 + (trial + 1) % 4, V, rng);
        auto G3 = testutil::random_measure(2, V, rng);
        for (double r : {1.0, 2.0}) {
            const double d12 = wasserstein(G1, G2, r).value;
            const double d23 = wasserstein(G2, G3, r).value;
            const double d13 = wasserstein(G1, G3, r).value;
            CHECK(d13 <= d12 + d23 + 1e-12);
            CHECK(wasserstein(G2, G1, r).value == doctest::Approx(d12).epsilon(1e-12));
            auto perm = testutil::random_permutation(G2.K(), rng);
            CHECK(wasserstein(G1, relabel(G2, perm), r).value == doctest::Approx(d12).epsilon(1e-12));
        }
        CHECK(wasserstein(G1, G2, 1).value <= wasserstein(G1, G2, 2).value + 1e-12);
    }
}

TEST_CASE("Voronoi surrogate") {
    RngStream rng(3);
    auto G0 = testutil::random_measure(3, 4, rng, 0.5);
    CHECK(voronoi_surrogate(G0, G0, 1) == 0.0);
    auto rows = G0.atoms().rows();
    const double eps = 1e-3;
    rows[0][0] += eps;
    rows[0][1] -= eps;
    MixingMeasure G(G0.weights(), TopicMatrix(rows));
    for (double r : {1.0, 2.0})
        CHECK(voronoi_surrogate(G, G0, r) ==
              doctest::Approx(G0.weights()[0] * std::pow(std::sqrt(2.0) * eps, r)).epsilon(1e-9));
    // Logged calibration only: ratio to W_r^r near G0 is finite and positive.
    const double ratio = voronoi_surrogate(G, G0, 1) / wasserstein(G, G0, 1).power;
    CHECK(std::isfinite(ratio));
    CHECK(ratio > 0.0);
}

TEST_CASE("Prop. 2 examples and audit") {
    RngStream rng(2);
    auto G = testutil::random_measure(2, 3, rng);
    auto same = check_distance_bounds(LdaParams(G, 1.0), LdaParams(G, 1.0), 3);
    CHECK(same.tv_lda == 0.0);
    CHECK(same.tv_mix == 0.0);
    CHECK(same.all_ok());
    CHECK_THROWS(check_distance_bounds(LdaParams(G, 1.0), LdaParams(G, 2.0), 2));

    auto rep = check_distance_bounds(LdaParams(G, 1.0), LdaParams(testutil::random_measure(3, 3, rng), 1.0), 3);
    CHECK(rep.c1 == doctest::Approx(11.0 / 6.0));
    CHECK(rep.c2 == doctest::Approx(7.0));
    CHECK(rep.all_ok());

    int violations = 0;
    for (std::size_t N : {1u, 2u, 3u})
        for (double abar : {0.3, 1.0, 4.0})
            for (int rep_i = 0; rep_i < 30; ++rep_i) {
                auto A = testutil::random_measure(1 + rep_i % 3, 3, rng);
                auto B = testutil::random_measure(1 + (rep_i / 3) % 3, 3, rng);
                if (!check_distance_bounds(LdaParams(A, abar), LdaParams(B, abar), N).all_ok()) ++violations;
            }
    CHECK(violations == 0);
}

TEST_CASE("multinomial distance bounds for product measures") {
    RngStream rng(404);
    const double c0 = 0.05;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t V = 2 + trial % 4, N = 1 + trial % 6;
        auto t1 = floored_simplex(V, c0, rng), t2 = floored_simplex(V, c0, rng);
        if (trial % 2 == 0)  // near pairs as well as far ones
            for (std::size_t v = 0; v < V; ++v) t2[v] = t1[v] + 0.01 * (t2[v] - t1[v]);
        double norm = 0.0;
        for (std::size_t v = 0; v < V; ++v) norm += (t1[v] - t2[v]) * (t1[v] - t2[v]);
        norm = std::sqrt(norm);
        auto p = power_product(t1, N), q = power_product(t2, N);
        const double dh = std::sqrt(hellinger_squared(p.data(), q.data()));
        CHECK(dh <= std::sqrt(static_cast<double>(N) / (8 * c0)) * norm + 1e-15);
        CHECK(kl_divergence(p.data(), q.data()).value <= static_cast<double>(N) / c0 * norm + 1e-15);
    }
}

TEST_CASE("marginalization contracts and products add distances") {
    RngStream rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        auto A = testutil::random_measure(2, 3, rng, 0.1);
        auto B = testutil::random_measure(2, 3, rng, 0.1);
        auto p = lda_density(LdaParams(A, 0.7), 3), q = lda_density(LdaParams(B, 0.7), 3);
        std::vector<std::size_t> S{0, 2};
        auto pm = marginalize(p, S), qm = marginalize(q, S);
        CHECK(tv_distance(pm, qm) <= tv_distance(p, q) + 1e-15);
        CHECK(hellinger_squared(pm.table.data(), qm.table.data()) <=
              hellinger_squared(p.table.data(), q.table.data()) + 1e-15);
        CHECK(kl_divergence(pm, qm).value <= kl_divergence(p, q).value + 1e-15);

        auto p1 = testutil::random_simplex(3, rng, 0.1), q1 = testutil::random_simplex(3, rng, 0.1);
        auto p2 = testutil::random_simplex(2, rng, 0.1), q2 = testutil::random_simplex(2, rng, 0.1);
        auto pp = outer_product({Tensor::vector(p1), Tensor::vector(p2)});
        auto qq = outer_product({Tensor::vector(q1), Tensor::vector(q2)});
        CHECK(tv_distance(pp.data(), qq.data()) <= tv_distance(p1, q1) + tv_distance(p2, q2) + 1e-15);
        CHECK(hellinger_squared(pp.data(), qq.data()) <=
              hellinger_squared(p1, q1) + hellinger_squared(p2, q2) + 1e-15);
        CHECK(kl_divergence(pp.data(), qq.data()).value ==
              doctest::Approx(kl_divergence(p1, q1).value + kl_divergence(p2, q2).value).epsilon(1e-12));
    }
}
