#include <cmath>
#include <vector>

#include "dirtensor/tensor.hpp"
#include "dirtensor/rng.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace dirtensor;

TEST_CASE("diag_tensor entries") {
    auto d = diag_tensor(std::vector<double>{0.5, 0.5}, 2);
    CHECK(d.at({0, 0}) == 0.5);
    CHECK(d.at({0, 1}) == 0.0);
    CHECK(d.at({1, 1}) == 0.5);

    auto one = diag_tensor(std::vector<double>{1.0}, 3);
    CHECK(one.size() == 1);
    CHECK(one[0] == 1.0);

    auto t = diag_tensor(std::vector<double>{0.3, 0.7}, 3);
    CHECK(t.at({0, 0, 0}) == 0.3);
    CHECK(t.at({1, 1, 1}) == 0.7);
    CHECK(t.sum() == doctest::Approx(1.0));
    CHECK(t.at({0, 1, 0}) == 0.0);

    CHECK_THROWS(diag_tensor(std::vector<double>{0.5, 0.5}, 0));
    CHECK_THROWS(diag_tensor(std::vector<double>{}, 2));
}

TEST_CASE("tensor rejects order 0, non-finite data and cap overflow") {
    CHECK_THROWS(Tensor(Shape{}, 0.0));
    CHECK_THROWS(Tensor(Shape{2}, std::vector<double>{1.0, NAN}));
    CHECK_THROWS(Tensor(Shape{2, 2}, std::vector<double>{1.0}));
    CHECK_THROWS_AS(Tensor::cube(10, 9, 0.0, 1000), CapExceeded);
}

TEST_CASE("transpose examples") {
    Tensor m(Shape{2, 2}, std::vector<double>{1, 2, 3, 4});
    auto t = transpose(m, Permutation::from_one_based(std::vector<int>{2, 1}));
    CHECK(t == Tensor(Shape{2, 2}, std::vector<double>{1, 3, 2, 4}));
    CHECK(transpose(m, Permutation::identity(2)) == m);
    CHECK_THROWS(transpose(m, Permutation::identity(3)));
    CHECK_THROWS(Permutation(std::vector<std::size_t>{0, 0}));
}

TEST_CASE("transpose follows the index convention on non-cubical shapes") {
    // Result(k) = t(k_tau(1), k_tau(2), k_tau(3)) with tau = (3,1,2).
    RngStream rng(11);
    Tensor t(Shape{2, 3, 4});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform();
    Permutation tau(std::vector<std::size_t>{2, 0, 1});
    auto r = transpose(t, tau);
    CHECK(r.shape() == Shape{3, 4, 2});
    std::vector<std::size_t> k(3), src(3);
    for (std::size_t flat = 0; flat < r.size(); ++flat) {
        r.unravel(flat, k);
        for (std::size_t i = 0; i < 3; ++i) src[i] = k[tau(i)];
        CHECK(r[flat] == t.at(src));
    }
}

TEST_CASE("transpose round trip with the inverse permutation is exact") {
    RngStream rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t N = 1 + trial % 4;
        Shape shape(N);
        for (auto& s : shape) s = 1 + static_cast<std::size_t>(rng.uniform() * 3);
        Tensor t(shape);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
        auto perm = testutil::random_permutation(N, rng);
        CHECK(transpose(transpose(t, perm), perm.inverse()) == t);
    }
}

TEST_CASE("outer_product examples") {
    auto a = Tensor::vector({1, 2});
    auto b = Tensor::vector({3, 4});
    CHECK(outer_product({a, b}) == Tensor(Shape{2, 2}, std::vector<double>{3, 4, 6, 8}));

    Tensor A(Shape{2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
    auto v = Tensor::vector({7, 11});
    auto o = outer_product({A, v});
    CHECK(o.shape() == Shape{2, 3, 2});
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 2; ++k) CHECK(o.at({i, j, k}) == A.at({i, j}) * v[k]);

    CHECK_THROWS(outer_product(std::span<const Tensor>{}));
    CHECK_THROWS(outer_product({a, Tensor{}}));
}

TEST_CASE("weighted_outer examples") {
    TopicMatrix theta({{0.2, 0.3, 0.5}, {0.6, 0.1, 0.3}});
    auto pm = weighted_outer(diag_tensor(std::vector<double>{1.0, 0.0}, 2), theta);
    for (std::size_t v = 0; v < 3; ++v)
        for (std::size_t w = 0; w < 3; ++w)
            CHECK(pm.at({v, w}) == doctest::Approx(theta(0, v) * theta(0, w)).epsilon(1e-14));

    auto mean = weighted_outer(Tensor::vector({0.25, 0.75}), theta);
    for (std::size_t v = 0; v < 3; ++v)
        CHECK(mean[v] == doctest::Approx(0.25 * theta(0, v) + 0.75 * theta(1, v)));

    // Q^(2) for alpha = (0.5, 0.5) is [[.375,.125],[.125,.375]].
    Tensor q2(Shape{2, 2}, std::vector<double>{0.375, 0.125, 0.125, 0.375});
    TopicMatrix id({{1.0, 0.0}, {0.0, 1.0}});
    CHECK(weighted_outer(q2, id) == q2);

    CHECK_THROWS(weighted_outer(Tensor::vector({0.5, 0.25, 0.25}), theta));
}

TEST_CASE("weighted_outer equals naive summation for K <= 3, N <= 4") {
    RngStream rng(21);
    for (std::size_t K = 1; K <= 3; ++K)
        for (std::size_t N = 1; N <= 4; ++N)
            for (std::size_t V = 1; V <= 3; ++V) {
                Tensor q = Tensor::cube(K, N);
                for (std::size_t i = 0; i < q.size(); ++i) q[i] = rng.uniform();
                auto theta = testutil::random_topics(K, V, rng);
                auto fast = weighted_outer(q, theta);
                auto slow = testutil::naive_weighted_outer(q, theta);
                CHECK(max_relative_error(fast, slow) <= 1e-12);
            }
}

TEST_CASE("weighted_outer of a normalized symmetric q is a symmetric density") {
    RngStream rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t K = 2 + trial % 2, N = 2 + trial % 3, V = 3;
        Tensor q = Tensor::cube(K, N);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] = rng.uniform();
        q = testutil::symmetrize(q);
        q *= 1.0 / q.sum();
        auto out = weighted_outer(q, testutil::random_topics(K, V, rng));
        CHECK(out.sum() == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(is_symmetric(out, 1e-12));
    }
}

TEST_CASE("contract_repeated examples and transpose invariance") {
    CHECK(contract_repeated(diag_tensor(std::vector<double>{1.0, 0.0}, 2), std::vector<double>{2, 5}) ==
          4.0);
    CHECK(contract_repeated(Tensor::cube(2, 2, 1.0), std::vector<double>{1, 1}) == 4.0);
    CHECK_THROWS(contract_repeated(Tensor::cube(2, 2, 1.0), std::vector<double>{1, 1, 1}));

    RngStream rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t K = 1 + trial % 3, N = 1 + trial % 4;
        Tensor q = Tensor::cube(K, N);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] = rng.normal();
        std::vector<double> x(K);
        for (auto& v : x) v = rng.normal();
        const double base = contract_repeated(q, x);
        const double naive = testutil::naive_contract(q, x);
        CHECK(base == doctest::Approx(naive).epsilon(1e-12));
        auto perm = testutil::random_permutation(N, rng);
        CHECK(contract_repeated(transpose(q, perm), x) == doctest::Approx(base).epsilon(1e-13));
    }
}
