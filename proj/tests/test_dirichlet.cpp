#include <cmath>
#include <vector>

#include "dirtensor/dirichlet.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace dirtensor;

namespace {

// E prod_k q_k^{n_k} = Gamma(abar) / Gamma(abar + N) * prod_k Gamma(alpha_k + n_k) / Gamma(alpha_k)
Tensor gamma_moment_oracle(const std::vector<double>& alpha, std::size_t N) {
    const std::size_t K = alpha.size();
    double abar = 0.0;
    for (double a : alpha) abar += a;
    Tensor out = Tensor::cube(K, N);
    std::vector<std::size_t> idx(N, 0);
    do {
        std::vector<double> n(K, 0.0);
        for (auto k : idx) n[k] += 1.0;
        double lg = std::lgamma(abar) - std::lgamma(abar + static_cast<double>(N));
        for (std::size_t k = 0; k < K; ++k) lg += std::lgamma(alpha[k] + n[k]) - std::lgamma(alpha[k]);
        out.at(idx) = std::exp(lg);
    } while (testutil::next_index(idx, K));
    return out;
}

std::vector<double> random_alpha(std::size_t K, RngStream& rng) {
    // abar log-uniform in [0.1, 10]
    const double abar = std::exp(std::log(0.1) + rng.uniform() * std::log(100.0));
    auto w = testutil::random_simplex(K, rng, 0.05);
    for (auto& v : w) v *= abar;
    return w;
}

}  // namespace

TEST_CASE("DirichletParam validation") {
    DirichletParam dp({0.3, 0.3, 0.4});
    CHECK(dp.abar() == doctest::Approx(1.0));
    CHECK(dp.atilde()[2] == doctest::Approx(0.4));
    CHECK_THROWS(DirichletParam({}));
    CHECK_THROWS(DirichletParam({1.0, 0.0}));
    CHECK_THROWS(DirichletParam({1.0, -2.0}));
}

TEST_CASE("closed-form moment tensor examples") {
    auto q1 = moment_tensor_closed(DirichletParam({1, 1}), 1);
    CHECK(q1 == Tensor::vector({0.5, 0.5}));
    auto q2 = moment_tensor_closed(DirichletParam({1, 1}), 2);
    CHECK(q2.at({0, 0}) == doctest::Approx(1.0 / 3.0));
    CHECK(q2.at({0, 1}) == doctest::Approx(1.0 / 6.0));
    CHECK(q2.at({1, 1}) == doctest::Approx(1.0 / 3.0));
    auto q3 = moment_tensor_closed(DirichletParam({0.3, 0.3, 0.4}), 1);
    for (std::size_t k = 0; k < 3; ++k) CHECK(q3[k] == doctest::Approx(std::vector{0.3, 0.3, 0.4}[k]));
    auto half = moment_tensor_closed(DirichletParam({0.5, 0.5}), 2);
    CHECK(half.at({0, 0}) == doctest::Approx(0.375));
    CHECK(half.at({0, 1}) == doctest::Approx(0.125));
}

TEST_CASE("closed form matches the Gamma-function oracle, sums to 1, symmetric") {
    RngStream rng(101);
    for (std::size_t K = 1; K <= 4; ++K)
        for (std::size_t N = 1; N <= 5; ++N) {
            auto alpha = random_alpha(K, rng);
            auto Q = moment_tensor_closed(DirichletParam(alpha), N);
            CHECK(max_relative_error(Q, gamma_moment_oracle(alpha, N)) <= 1e-10);
            CHECK(Q.sum() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(is_symmetric(Q, 1e-15));
        }
}

TEST_CASE("forward decomposition examples") {
    DirichletParam dp({1, 1});
    auto q = moment_tensor_from_diagonals(dp, 2);
    CHECK(q.at({0, 0}) == doctest::Approx(1.0 / 3.0));
    CHECK(q.at({0, 1}) == doctest::Approx(1.0 / 6.0));
    DirichletParam dp3({0.3, 0.3, 0.4});
    CHECK(max_relative_error(moment_tensor_from_diagonals(dp3, 1), Tensor::vector({0.3, 0.3, 0.4})) <=
          1e-14);
    CHECK(max_relative_error(moment_tensor_from_diagonals(dp3, 3), moment_tensor_closed(dp3, 3)) <=
          1e-12);
}

TEST_CASE("inverse decomposition examples") {
    DirichletParam dp({1, 1});
    auto d = diagonal_from_moments(dp, 2);
    CHECK(max_abs_difference(d, diag_tensor(std::vector<double>{0.5, 0.5}, 2)) <= 1e-14);

    DirichletParam dp2({0.2, 0.8});
    CHECK(max_tolerance_ratio(diagonal_from_moments(dp2, 4),
                              diag_tensor(std::vector<double>{0.2, 0.8}, 4)) <= 1.0);
}

TEST_CASE("inverse decomposition at N=3 equals the explicit three-term display") {
    RngStream rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        auto alpha = random_alpha(3, rng);
        DirichletParam dp(alpha);
        const double a = dp.abar();
        auto Q1 = moment_tensor_closed(dp, 1);
        auto Q2 = moment_tensor_closed(dp, 2);
        auto Q3 = moment_tensor_closed(dp, 3);
        auto q21 = outer_product({Q2, Q1});
        Tensor mid = transpose(q21, Permutation::from_one_based(std::vector<int>{1, 2, 3}));
        mid += transpose(q21, Permutation::from_one_based(std::vector<int>{2, 3, 1}));
        mid += transpose(q21, Permutation::from_one_based(std::vector<int>{3, 1, 2}));
        Tensor expect = Q3;
        expect *= rising_factorial(a, 3);
        expect.axpy(-rising_factorial(a, 2) * a, mid);
        expect.axpy(2.0 * a * a * a, outer_product({Q1, Q1, Q1}));
        expect *= 1.0 / (2.0 * a);
        CHECK(max_abs_difference(expect, diag_tensor(dp.atilde(), 3)) <= 1e-12);
        CHECK(max_abs_difference(expect, diagonal_from_moments(dp, 3)) <= 1e-12);
    }
}

TEST_CASE("place_on_partition puts each factor on its block") {
    SetPartition p(3, {{0, 2}, {1}});
    Tensor A(Shape{2, 2}, std::vector<double>{1, 2, 3, 4});
    auto b = Tensor::vector({5, 7});
    auto t = place_on_partition(std::vector<Tensor>{A, b}, p);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k) CHECK(t.at({i, j, k}) == A.at({i, k}) * b[j]);
    CHECK_THROWS(place_on_partition(std::vector<Tensor>{b, A}, p));
}

TEST_CASE("round trip: inverse then forward reproduces the closed form") {
    RngStream rng(55);
    for (std::size_t K = 1; K <= 3; ++K)
        for (std::size_t N = 1; N <= 4; ++N) {
            DirichletParam dp(random_alpha(K, rng));
            std::vector<Tensor> diags;
            for (std::size_t s = 1; s <= N; ++s) diags.push_back(diagonal_from_moments(dp, s));
            auto back = ewens_expansion(dp.abar(), diags);
            CHECK(max_relative_error(back, moment_tensor_closed(dp, N)) <= 1e-9);
        }
}

TEST_CASE("linear moments recursion") {
    DirichletParam dp({0.3, 0.3, 0.4});
    std::vector<double> x{0.6, 0.7, 0.8};
    auto M = linear_moments_recursive(dp, x, 8);
    CHECK(M[0] == 1.0);
    CHECK(M[1] == doctest::Approx(0.71).epsilon(1e-14));
    CHECK(M[2] == doctest::Approx(0.50755).epsilon(1e-13));
    CHECK(contract_repeated(moment_tensor_closed(dp, 2), x) == doctest::Approx(0.50755).epsilon(1e-13));
    for (std::size_t N = 1; N <= 8; ++N)
        CHECK(std::abs(M[N] - contract_repeated(moment_tensor_closed(dp, N), x)) <= 1e-10 * M[N]);

    auto c = linear_moments_recursive(DirichletParam({0.2, 1.5, 3.0}), std::vector<double>{0.4, 0.4, 0.4}, 12);
    for (std::size_t N = 0; N <= 12; ++N) CHECK(c[N] == doctest::Approx(std::pow(0.4, double(N))));

    // Large abar stays finite: c_n is kept in log space.
    auto big = linear_moments_recursive(DirichletParam({300.0, 200.0}), std::vector<double>{0.9, 0.1}, 200);
    CHECK(std::isfinite(big[200]));
    CHECK(big[200] > 0.0);
}

TEST_CASE("recursion agrees with contraction for random (alpha, x)") {
    RngStream rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> alpha(3), x(3);
        for (auto& a : alpha) a = 0.01 + rng.uniform();
        for (auto& v : x) v = rng.uniform();
        DirichletParam dp(alpha);
        auto M = linear_moments_recursive(dp, x, 8);
        for (std::size_t N = 1; N <= 8; ++N) {
            const double t = contract_repeated(moment_tensor_closed(dp, N), x);
            CHECK(std::abs(M[N] - t) <= 1e-10 * std::max(t, 1e-300));
        }
    }
}

TEST_CASE("Dirichlet sampler") {
    RngStream rng(1);
    CHECK(sample_dirichlet(DirichletParam({2.5}), rng) == std::vector<double>{1.0});

    DirichletParam conc({1e6, 1e6});
    double m0 = 0.0;
    for (int i = 0; i < 10000; ++i) {
        auto q = sample_dirichlet(conc, rng);
        CHECK(std::abs(q[0] + q[1] - 1.0) <= 1e-12);
        m0 += q[0];
    }
    CHECK(std::abs(m0 / 10000 - 0.5) < 0.01);

    DirichletParam dp({0.3, 0.3, 0.4});
    const int n = 100000;
    std::vector<double> mean(3, 0.0);
    for (int i = 0; i < n; ++i) {
        auto q = sample_dirichlet(dp, rng);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK_MESSAGE(q[k] >= 0.0, "negative coordinate");
            mean[k] += q[k];
        }
    }
    for (std::size_t k = 0; k < 3; ++k) {
        const double a = dp.atilde()[k];
        const double se = std::sqrt(a * (1 - a) / (dp.abar() + 1) / n);
        CHECK(std::abs(mean[k] / n - a) < 3 * se);
    }

    // Very small shapes still normalise.
    DirichletParam tiny({1e-3, 1e-3, 1e-3});
    for (int i = 0; i < 100; ++i) {
        auto q = sample_dirichlet(tiny, rng);
        CHECK(std::abs(q[0] + q[1] + q[2] - 1.0) <= 1e-12);
    }
}

TEST_CASE("Monte Carlo linear moments") {
    RngStream rng(77);
    DirichletParam dp({0.3, 0.3, 0.4});
    std::vector<double> x{0.6, 0.7, 0.8};
    auto M = linear_moments_recursive(dp, x, 4);
    auto est = monte_carlo_linear_moment(dp, x, 4, 100000, rng);
    CHECK(std::abs(est.estimate - M[4]) < 3 * est.std_error);
    auto one = monte_carlo_linear_moment(dp, x, 1, 20000, rng);
    CHECK(std::abs(one.estimate - 0.71) < 3 * one.std_error);

    auto constant = monte_carlo_linear_moment(dp, std::vector<double>{0.3, 0.3, 0.3}, 5, 1000, rng);
    CHECK(constant.estimate == std::pow(0.3, 5.0));
    CHECK(constant.std_error == 0.0);
    CHECK_THROWS(monte_carlo_linear_moment(dp, x, 2, 1, rng));
}

TEST_CASE("RNG streams are deterministic and coordinate-derived") {
    RngStream a(42), b(42);
    for (int i = 0; i < 5; ++i) CHECK(a() == b());
    auto c1 = RngStream(42).derive({1, 2});
    auto c2 = RngStream(42).derive({1, 2});
    auto c3 = RngStream(42).derive({2, 1});
    CHECK(c1.seed() == c2.seed());
    CHECK(c1.seed() != c3.seed());
}
