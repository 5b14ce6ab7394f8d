#include "dirtensor/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dirtensor {

DirichletParam::DirichletParam(std::vector<double> alpha) : alpha_(std::move(alpha)) {
    if (alpha_.empty()) throw std::invalid_argument("Dirichlet parameter must be nonempty");
    for (double a : alpha_)
        if (!(a > 0.0) || !std::isfinite(a))
            throw std::invalid_argument("Dirichlet parameters must be positive and finite");
    abar_ = std::accumulate(alpha_.begin(), alpha_.end(), 0.0);
    atilde_.resize(alpha_.size());
    for (std::size_t k = 0; k < alpha_.size(); ++k) atilde_[k] = alpha_[k] / abar_;
}

DirichletParam DirichletParam::from_mean(double abar, std::span<const double> mean) {
    if (!(abar > 0.0)) throw std::invalid_argument("concentration must be positive");
    std::vector<double> a(mean.begin(), mean.end());
    for (double& v : a) v *= abar;
    return DirichletParam(std::move(a));
}

Tensor place_on_partition(std::span<const Tensor> parts, const SetPartition& partition,
                          std::size_t cap) {
    const auto& blocks = partition.blocks();
    if (parts.size() != blocks.size())
        throw std::invalid_argument("place_on_partition: one part per block required");
    std::vector<std::size_t> order;  // concatenated block elements
    order.reserve(partition.ground_size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (parts[i].order() != blocks[i].size())
            throw std::invalid_argument("place_on_partition: part order != block size");
        order.insert(order.end(), blocks[i].begin(), blocks[i].end());
    }
    // Outer-product position p carries coordinate order[p]; reading it back at
    // k_{order[p]} is exactly the transpose T_order.
    return transpose(outer_product(parts, cap), Permutation(std::move(order)));
}

Tensor moment_tensor_closed(const DirichletParam& dp, std::size_t N, std::size_t cap) {
    if (N == 0) throw std::invalid_argument("moment tensor order must be >= 1");
    const std::size_t K = dp.K();
    Tensor Q = Tensor::cube(K, N, 0.0, cap);
    // rising[k][n] = alpha_k^{[n]}
    std::vector<std::vector<double>> rising(K, std::vector<double>(N + 1));
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t n = 0; n <= N; ++n) rising[k][n] = rising_factorial(dp.alpha()[k], n);
    const double denom = rising_factorial(dp.abar(), N);

    std::vector<std::size_t> idx(N, 0), counts(K, 0);
    counts[0] = N;
    for (std::size_t flat = 0; flat < Q.size(); ++flat) {
        double num = 1.0;
        for (std::size_t k = 0; k < K; ++k) num *= rising[k][counts[k]];
        Q[flat] = num / denom;
        for (std::size_t j = N; j-- > 0;) {
            --counts[idx[j]];
            if (++idx[j] < K) {
                ++counts[idx[j]];
                break;
            }
            idx[j] = 0;
            ++counts[0];
        }
    }
    return Q;
}

Tensor ewens_expansion(double abar, std::span<const Tensor> components, std::size_t cap) {
    const std::size_t N = components.size();
    if (N == 0) throw std::invalid_argument("ewens_expansion: need at least one component");
    if (!(abar > 0.0)) throw std::invalid_argument("concentration must be positive");
    for (std::size_t s = 0; s < N; ++s)
        if (components[s].order() != s + 1 || !components[s].is_cubical())
            throw std::invalid_argument("components[s] must be a cubical order-(s+1) tensor");

    Tensor total = Tensor::cube(components[0].dim(0), N, 0.0, cap);
    std::vector<Tensor> parts;
    for_each_set_partition(N, [&](const SetPartition& p) {
        double coef = std::pow(abar, static_cast<double>(p.num_blocks()));
        parts.clear();
        for (std::size_t s : p.block_sizes()) {
            coef *= static_cast<double>(factorial(s - 1));
            parts.push_back(components[s - 1]);
        }
        total.axpy(coef, place_on_partition(parts, p, cap));
    });
    total *= 1.0 / rising_factorial(abar, N);
    return total;
}

Tensor inverse_ewens_expansion(double abar, std::span<const Tensor> components, std::size_t cap) {
    const std::size_t N = components.size();
    if (N == 0) throw std::invalid_argument("inverse_ewens_expansion: need at least one component");
    if (!(abar > 0.0)) throw std::invalid_argument("concentration must be positive");
    for (std::size_t s = 0; s < N; ++s)
        if (components[s].order() != s + 1 || !components[s].is_cubical())
            throw std::invalid_argument("components[s] must be a cubical order-(s+1) tensor");
    std::vector<double> rising(N + 1);
    for (std::size_t s = 0; s <= N; ++s) rising[s] = rising_factorial(abar, s);

    Tensor total = Tensor::cube(components[0].dim(0), N, 0.0, cap);
    std::vector<Tensor> parts;
    for_each_set_partition(N, [&](const SetPartition& p) {
        const std::size_t n = p.num_blocks();
        double coef = static_cast<double>(factorial(n - 1)) * ((n % 2 == 1) ? 1.0 : -1.0);
        parts.clear();
        for (std::size_t s : p.block_sizes()) {
            coef *= rising[s];
            parts.push_back(components[s - 1]);
        }
        total.axpy(coef, place_on_partition(parts, p, cap));
    });
    total *= 1.0 / (static_cast<double>(factorial(N - 1)) * abar);
    return total;
}

Tensor moment_tensor_from_diagonals(const DirichletParam& dp, std::size_t N, std::size_t cap) {
    if (N == 0) throw std::invalid_argument("moment tensor order must be >= 1");
    std::vector<Tensor> diagonals;
    for (std::size_t s = 1; s <= N; ++s) diagonals.push_back(diag_tensor(dp.atilde(), s, cap));
    return ewens_expansion(dp.abar(), diagonals, cap);
}

Tensor diagonal_from_moments(const DirichletParam& dp, std::size_t N, std::size_t cap) {
    if (N == 0) throw std::invalid_argument("diagonal order must be >= 1");
    std::vector<Tensor> moments;
    for (std::size_t s = 1; s <= N; ++s) moments.push_back(moment_tensor_closed(dp, s, cap));
    return inverse_ewens_expansion(dp.abar(), moments, cap);
}

std::vector<double> linear_moments_recursive(const DirichletParam& dp, std::span<const double> x,
                                             std::size_t N_max) {
    if (x.size() != dp.K()) throw std::invalid_argument("x length must equal K");
    const double abar = dp.abar();
    // xbar[d] = sum_k alpha_k x_k^d, d = 1..N_max. The unnormalised alpha is
    // what makes the Bell-polynomial recursion close; it agrees with the
    // atilde-weighted sum only when abar = 1.
    std::vector<double> xbar(N_max + 1, 0.0);
    for (std::size_t k = 0; k < dp.K(); ++k) {
        double pw = 1.0;
        for (std::size_t d = 1; d <= N_max; ++d) {
            pw *= x[k];
            xbar[d] += dp.alpha()[k] * pw;
        }
    }
    // log c_n = log abar^{[n]} - log n!
    std::vector<double> log_c(N_max + 1);
    for (std::size_t n = 0; n <= N_max; ++n)
        log_c[n] = log_rising_factorial(abar, n) - std::lgamma(static_cast<double>(n) + 1.0);

    std::vector<double> M(N_max + 1, 0.0);
    M[0] = 1.0;
    for (std::size_t n = 0; n < N_max; ++n) {
        double s = 0.0;
        for (std::size_t l = 0; l <= n; ++l)
            s += xbar[l + 1] * std::exp(log_c[n - l] - log_c[n + 1]) * M[n - l];
        M[n + 1] = s / static_cast<double>(n + 1);
    }
    return M;
}

std::vector<double> sample_dirichlet(std::span<const double> alpha, RngStream& rng) {
    const std::size_t K = alpha.size();
    if (K == 0) throw std::invalid_argument("empty Dirichlet parameter");
    if (K == 1) return {1.0};
    std::vector<double> log_g(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double a = alpha[k];
        if (!(a > 0.0)) throw std::invalid_argument("Dirichlet parameters must be positive");
        if (a >= 1.0) {
            log_g[k] = std::log(std::gamma_distribution<double>(a, 1.0)(rng));
        } else {
            // Gamma(a) = Gamma(a+1) * U^{1/a}, kept in log-space to avoid underflow.
            const double g = std::gamma_distribution<double>(a + 1.0, 1.0)(rng);
            double u = rng.uniform();
            while (u <= 0.0) u = rng.uniform();
            log_g[k] = std::log(g) + std::log(u) / a;
        }
    }
    const double mx = *std::max_element(log_g.begin(), log_g.end());
    std::vector<double> q(K);
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) total += (q[k] = std::exp(log_g[k] - mx));
    for (double& v : q) v /= total;
    return q;
}

MonteCarloEstimate monte_carlo_linear_moment(const DirichletParam& dp, std::span<const double> x,
                                             std::size_t N, std::size_t m, RngStream& rng) {
    return monte_carlo_linear_moments(dp, x, N, m, rng)[N];
}

std::vector<MonteCarloEstimate> monte_carlo_linear_moments(const DirichletParam& dp, std::span<const double> x,
                                                           std::size_t N_max, std::size_t m, RngStream& rng) {
    if (m < 2) throw std::invalid_argument("Monte Carlo moment needs m >= 2");
    if (x.size() != dp.K()) throw std::invalid_argument("x length must equal K");
    // Welford accumulation of <q, x>^N for each N.
    std::vector<double> mean(N_max + 1, 0.0), m2(N_max + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const auto q = sample_dirichlet(dp, rng);
        // <q, x> written as x_0 + sum q_k (x_k - x_0), exact for constant x.
        double ip = x[0];
        for (std::size_t k = 1; k < q.size(); ++k) ip += q[k] * (x[k] - x[0]);
        for (std::size_t N = 0; N <= N_max; ++N) {
            const double v = std::pow(ip, static_cast<double>(N));
            const double delta = v - mean[N];
            mean[N] += delta / static_cast<double>(i + 1);
            m2[N] += delta * (v - mean[N]);
        }
    }
    std::vector<MonteCarloEstimate> out(N_max + 1);
    for (std::size_t N = 0; N <= N_max; ++N) {
        const double var = m2[N] / static_cast<double>(m - 1);
        out[N] = {mean[N], std::sqrt(var / static_cast<double>(m))};
    }
    return out;
}

}  // namespace dirtensor
