#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dirtensor/combinatorics.hpp"
#include "dirtensor/rng.hpp"
#include "dirtensor/tensor.hpp"

namespace dirtensor {

/// Dirichlet parameter alpha with concentration abar = sum(alpha) and mean
/// atilde = alpha / abar.
class DirichletParam {
public:
    explicit DirichletParam(std::vector<double> alpha);
    /// alpha = abar * mean; `mean` must lie on the simplex.
    static DirichletParam from_mean(double abar, std::span<const double> mean);

    std::size_t K() const { return alpha_.size(); }
    const std::vector<double>& alpha() const { return alpha_; }
    double abar() const { return abar_; }
    const std::vector<double>& atilde() const { return atilde_; }

private:
    std::vector<double> alpha_;
    std::vector<double> atilde_;
    double abar_ = 0.0;
};

/// T_{(S_1..S_n)}(parts[0] (x) ... (x) parts[n-1]): the result at (k_1..k_N)
/// is prod_i parts[i](k restricted to block i). parts[i] must have order |S_i|.
Tensor place_on_partition(std::span<const Tensor> parts, const SetPartition& partition,
                          std::size_t cap = kDefaultElementCap);

/// Q^{(N)}_alpha from the closed form prod_k alpha_k^{[N_k]} / abar^{[N]}.
Tensor moment_tensor_closed(const DirichletParam& dp, std::size_t N,
                            std::size_t cap = kDefaultElementCap);

/// Q^{(N)}_alpha assembled from diagonal tensors with Ewens coefficients.
Tensor moment_tensor_from_diagonals(const DirichletParam& dp, std::size_t N,
                                    std::size_t cap = kDefaultElementCap);

/// diag_N(atilde) assembled from lower-order moment tensors (signed expansion).
Tensor diagonal_from_moments(const DirichletParam& dp, std::size_t N,
                             std::size_t cap = kDefaultElementCap);

/// (1/abar^{[N]}) sum_n abar^n sum_{P(N,n)} prod_i (|S_i|-1)! T_S((x)_i components[|S_i|-1]).
/// `components[s-1]` is the order-s building block (diag_s(atilde) or a mixture
/// marginal); N = components.size().
Tensor ewens_expansion(double abar, std::span<const Tensor> components,
                       std::size_t cap = kDefaultElementCap);

/// (1/((N-1)! abar)) sum_n (-1)^{n-1} (n-1)! sum_{P(N,n)} prod_i abar^{[|S_i|]}
/// T_S((x)_i components[|S_i|-1]), the inverse of ewens_expansion.
Tensor inverse_ewens_expansion(double abar, std::span<const Tensor> components,
                               std::size_t cap = kDefaultElementCap);

/// M_0..M_{N_max} with M_N = E <q, x>^N, q ~ Dir(alpha), by the order-N recursion
/// c_{N+1} M_{N+1} = (1/(N+1)) sum_l xbar_{l+1} c_{N-l} M_{N-l}, with
/// c_n = abar^{[n]}/n! and xbar_d = sum_k alpha_k x_k^d.
std::vector<double> linear_moments_recursive(const DirichletParam& dp, std::span<const double> x,
                                             std::size_t N_max);

/// Draw q ~ Dir(alpha) by Gamma normalisation (log-space for small shapes).
std::vector<double> sample_dirichlet(std::span<const double> alpha, RngStream& rng);
inline std::vector<double> sample_dirichlet(const DirichletParam& dp, RngStream& rng) {
    return sample_dirichlet(dp.alpha(), rng);
}

struct MonteCarloEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// Sample mean and standard error of <q, x>^N over m Dirichlet draws.
MonteCarloEstimate monte_carlo_linear_moment(const DirichletParam& dp, std::span<const double> x,
                                             std::size_t N, std::size_t m, RngStream& rng);

/// Same for every order 0..N_max from one set of m draws; entry N is order N.
std::vector<MonteCarloEstimate> monte_carlo_linear_moments(const DirichletParam& dp, std::span<const double> x,
                                                           std::size_t N_max, std::size_t m, RngStream& rng);

}  // namespace dirtensor
