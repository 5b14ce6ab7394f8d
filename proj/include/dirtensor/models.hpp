#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dirtensor/dirichlet.hpp"
#include "dirtensor/rng.hpp"
#include "dirtensor/tensor.hpp"

namespace dirtensor {

/// G = sum_k weights[k] delta_{atoms.row(k)}.
class MixingMeasure {
public:
    MixingMeasure() = default;
    MixingMeasure(std::vector<double> weights, TopicMatrix atoms);

    std::size_t K() const { return weights_.size(); }
    std::size_t V() const { return atoms_.V(); }
    const std::vector<double>& weights() const { return weights_; }
    const TopicMatrix& atoms() const { return atoms_; }
    std::span<const double> atom(std::size_t k) const { return atoms_.row(k); }

    /// sum_k w_k theta_k
    std::vector<double> mean_topic() const;

private:
    std::vector<double> weights_;
    TopicMatrix atoms_;
};

/// LDA parameters (G, abar); alpha = abar * G.weights.
struct LdaParams {
    MixingMeasure mixing;
    double abar = 1.0;

    LdaParams(MixingMeasure g, double concentration);
    DirichletParam dirichlet() const { return DirichletParam::from_mean(abar, mixing.weights()); }
    std::vector<double> alpha() const;
};

/// Probability table on [V]^N.
struct DiscreteDensity {
    std::size_t V = 0;
    std::size_t N = 0;
    Tensor table;

    DiscreteDensity() = default;
    DiscreteDensity(std::size_t vocab, Tensor t);
    double at(std::span<const std::size_t> x) const { return table.at(x); }
};

using Document = std::vector<std::size_t>;

struct Corpus {
    std::size_t V = 0;
    std::size_t N = 0;
    std::vector<Document> docs;

    std::size_t m() const { return docs.size(); }
    /// Throws if any document has the wrong length or an out-of-range word.
    void validate() const;
};

/// p^M_{G,N}(x) = sum_k w_k prod_j theta_{k x_j}.
DiscreteDensity mixture_density(const MixingMeasure& G, std::size_t N,
                                std::size_t cap = kDefaultElementCap);

/// p^L_{G,N} = Q^{(N)}_alpha[Theta^{(x)N}].
DiscreteDensity lda_density(const LdaParams& P, std::size_t N,
                            std::size_t cap = kDefaultElementCap);

/// LDA density assembled from products of mixture marginals (Ewens weights).
DiscreteDensity lda_from_mixture_marginals(const MixingMeasure& G, double abar, std::size_t N,
                                           std::size_t cap = kDefaultElementCap);

/// Mixture density assembled from products of LDA marginals (signed expansion).
DiscreteDensity mixture_from_lda_marginals(const LdaParams& P, std::size_t N,
                                           std::size_t cap = kDefaultElementCap);

/// Marginal on the coordinates in `coords` (0-based, any order; result keeps
/// ascending coordinate order).
DiscreteDensity marginalize(const DiscreteDensity& d, std::span<const std::size_t> coords);

Corpus sample_corpus(const LdaParams& P, std::size_t N, std::size_t m, RngStream& rng);

/// Ntilde i.i.d. words from the categorical q^T Theta.
Document sample_fixed_allocation_doc(std::span<const double> q, const TopicMatrix& theta,
                                     std::size_t Ntilde, RngStream& rng);

/// Exact log p^L_{G,N}(doc) by dynamic programming over topic-count vectors.
double lda_doc_loglik(const LdaParams& P, std::span<const std::size_t> doc);

/// Reusable workspace for repeated lda_doc_loglik calls with fixed (K, N).
class LdaLoglikEvaluator {
public:
    LdaLoglikEvaluator(std::size_t K, std::size_t N);
    double operator()(const LdaParams& P, std::span<const std::size_t> doc);
    std::size_t num_states() const { return total_states_; }

private:
    std::size_t K_, N_;
    std::size_t total_states_ = 0;
    // compositions[j] lists count vectors summing to j, in lexicographic order.
    std::vector<std::vector<std::vector<std::uint16_t>>> compositions_;
    // successor[j][s*K + k] = rank in layer j+1 of compositions[j][s] + e_k
    std::vector<std::vector<std::uint32_t>> successor_;
    std::vector<double> cur_, next_;
};

}  // namespace dirtensor
