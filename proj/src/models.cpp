#include "dirtensor/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace dirtensor {

MixingMeasure::MixingMeasure(std::vector<double> weights, TopicMatrix atoms)
    : weights_(std::move(weights)), atoms_(std::move(atoms)) {
    if (weights_.empty()) throw std::invalid_argument("mixing measure needs K >= 1");
    if (weights_.size() != atoms_.K())
        throw std::invalid_argument("weights length must equal the number of atoms");
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::invalid_argument("mixing weights must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("mixing weights must sum to 1");
}

std::vector<double> MixingMeasure::mean_topic() const {
    std::vector<double> out(V(), 0.0);
    for (std::size_t k = 0; k < K(); ++k)
        for (std::size_t v = 0; v < V(); ++v) out[v] += weights_[k] * atoms_(k, v);
    return out;
}

LdaParams::LdaParams(MixingMeasure g, double concentration)
    : mixing(std::move(g)), abar(concentration) {
    if (!(abar > 0.0) || !std::isfinite(abar))
        throw std::invalid_argument("concentration must be positive");
}

std::vector<double> LdaParams::alpha() const {
    std::vector<double> a = mixing.weights();
    for (double& v : a) v *= abar;
    return a;
}

DiscreteDensity::DiscreteDensity(std::size_t vocab, Tensor t) : V(vocab), N(t.order()), table(std::move(t)) {
    if (!table.is_cubical() || table.dim(0) != V)
        throw std::invalid_argument("density table must be V x ... x V");
}

void Corpus::validate() const {
    if (V == 0 || N == 0) throw std::invalid_argument("corpus needs V >= 1 and N >= 1");
    for (const auto& d : docs) {
        if (d.size() != N) throw std::invalid_argument("document length differs from N");
        for (std::size_t w : d)
            if (w >= V) throw std::invalid_argument("word id out of range");
    }
}

DiscreteDensity mixture_density(const MixingMeasure& G, std::size_t N, std::size_t cap) {
    return DiscreteDensity(G.V(), weighted_outer(diag_tensor(G.weights(), N, cap), G.atoms(), cap));
}

DiscreteDensity lda_density(const LdaParams& P, std::size_t N, std::size_t cap) {
    const Tensor Q = moment_tensor_closed(P.dirichlet(), N, cap);
    return DiscreteDensity(P.mixing.V(), weighted_outer(Q, P.mixing.atoms(), cap));
}

DiscreteDensity lda_from_mixture_marginals(const MixingMeasure& G, double abar, std::size_t N,
                                           std::size_t cap) {
    std::vector<Tensor> marginals;
    for (std::size_t s = 1; s <= N; ++s) marginals.push_back(mixture_density(G, s, cap).table);
    return DiscreteDensity(G.V(), ewens_expansion(abar, marginals, cap));
}

DiscreteDensity mixture_from_lda_marginals(const LdaParams& P, std::size_t N, std::size_t cap) {
    std::vector<Tensor> marginals;
    for (std::size_t s = 1; s <= N; ++s) marginals.push_back(lda_density(P, s, cap).table);
    return DiscreteDensity(P.mixing.V(), inverse_ewens_expansion(P.abar, marginals, cap));
}

DiscreteDensity marginalize(const DiscreteDensity& d, std::span<const std::size_t> coords) {
    if (coords.empty()) throw std::invalid_argument("marginalize: empty coordinate set");
    std::vector<std::size_t> keep(coords.begin(), coords.end());
    std::sort(keep.begin(), keep.end());
    if (std::adjacent_find(keep.begin(), keep.end()) != keep.end() || keep.back() >= d.N)
        throw std::invalid_argument("marginalize: coordinates must be distinct and < N");

    Tensor out = Tensor::cube(d.V, keep.size(), 0.0);
    std::vector<std::size_t> idx(d.N), sub(keep.size());
    for (std::size_t flat = 0; flat < d.table.size(); ++flat) {
        d.table.unravel(flat, idx);
        for (std::size_t i = 0; i < keep.size(); ++i) sub[i] = idx[keep[i]];
        out.at(sub) += d.table[flat];
    }
    return DiscreteDensity(d.V, std::move(out));
}

namespace {

std::vector<double> mixed_word_distribution(std::span<const double> q, const TopicMatrix& theta) {
    std::vector<double> w(theta.V(), 0.0);
    for (std::size_t k = 0; k < theta.K(); ++k)
        for (std::size_t v = 0; v < theta.V(); ++v) w[v] += q[k] * theta(k, v);
    return w;
}

}  // namespace

Corpus sample_corpus(const LdaParams& P, std::size_t N, std::size_t m, RngStream& rng) {
    if (m == 0 || N == 0) throw std::invalid_argument("sample_corpus: need m >= 1 and N >= 1");
    Corpus c{P.mixing.V(), N, {}};
    c.docs.reserve(m);
    const auto alpha = P.alpha();
    for (std::size_t i = 0; i < m; ++i) {
        const auto q = sample_dirichlet(alpha, rng);
        const auto w = mixed_word_distribution(q, P.mixing.atoms());
        Document doc(N);
        for (auto& x : doc) x = rng.categorical(w);
        c.docs.push_back(std::move(doc));
    }
    return c;
}

Document sample_fixed_allocation_doc(std::span<const double> q, const TopicMatrix& theta,
                                     std::size_t Ntilde, RngStream& rng) {
    if (q.size() != theta.K()) throw std::invalid_argument("allocation length must equal K");
    if (Ntilde == 0) throw std::invalid_argument("Ntilde must be >= 1");
    const auto w = mixed_word_distribution(q, theta);
    Document doc(Ntilde);
    for (auto& x : doc) x = rng.categorical(w);
    return doc;
}

LdaLoglikEvaluator::LdaLoglikEvaluator(std::size_t K, std::size_t N) : K_(K), N_(N) {
    if (K == 0 || N == 0) throw std::invalid_argument("evaluator needs K >= 1 and N >= 1");
    if (N > std::numeric_limits<std::uint16_t>::max())
        throw std::invalid_argument("document too long for the count-vector DP");
    compositions_.resize(N + 1);
    successor_.resize(N);
    compositions_[0].push_back(std::vector<std::uint16_t>(K, 0));
    for (std::size_t j = 0; j < N; ++j) {
        // Successors of a lexicographically sorted layer are collected, sorted
        // and deduplicated; ranks then come from a lookup table.
        std::map<std::vector<std::uint16_t>, std::uint32_t> rank;
        for (const auto& c : compositions_[j])
            for (std::size_t k = 0; k < K; ++k) {
                auto nxt = c;
                ++nxt[k];
                rank.emplace(std::move(nxt), 0);
            }
        std::uint32_t r = 0;
        auto& layer = compositions_[j + 1];
        layer.reserve(rank.size());
        for (auto& [c, idx] : rank) {
            idx = r++;
            layer.push_back(c);
        }
        auto& succ = successor_[j];
        succ.resize(compositions_[j].size() * K);
        for (std::size_t s = 0; s < compositions_[j].size(); ++s)
            for (std::size_t k = 0; k < K; ++k) {
                auto nxt = compositions_[j][s];
                ++nxt[k];
                succ[s * K + k] = rank.at(nxt);
            }
    }
    for (const auto& layer : compositions_) total_states_ += layer.size();
    cur_.reserve(compositions_[N].size());
    next_.reserve(compositions_[N].size());
}

double LdaLoglikEvaluator::operator()(const LdaParams& P, std::span<const std::size_t> doc) {
    const auto& G = P.mixing;
    if (G.K() != K_ || doc.size() != N_)
        throw std::invalid_argument("evaluator built for a different (K, N)");
    for (std::size_t w : doc)
        if (w >= G.V()) throw std::invalid_argument("word id out of range");
    const auto alpha = P.alpha();

    // Linear-space recursion with per-layer rescaling; log_scale collects the
    // factors divided out so far.
    double log_scale = 0.0;
    cur_.assign(1, 1.0);
    std::vector<double> weight(K_);
    for (std::size_t j = 0; j < N_; ++j) {
        for (std::size_t k = 0; k < K_; ++k) weight[k] = G.atoms()(k, doc[j]);
        const auto& layer = compositions_[j];
        const auto& succ = successor_[j];
        next_.assign(compositions_[j + 1].size(), 0.0);
        for (std::size_t s = 0; s < layer.size(); ++s) {
            const double c = cur_[s];
            if (c == 0.0) continue;
            for (std::size_t k = 0; k < K_; ++k)
                next_[succ[s * K_ + k]] += c * (alpha[k] + layer[s][k]) * weight[k];
        }
        const double mx = *std::max_element(next_.begin(), next_.end());
        if (!(mx > 0.0)) return -std::numeric_limits<double>::infinity();
        for (double& v : next_) v /= mx;
        log_scale += std::log(mx);
        std::swap(cur_, next_);
    }
    const double total = std::accumulate(cur_.begin(), cur_.end(), 0.0);
    return std::log(total) + log_scale - log_rising_factorial(P.abar, N_);
}

double lda_doc_loglik(const LdaParams& P, std::span<const std::size_t> doc) {
    LdaLoglikEvaluator eval(P.mixing.K(), doc.size());
    return eval(P, doc);
}

}  // namespace dirtensor
