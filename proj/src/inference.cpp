#include "dirtensor/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "dirtensor/dirichlet.hpp"
#include "dirtensor/identifiability.hpp"
#include "dirtensor/metrics.hpp"
#include "dirtensor/parallel.hpp"

namespace dirtensor {

PriorSpec PriorSpec::uniform(std::size_t K, std::size_t V, double floor) {
    return PriorSpec{std::vector<double>(K, 1.0), std::vector<double>(V, 1.0), floor};
}

bool PriorSpec::regular() const {
    auto le1 = [](double g) { return g <= 1.0; };
    return std::all_of(weight_prior.begin(), weight_prior.end(), le1) &&
           std::all_of(topic_prior.begin(), topic_prior.end(), le1);
}

void PriorSpec::validate(std::size_t K, std::size_t V) const {
    if (weight_prior.size() != K) throw std::invalid_argument("weight prior length must equal K");
    if (topic_prior.size() != V) throw std::invalid_argument("topic prior length must equal V");
    for (double g : weight_prior)
        if (!(g > 0.0)) throw std::invalid_argument("prior hyperparameters must be positive");
    for (double g : topic_prior)
        if (!(g > 0.0)) throw std::invalid_argument("prior hyperparameters must be positive");
    if (!(topic_floor >= 0.0) || topic_floor * static_cast<double>(V) >= 1.0)
        throw std::invalid_argument("topic floor must lie in [0, 1/V)");
}

std::string to_string(SamplerKind s) { return s == SamplerKind::metropolis ? "metropolis" : "collapsed_gibbs"; }

SamplerKind sampler_from_string(const std::string& s) {
    if (s == "metropolis") return SamplerKind::metropolis;
    if (s == "collapsed_gibbs" || s == "gibbs") return SamplerKind::collapsed_gibbs;
    throw std::invalid_argument("unknown sampler: " + s);
}

namespace {

constexpr double kMinWeight = 1e-300;

double log_dirichlet_kernel(std::span<const double> p, std::span<const double> gamma) {
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) s += (gamma[k] - 1.0) * std::log(p[k]);
    return s;
}

double sum_log(std::span<const double> p) {
    double s = 0.0;
    for (double v : p) s += std::log(v);
    return s;
}

// Random walk in additive log-ratio coordinates y_k = log(p_k / p_last).
// Returns the proposal; log_jac receives sum log p' - sum log p, the change in
// log|dp/dy|.
std::vector<double> alr_proposal(std::span<const double> p, double scale, RngStream& rng, double& log_jac) {
    const std::size_t K = p.size();
    std::vector<double> y(K, 0.0);
    const double last = std::log(p[K - 1]);
    for (std::size_t k = 0; k + 1 < K; ++k) y[k] = std::log(p[k]) - last + scale * rng.normal();
    const double mx = *std::max_element(y.begin(), y.end());
    std::vector<double> out(K);
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) total += (out[k] = std::exp(y[k] - mx));
    for (auto& v : out) v /= total;
    log_jac = sum_log(out) - sum_log(p);
    return out;
}

bool above(std::span<const double> p, double floor) {
    return std::all_of(p.begin(), p.end(), [&](double v) { return v >= floor && v > 0.0; });
}

struct Adapter {
    double scale = 0.5;
    std::size_t tries = 0, accepts = 0;      // since last adaptation
    std::size_t total_tries = 0, total_accepts = 0;  // after burn-in

    void record(bool accepted, bool burning) {
        if (burning) {
            ++tries;
            accepts += accepted;
            if (tries == 50) {
                const double rate = static_cast<double>(accepts) / 50.0;
                if (rate > 0.4) scale *= 1.25;
                if (rate < 0.2) scale /= 1.25;
                tries = accepts = 0;
            }
        } else {
            ++total_tries;
            total_accepts += accepted;
        }
    }
    double rate() const {
        return total_tries ? static_cast<double>(total_accepts) / static_cast<double>(total_tries) : 0.0;
    }
};

std::vector<double> draw_topic(std::span<const double> gamma, double floor, RngStream& rng) {
    for (int attempt = 0; attempt < 100000; ++attempt) {
        auto t = sample_dirichlet(gamma, rng);
        if (above(t, floor)) return t;
    }
    throw std::runtime_error("topic floor rejection sampler did not terminate");
}

std::vector<double> draw_weights(std::span<const double> gamma, RngStream& rng) {
    auto w = sample_dirichlet(gamma, rng);
    for (auto& v : w) v = std::max(v, kMinWeight);
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& v : w) v /= s;
    return w;
}

MixingMeasure make_measure(const std::vector<double>& w, const std::vector<std::vector<double>>& theta) {
    return MixingMeasure(w, TopicMatrix(theta));
}

std::vector<std::size_t> word_counts(const Document& d, std::size_t V) {
    std::vector<std::size_t> c(V, 0);
    for (auto v : d) {
        if (v >= V) throw std::invalid_argument("extra document has a word outside the vocabulary");
        ++c[v];
    }
    return c;
}

double extra_loglik(const std::vector<std::size_t>& counts, std::span<const double> q,
                    const std::vector<std::vector<double>>& theta) {
    double s = 0.0;
    for (std::size_t v = 0; v < counts.size(); ++v) {
        if (!counts[v]) continue;
        double p = 0.0;
        for (std::size_t k = 0; k < q.size(); ++k) p += q[k] * theta[k][v];
        s += static_cast<double>(counts[v]) * std::log(p);
    }
    return s;
}

// log Dir(q; alpha) including the normaliser, since alpha moves with the weights.
double log_dirichlet_density(std::span<const double> q, std::span<const double> alpha) {
    double abar = 0.0, s = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
        abar += alpha[k];
        s += (alpha[k] - 1.0) * std::log(q[k]) - std::lgamma(alpha[k]);
    }
    return s + std::lgamma(abar);
}

struct State {
    std::vector<double> w;
    std::vector<std::vector<double>> theta;
    std::vector<double> q;  // extra document proportions
};

State initial_state(std::size_t K, std::size_t V, const PriorSpec& prior, const McmcOptions& opts,
                    bool extra, double abar, RngStream& rng) {
    State s;
    if (opts.init) {
        if (opts.init->K() != K || opts.init->V() != V)
            throw std::invalid_argument("initial measure has the wrong shape");
        s.w = opts.init->weights();
        for (auto& v : s.w) v = std::max(v, kMinWeight);
        s.theta = opts.init->atoms().rows();
        for (auto& row : s.theta)
            if (!above(row, prior.topic_floor))
                throw std::invalid_argument("initial topics violate the topic floor");
    } else {
        s.w = draw_weights(prior.weight_prior, rng);
        for (std::size_t k = 0; k < K; ++k) s.theta.push_back(draw_topic(prior.topic_prior, prior.topic_floor, rng));
    }
    if (extra) {
        std::vector<double> alpha(K);
        for (std::size_t k = 0; k < K; ++k) alpha[k] = abar * s.w[k];
        s.q = draw_weights(alpha, rng);
    }
    return s;
}

std::size_t resolve_thin(const McmcOptions& o) {
    if (o.thin) return o.thin;
    const std::size_t kept = o.steps - o.burn_in;
    const std::size_t cap = std::max<std::size_t>(o.max_samples, 1);
    return std::max<std::size_t>(1, (kept + cap - 1) / cap);
}

Chain run_metropolis(const Corpus& corpus, std::size_t K, double abar, const PriorSpec& prior,
                     const McmcOptions& opts, RngStream& rng) {
    const std::size_t V = corpus.V;
    const bool extra = opts.extra_doc.has_value();
    const auto extra_counts = extra ? word_counts(*opts.extra_doc, V) : std::vector<std::size_t>{};
    State s = initial_state(K, V, prior, opts, extra, abar, rng);
    LdaLoglikEvaluator eval(K, corpus.N);

    auto corpus_loglik = [&](const std::vector<double>& w, const std::vector<std::vector<double>>& theta) {
        LdaParams P(make_measure(w, theta), abar);
        double total = 0.0;
        for (const auto& d : corpus.docs) {
            total += eval(P, d);
            if (!std::isfinite(total)) break;
        }
        return total;
    };
    auto alpha_of = [&](const std::vector<double>& w) {
        std::vector<double> a(K);
        for (std::size_t k = 0; k < K; ++k) a[k] = abar * w[k];
        return a;
    };
    auto extra_term = [&](const std::vector<double>& w, const std::vector<std::vector<double>>& theta,
                          const std::vector<double>& q) {
        if (!extra) return 0.0;
        return log_dirichlet_density(q, alpha_of(w)) + extra_loglik(extra_counts, q, theta);
    };

    double ll = corpus_loglik(s.w, s.theta);
    if (!std::isfinite(ll)) throw std::runtime_error("initial state has zero likelihood");
    double ex = extra_term(s.w, s.theta, s.q);

    auto log_prior = [&](const State& st) {
        double lp = log_dirichlet_kernel(st.w, prior.weight_prior);
        for (const auto& row : st.theta) lp += log_dirichlet_kernel(row, prior.topic_prior);
        return lp;
    };

    std::vector<Adapter> adapt(1 + K + (extra ? 1 : 0));
    Chain chain;
    chain.seed = rng.seed();
    chain.steps = opts.steps;
    chain.burn_in = opts.burn_in;
    chain.thin = resolve_thin(opts);

    for (std::size_t step = 0; step < opts.steps; ++step) {
        const bool burning = step < opts.burn_in;
        {  // weights
            double lj = 0.0;
            auto w2 = alr_proposal(s.w, adapt[0].scale, rng, lj);
            bool ok = false;
            if (above(w2, kMinWeight)) {
                const double ll2 = corpus_loglik(w2, s.theta);
                const double ex2 = extra_term(w2, s.theta, s.q);
                const double logr = ll2 + ex2 + log_dirichlet_kernel(w2, prior.weight_prior) -
                                    (ll + ex + log_dirichlet_kernel(s.w, prior.weight_prior)) + lj;
                if (std::isfinite(ll2) && std::log(rng.uniform()) < logr) {
                    s.w = std::move(w2);
                    ll = ll2;
                    ex = ex2;
                    ok = true;
                }
            }
            adapt[0].record(ok, burning);
        }
        for (std::size_t k = 0; k < K; ++k) {
            double lj = 0.0;
            auto row = alr_proposal(s.theta[k], adapt[1 + k].scale, rng, lj);
            bool ok = false;
            if (above(row, prior.topic_floor)) {
                auto theta2 = s.theta;
                theta2[k] = std::move(row);
                const double ll2 = corpus_loglik(s.w, theta2);
                const double ex2 = extra_term(s.w, theta2, s.q);
                const double logr = ll2 + ex2 + log_dirichlet_kernel(theta2[k], prior.topic_prior) -
                                    (ll + ex + log_dirichlet_kernel(s.theta[k], prior.topic_prior)) + lj;
                if (std::isfinite(ll2) && std::log(rng.uniform()) < logr) {
                    s.theta = std::move(theta2);
                    ll = ll2;
                    ex = ex2;
                    ok = true;
                }
            }
            adapt[1 + k].record(ok, burning);
        }
        if (extra) {
            double lj = 0.0;
            auto q2 = alr_proposal(s.q, adapt[1 + K].scale, rng, lj);
            bool ok = false;
            if (above(q2, kMinWeight)) {
                const double ex2 = extra_term(s.w, s.theta, q2);
                if (std::log(rng.uniform()) < ex2 - ex + lj) {
                    s.q = std::move(q2);
                    ex = ex2;
                    ok = true;
                }
            }
            adapt[1 + K].record(ok, burning);
        }
        if (!burning && (step - opts.burn_in) % chain.thin == 0)
            chain.samples.push_back({make_measure(s.w, s.theta), ll + ex + log_prior(s), s.q});
    }
    for (const auto& a : adapt) chain.acceptance.push_back(a.rate());
    return chain;
}

Chain run_gibbs(const Corpus& corpus, std::size_t K, double abar, const PriorSpec& prior,
                const McmcOptions& opts, RngStream& rng) {
    const std::size_t V = corpus.V, m = corpus.m();
    const bool extra = opts.extra_doc.has_value();
    State s = initial_state(K, V, prior, opts, extra, abar, rng);

    // Flat token array; the extra document (if any) is document m.
    std::vector<std::size_t> words, doc_of, doc_len;
    for (std::size_t i = 0; i < m; ++i) {
        for (auto v : corpus.docs[i]) {
            words.push_back(v);
            doc_of.push_back(i);
        }
        doc_len.push_back(corpus.docs[i].size());
    }
    if (extra) {
        for (auto v : *opts.extra_doc) {
            if (v >= V) throw std::invalid_argument("extra document has a word outside the vocabulary");
            words.push_back(v);
            doc_of.push_back(m);
        }
        doc_len.push_back(opts.extra_doc->size());
    }
    const std::size_t ndocs = doc_len.size();
    const double gsum = std::accumulate(prior.topic_prior.begin(), prior.topic_prior.end(), 0.0);
    std::vector<std::uint32_t> z(words.size());
    std::vector<double> ndk(ndocs * K, 0.0), nkv(K * V, 0.0), nk(K, 0.0);
    std::vector<double> alpha(K), p(K);
    auto set_alpha = [&] {
        for (std::size_t k = 0; k < K; ++k) alpha[k] = abar * s.w[k];
    };
    set_alpha();

    auto draw = [&]() {
        double total = 0.0;
        for (double v : p) total += v;
        double u = rng.uniform() * total;
        for (std::size_t k = 0; k < K; ++k) {
            u -= p[k];
            if (u < 0.0) return k;
        }
        for (std::size_t k = K; k-- > 0;)
            if (p[k] > 0.0) return k;
        return K - 1;
    };
    auto add = [&](std::size_t t, std::size_t k, double sign) {
        ndk[doc_of[t] * K + k] += sign;
        nkv[k * V + words[t]] += sign;
        nk[k] += sign;
    };
    // The initial assignment uses the starting topics; afterwards topics are
    // integrated out.
    for (std::size_t t = 0; t < words.size(); ++t) {
        const std::size_t d = doc_of[t], v = words[t];
        for (std::size_t k = 0; k < K; ++k) p[k] = (ndk[d * K + k] + alpha[k]) * s.theta[k][v];
        const std::size_t k = draw();
        z[t] = static_cast<std::uint32_t>(k);
        add(t, k, 1.0);
    }

    // Dirichlet-multinomial likelihood of the weights given the counts.
    auto weight_loglik = [&](const std::vector<double>& w) {
        std::vector<double> a(K);
        double lg_a = 0.0;
        for (std::size_t k = 0; k < K; ++k) lg_a += std::lgamma(a[k] = abar * w[k]);
        double ll = 0.0;
        for (std::size_t i = 0; i < ndocs; ++i) {
            ll += std::lgamma(abar) - std::lgamma(abar + static_cast<double>(doc_len[i])) - lg_a;
            for (std::size_t k = 0; k < K; ++k) ll += std::lgamma(ndk[i * K + k] + a[k]);
        }
        return ll + log_dirichlet_kernel(w, prior.weight_prior);
    };

    Adapter adapt;
    Chain chain;
    chain.seed = rng.seed();
    chain.steps = opts.steps;
    chain.burn_in = opts.burn_in;
    chain.thin = resolve_thin(opts);
    std::vector<double> gamma(V);

    for (std::size_t step = 0; step < opts.steps; ++step) {
        const bool burning = step < opts.burn_in;
        for (std::size_t t = 0; t < words.size(); ++t) {
            const std::size_t d = doc_of[t], v = words[t];
            add(t, z[t], -1.0);
            for (std::size_t k = 0; k < K; ++k)
                p[k] = (ndk[d * K + k] + alpha[k]) * (nkv[k * V + v] + prior.topic_prior[v]) / (nk[k] + gsum);
            const std::size_t k = draw();
            z[t] = static_cast<std::uint32_t>(k);
            add(t, k, 1.0);
        }
        double cur = weight_loglik(s.w);
        for (int rep = 0; rep < 3; ++rep) {
            double lj = 0.0;
            auto w2 = alr_proposal(s.w, adapt.scale, rng, lj);
            bool ok = false;
            if (above(w2, kMinWeight)) {
                const double nxt = weight_loglik(w2);
                if (std::log(rng.uniform()) < nxt - cur + lj) {
                    s.w = std::move(w2);
                    cur = nxt;
                    ok = true;
                }
            }
            adapt.record(ok, burning);
        }
        set_alpha();
        if (!burning && (step - opts.burn_in) % chain.thin == 0) {
            // Topics and extra proportions are drawn from their conditionals
            // given the current assignment.
            double lt = cur;
            for (std::size_t k = 0; k < K; ++k) {
                for (std::size_t v = 0; v < V; ++v) gamma[v] = prior.topic_prior[v] + nkv[k * V + v];
                s.theta[k] = draw_topic(gamma, prior.topic_floor, rng);
                lt += log_dirichlet_kernel(s.theta[k], gamma);
            }
            if (extra) {
                std::vector<double> g(K);
                for (std::size_t k = 0; k < K; ++k) g[k] = alpha[k] + ndk[m * K + k];
                s.q = draw_weights(g, rng);
            }
            chain.samples.push_back({make_measure(s.w, s.theta), lt, s.q});
        }
    }
    chain.acceptance.push_back(adapt.rate());
    return chain;
}

}  // namespace

Chain run_mcmc(const Corpus& corpus, std::size_t K, double abar, const PriorSpec& prior,
               const McmcOptions& opts, RngStream& rng) {
    corpus.validate();
    if (K == 0) throw std::invalid_argument("K must be >= 1");
    if (!(abar > 0.0) || !std::isfinite(abar)) throw std::invalid_argument("concentration must be positive");
    if (opts.steps <= opts.burn_in) throw std::invalid_argument("steps must exceed burn_in");
    prior.validate(K, corpus.V);
    if (opts.sampler == SamplerKind::metropolis) return run_metropolis(corpus, K, abar, prior, opts, rng);
    return run_gibbs(corpus, K, abar, prior, opts, rng);
}

double quantile(std::vector<double> v, double p) {
    if (v.empty()) throw std::invalid_argument("quantile of an empty sample");
    std::sort(v.begin(), v.end());
    const double h = p * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

WSummary posterior_w_summary(const Chain& chain, const MixingMeasure& G0, double r) {
    if (chain.samples.empty()) throw std::invalid_argument("empty chain");
    std::vector<double> w;
    w.reserve(chain.samples.size());
    for (const auto& s : chain.samples) w.push_back(wasserstein(s.G, G0, r).value);
    WSummary out;
    out.n = w.size();
    out.mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
    out.q25 = quantile(w, 0.25);
    out.q75 = quantile(w, 0.75);
    return out;
}

std::optional<SlopeFit> fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_slope: length mismatch");
    const std::size_t n = x.size();
    if (n < 3) return std::nullopt;
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) return std::nullopt;
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - f.intercept - f.slope * x[i];
        ssr += e * e;
    }
    f.slope_se = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    return f;
}

MixingMeasure contraction_truth(std::size_t V, std::size_t K_random, bool dependent_topic,
                                const RngStream& rng, double floor) {
    if (K_random == 0 || V < 2) throw std::invalid_argument("contraction truth needs K_random >= 1 and V >= 2");
    RngStream local = rng.derive({0x7072uLL});
    std::vector<std::vector<double>> rows;
    std::vector<double> ones(V, 1.0);
    for (std::size_t k = 0; k < K_random; ++k) rows.push_back(draw_topic(ones, floor, local));
    if (dependent_topic) {
        std::vector<double> avg(V, 0.0);
        for (const auto& r : rows)
            for (std::size_t v = 0; v < V; ++v) avg[v] += r[v] / static_cast<double>(K_random);
        rows.push_back(avg);
    }
    const std::size_t K0 = rows.size();
    return MixingMeasure(std::vector<double>(K0, 1.0 / static_cast<double>(K0)), TopicMatrix::unchecked(K0, V, [&] {
                             std::vector<double> flat;
                             for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
                             return flat;
                         }()));
}

MixingMeasure pad_measure(const MixingMeasure& G0, std::size_t K) {
    const std::size_t K0 = G0.K();
    if (K < K0) throw std::invalid_argument("pad_measure needs K >= K0");
    std::vector<std::size_t> source(K);
    std::vector<std::size_t> copies(K0, 1);
    for (std::size_t j = 0; j < K; ++j) {
        source[j] = j < K0 ? j : (j - K0) % K0;
        if (j >= K0) ++copies[source[j]];
    }
    std::vector<double> w(K), flat;
    for (std::size_t j = 0; j < K; ++j) {
        w[j] = G0.weights()[source[j]] / static_cast<double>(copies[source[j]]);
        auto row = G0.atom(source[j]);
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return MixingMeasure(std::move(w), TopicMatrix::unchecked(K, G0.V(), std::move(flat)));
}

ContractionResult contraction_experiment(const ContractionConfig& cfg) {
    if (cfg.m_grid.empty() || cfg.replications == 0) throw std::invalid_argument("empty contraction grid");
    const RngStream root(cfg.seed);
    ContractionResult res;
    res.config = cfg;
    res.truth = contraction_truth(cfg.V, cfg.K_random, cfg.dependent_topic, root, cfg.topic_floor);
    const auto prior = PriorSpec::uniform(cfg.K_fit, cfg.V, cfg.topic_floor);
    const LdaParams truth(res.truth, cfg.abar);
    auto mcmc = cfg.mcmc;
    if (cfg.init_at_truth) mcmc.init = pad_measure(res.truth, cfg.K_fit);

    const std::size_t R = cfg.replications;
    res.rows.resize(cfg.m_grid.size() * R);
    parallel_for(res.rows.size(), cfg.jobs, [&](std::size_t task) {
        const std::size_t gi = task / R, rep = task % R;
        const std::size_t m = cfg.m_grid[gi];
        RngStream data_rng = root.derive({1, m, rep});
        RngStream chain_rng = root.derive({2, m, rep, cfg.K_fit});
        ContractionRow row;
        row.m = m;
        row.replication = rep;
        row.seed = chain_rng.seed();
        try {
            auto corpus = sample_corpus(truth, cfg.N, m, data_rng);
            auto chain = run_mcmc(corpus, cfg.K_fit, cfg.abar, prior, mcmc, chain_rng);
            row.w = posterior_w_summary(chain, res.truth, cfg.r);
        } catch (const std::exception&) {
            row.failed = true;
        }
        res.rows[task] = row;
    });

    std::vector<double> lx, ly;
    for (std::size_t gi = 0; gi < cfg.m_grid.size(); ++gi) {
        std::vector<double> means;
        for (std::size_t rep = 0; rep < R; ++rep) {
            const auto& row = res.rows[gi * R + rep];
            if (row.failed) {
                ++res.failures;
                continue;
            }
            means.push_back(row.w.mean);
        }
        WSummary s;
        s.n = means.size();
        if (!means.empty()) {
            s.mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
            s.q25 = quantile(means, 0.25);
            s.q75 = quantile(means, 0.75);
            lx.push_back(std::log(static_cast<double>(cfg.m_grid[gi])));
            ly.push_back(std::log(s.mean));
        }
        res.per_m.push_back(s);
    }
    res.slope = fit_slope(lx, ly);
    return res;
}

MixingMeasure allocation_truth(std::size_t V, std::size_t K0, const RngStream& rng) {
    return desk_instance(TopicCondition::linearly_independent, K0, V, rng.derive({0xa110cuLL}));
}

std::vector<std::size_t> align_labels(const MixingMeasure& fitted, const MixingMeasure& truth) {
    const auto plan = wasserstein(fitted, truth, 1.0).plan;
    std::vector<std::size_t> map(fitted.K(), 0);
    for (std::size_t i = 0; i < fitted.K(); ++i) {
        double best = -1.0;
        for (std::size_t j = 0; j < truth.K(); ++j)
            if (plan(i, j) > best) {
                best = plan(i, j);
                map[i] = j;
            }
    }
    return map;
}

AllocationResult allocation_experiment(const AllocationConfig& cfg) {
    if (cfg.m_grid.size() != cfg.ntilde_grid.size() || cfg.m_grid.empty())
        throw std::invalid_argument("m_grid and ntilde_grid must be nonempty and of equal length");
    if (cfg.q_true.size() != cfg.K0) throw std::invalid_argument("q_true length must equal K0");
    const RngStream root(cfg.seed);
    AllocationResult res;
    res.config = cfg;
    res.truth = allocation_truth(cfg.V, cfg.K0, root);
    const auto prior = PriorSpec::uniform(cfg.K0, cfg.V, cfg.topic_floor);
    const LdaParams truth(res.truth, cfg.abar);
    auto mcmc = cfg.mcmc;
    if (cfg.init_at_truth) mcmc.init = res.truth;

    const std::size_t R = cfg.replications;
    const std::size_t m_max = *std::max_element(cfg.m_grid.begin(), cfg.m_grid.end());
    const std::size_t n_max = *std::max_element(cfg.ntilde_grid.begin(), cfg.ntilde_grid.end());
    res.rows.resize(cfg.m_grid.size() * R);
    parallel_for(res.rows.size(), cfg.jobs, [&](std::size_t task) {
        const std::size_t gi = task / R, rep = task % R;
        AllocationRow row;
        row.m = cfg.m_grid[gi];
        row.ntilde = cfg.ntilde_grid[gi];
        row.replication = rep;
        // Grid points within a replication share data: each uses a prefix of
        // the largest corpus and of the longest extra document.
        RngStream corpus_rng = root.derive({1, rep});
        RngStream extra_rng = root.derive({3, rep});
        RngStream chain_rng = root.derive({2, rep});
        row.seed = chain_rng.seed();
        try {
            auto corpus = sample_corpus(truth, cfg.N, m_max, corpus_rng);
            corpus.docs.resize(row.m);
            auto opts = mcmc;
            opts.extra_doc = sample_fixed_allocation_doc(cfg.q_true, res.truth.atoms(), n_max, extra_rng);
            opts.extra_doc->resize(row.ntilde);
            auto chain = run_mcmc(corpus, cfg.K0, cfg.abar, prior, opts, chain_rng);
            // Each retained draw is aligned to the truth before averaging, so
            // label switching between draws does not blur the mean.
            std::vector<double> qmean(cfg.K0, 0.0);
            for (const auto& s : chain.samples) {
                const auto map = align_labels(s.G, res.truth);
                for (std::size_t k = 0; k < cfg.K0; ++k) qmean[map[k]] += s.q_extra[k];
            }
            double err = 0.0;
            for (std::size_t k = 0; k < cfg.K0; ++k) {
                const double d = qmean[k] / static_cast<double>(chain.samples.size()) - cfg.q_true[k];
                err += d * d;
            }
            row.error = std::sqrt(err);
        } catch (const std::exception&) {
            row.failed = true;
        }
        res.rows[task] = row;
    });
    for (std::size_t gi = 0; gi < cfg.m_grid.size(); ++gi) {
        double s = 0.0;
        std::size_t n = 0;
        for (std::size_t rep = 0; rep < R; ++rep) {
            const auto& row = res.rows[gi * R + rep];
            if (row.failed) {
                ++res.failures;
                continue;
            }
            s += row.error;
            ++n;
        }
        res.mean_error.push_back(n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN());
    }
    return res;
}

}  // namespace dirtensor
