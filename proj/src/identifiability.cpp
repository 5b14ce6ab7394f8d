#include "dirtensor/identifiability.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "dirtensor/metrics.hpp"
#include "dirtensor/optimize.hpp"
#include "dirtensor/parallel.hpp"

namespace dirtensor {

namespace {

Eigen::MatrixXd to_eigen(const TopicMatrix& theta, const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(theta.V()));
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t v = 0; v < theta.V(); ++v)
            m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(v)) = theta(rows[a], v);
    return m;
}

bool next_combination(std::vector<std::size_t>& c, std::size_t n) {
    const std::size_t r = c.size();
    for (std::size_t i = r; i-- > 0;) {
        if (c[i] < n - r + i) {
            ++c[i];
            for (std::size_t j = i + 1; j < r; ++j) c[j] = c[j - 1] + 1;
            return true;
        }
    }
    return false;
}

void softmax_into(const double* logits, std::size_t n, double* out) {
    double mx = logits[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (out[i] = std::exp(logits[i] - mx));
    for (std::size_t i = 0; i < n; ++i) out[i] /= s;
}

MixingMeasure decode(const std::vector<double>& x, std::size_t K, std::size_t V) {
    std::vector<double> w(K), t(K * V);
    softmax_into(x.data(), K, w.data());
    // Dirichlet parameters must stay positive.
    constexpr double eps = 1e-15;
    for (auto& v : w) v = v * (1.0 - static_cast<double>(K) * eps) + eps;
    for (std::size_t k = 0; k < K; ++k) softmax_into(x.data() + K + k * V, V, t.data() + k * V);
    return MixingMeasure(std::move(w), TopicMatrix::unchecked(K, V, std::move(t)));
}

std::vector<double> random_logits(std::size_t K, std::size_t V, RngStream& rng) {
    std::vector<double> x(K + K * V);
    for (auto& v : x) v = 1.5 * rng.normal();
    return x;
}

}  // namespace

RankInfo kruskal_rank(const TopicMatrix& theta, double rel_tol) {
    const std::size_t K = theta.K();
    std::vector<std::size_t> all(K);
    std::iota(all.begin(), all.end(), 0);
    Eigen::JacobiSVD<Eigen::MatrixXd> full(to_eigen(theta, all));
    const auto sv = full.singularValues();
    const double scale = sv.size() > 0 ? sv(0) : 0.0;
    const double thr = rel_tol * scale;
    RankInfo info;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > thr) ++info.rank;
    if (scale == 0.0) return info;
    for (std::size_t R = 1; R <= info.rank; ++R) {
        std::vector<std::size_t> c(R);
        std::iota(c.begin(), c.end(), 0);
        bool all_independent = true;
        do {
            Eigen::JacobiSVD<Eigen::MatrixXd> sub(to_eigen(theta, c));
            const auto s = sub.singularValues();
            if (s(s.size() - 1) <= thr) {
                all_independent = false;
                break;
            }
        } while (next_combination(c, K));
        if (!all_independent) break;
        info.kruskal_rank = R;
    }
    return info;
}

AnchorResult anchor_word_check(const TopicMatrix& theta, double zero_tol) {
    AnchorResult out;
    out.has_anchor = true;
    for (std::size_t k = 0; k < theta.K(); ++k) {
        bool found = false;
        for (std::size_t v = 0; v < theta.V() && !found; ++v) {
            if (theta(k, v) <= zero_tol) continue;
            bool exclusive = true;
            for (std::size_t o = 0; o < theta.K(); ++o)
                if (o != k && theta(o, v) > zero_tol) exclusive = false;
            if (exclusive) {
                out.anchors.push_back(v);
                found = true;
            }
        }
        if (!found) {
            out.has_anchor = false;
            out.anchors.clear();
            return out;
        }
    }
    return out;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::identified: return "identified";
        case Verdict::counterexample: return "counterexample";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

std::string to_string(ModelKind m) { return m == ModelKind::lda ? "lda" : "mixture"; }

std::string to_string(TopicCondition c) {
    switch (c) {
        case TopicCondition::distinct: return "distinct";
        case TopicCondition::linearly_independent: return "linearly_independent";
        case TopicCondition::anchor_word: return "anchor_word";
    }
    return "?";
}

TopicCondition condition_from_string(const std::string& s) {
    if (s == "distinct") return TopicCondition::distinct;
    if (s == "linearly_independent" || s == "independent") return TopicCondition::linearly_independent;
    if (s == "anchor_word" || s == "anchor") return TopicCondition::anchor_word;
    throw std::invalid_argument("unknown topic condition: " + s);
}

DiscreteDensity model_density(ModelKind model, const MixingMeasure& G, double abar, std::size_t N) {
    if (model == ModelKind::mixture) return mixture_density(G, N);
    return lda_density(LdaParams(G, abar), N);
}

IdentifiabilityReport identifiability_probe(const MixingMeasure& G0, double abar, std::size_t N,
                                            std::size_t K_fit, const ProbeOptions& opts,
                                            const RngStream& rng) {
    if (K_fit < 1 || N < 1) throw std::invalid_argument("probe needs K_fit >= 1 and N >= 1");
    if (opts.restarts == 0) throw std::invalid_argument("probe needs at least one restart");
    const std::size_t V = G0.V();
    const auto target = model_density(opts.model, G0, abar, N);
    const std::size_t n_res = target.table.size();

    struct Outcome {
        MixingMeasure G;
        double tv = 0.0, w1 = 0.0, objective = 0.0;
        std::size_t evals = 0;
    };
    std::vector<Outcome> results(opts.restarts);

    auto penalty = [&](double w1) {
        const double gap = std::max(0.0, opts.delta_sep - w1);
        return opts.lambda * gap * gap;
    };

    parallel_for(opts.restarts, opts.jobs, [&](std::size_t rs) {
        RngStream local = rng.derive({rs});
        auto objective = [&](const std::vector<double>& x) {
            const auto G = decode(x, K_fit, V);
            const auto p = model_density(opts.model, G, abar, N);
            return tv_distance(p, target) + penalty(wasserstein(G, G0, 1).value);
        };
        auto residual = [&](const std::vector<double>& x, std::vector<double>& r) {
            const auto G = decode(x, K_fit, V);
            const auto p = model_density(opts.model, G, abar, N);
            for (std::size_t i = 0; i < n_res; ++i) r[i] = p.table[i] - target.table[i];
            r[n_res] = std::sqrt(opts.lambda) * std::max(0.0, opts.delta_sep - wasserstein(G, G0, 1).value);
        };

        auto x0 = random_logits(K_fit, V, local);
        auto nm = nelder_mead(objective, x0, 1.0, opts.nm_iterations, 1e-9);
        auto lm = levenberg_marquardt(residual, n_res + 1, nm.x, opts.lm_iterations);
        std::size_t evals = nm.evaluations + lm.evaluations;
        const double lm_obj = std::isfinite(lm.value) ? objective(lm.x) : std::numeric_limits<double>::infinity();
        const auto& best_x = lm_obj <= nm.value ? lm.x : nm.x;
        Outcome o{decode(best_x, K_fit, V), 0.0, 0.0, 0.0, evals};
        o.tv = tv_distance(model_density(opts.model, o.G, abar, N), target);
        o.w1 = wasserstein(o.G, G0, 1).value;
        o.objective = o.tv + penalty(o.w1);
        results[rs] = std::move(o);
    });

    IdentifiabilityReport rep;
    rep.K0 = G0.K();
    rep.K_fit = K_fit;
    rep.N = N;
    rep.model = opts.model;
    rep.restarts = opts.restarts;
    rep.best_objective = std::numeric_limits<double>::infinity();
    rep.worst_objective = 0.0;
    const Outcome* witness = nullptr;
    for (const auto& o : results) {
        rep.evaluations += o.evals;
        rep.best_objective = std::min(rep.best_objective, o.objective);
        rep.worst_objective = std::max(rep.worst_objective, o.objective);
        if (o.tv <= opts.counterexample_tol && o.w1 >= opts.delta_sep)
            if (!witness || o.tv < witness->tv) witness = &o;
    }
    if (witness) {
        rep.verdict = Verdict::counterexample;
        rep.witness = witness->G;
        rep.witness_tv = witness->tv;
        rep.witness_w1 = witness->w1;
    } else if (rep.best_objective >= opts.identified_tol) {
        rep.verdict = Verdict::identified;
    } else {
        rep.verdict = Verdict::inconclusive;
    }
    return rep;
}

namespace {

// Random unit direction in the tangent space {d : sum d = 0} of dimension n.
std::vector<double> tangent_direction(std::size_t n, RngStream& rng) {
    std::vector<double> d(n);
    double mean = 0.0;
    for (auto& v : d) mean += (v = rng.normal());
    mean /= static_cast<double>(n);
    double norm = 0.0;
    for (auto& v : d) {
        v -= mean;
        norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) return std::vector<double>(n, 0.0);
    for (auto& v : d) v /= norm;
    return d;
}

// Move x along d by at most `step`, shrinking the step so every coordinate
// stays >= floor.
double feasible_step(std::span<const double> x, const std::vector<double>& d, double step, double floor) {
    double s = step;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (d[i] < 0.0) s = std::min(s, (x[i] - floor) / -d[i]);
    return std::max(s, 0.0);
}

MixingMeasure perturb(const MixingMeasure& G0, std::size_t K_fit, double radius, RngStream& rng) {
    const std::size_t K0 = G0.K(), V = G0.V();
    // Group assignment: each true atom owns at least one fitted atom.
    std::vector<std::size_t> owner(K_fit);
    for (std::size_t j = 0; j < K_fit; ++j)
        owner[j] = j < K0 ? j : static_cast<std::size_t>(rng.uniform() * static_cast<double>(K0)) % K0;
    std::vector<double> w(K_fit), t(K_fit * V);
    for (std::size_t k = 0; k < K0; ++k) {
        std::vector<std::size_t> members;
        for (std::size_t j = 0; j < K_fit; ++j)
            if (owner[j] == k) members.push_back(j);
        std::vector<double> share(members.size());
        double tot = 0.0;
        for (auto& s : share) tot += (s = 0.5 + rng.uniform());
        for (std::size_t a = 0; a < members.size(); ++a) w[members[a]] = G0.weights()[k] * share[a] / tot;
    }
    for (std::size_t j = 0; j < K_fit; ++j) {
        auto row = G0.atom(owner[j]);
        auto d = tangent_direction(V, rng);
        const double len = feasible_step(row, d, radius * (0.25 + 0.75 * rng.uniform()), 0.0);
        for (std::size_t v = 0; v < V; ++v) t[j * V + v] = std::max(0.0, row[v] + len * d[v]);
        double s = 0.0;
        for (std::size_t v = 0; v < V; ++v) s += t[j * V + v];
        for (std::size_t v = 0; v < V; ++v) t[j * V + v] /= s;
    }
    if (K_fit == K0) {
        auto dw = tangent_direction(K0, rng);
        const double len = feasible_step(w, dw, radius * rng.uniform(), 1e-3);
        for (std::size_t k = 0; k < K0; ++k) w[k] += len * dw[k];
    }
    double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& v : w) v /= s;
    return MixingMeasure(std::move(w), TopicMatrix::unchecked(K_fit, V, std::move(t)));
}

}  // namespace

InverseBoundResult inverse_bound_probe(const MixingMeasure& G0, double abar, std::size_t N, double r,
                                       std::size_t K_fit, std::size_t samples,
                                       const std::vector<double>& radii, const RngStream& rng,
                                       ModelKind model) {
    if (K_fit < G0.K()) throw std::invalid_argument("inverse bound probe needs K_fit >= K0");
    if (samples == 0 || radii.empty()) throw std::invalid_argument("need samples and radii");
    const auto target = model_density(model, G0, abar, N);
    InverseBoundResult out;
    out.min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
        RngStream local = rng.derive({ri});
        RadiusProbe probe{radii[ri], std::numeric_limits<double>::infinity(), G0};
        for (std::size_t s = 0; s < samples; ++s) {
            auto G = perturb(G0, K_fit, radii[ri], local);
            const double w = wasserstein(G, G0, r).power;
            if (!(w > 0.0)) continue;
            const double ratio = tv_distance(model_density(model, G, abar, N), target) / w;
            if (ratio < probe.min_ratio) {
                probe.min_ratio = ratio;
                probe.argmin = G;
            }
        }
        if (probe.min_ratio < out.min_ratio) {
            out.min_ratio = probe.min_ratio;
            out.argmin = probe.argmin;
        }
        out.per_radius.push_back(std::move(probe));
    }
    return out;
}

MixingMeasure mean_preserving_perturbation(const MixingMeasure& G0, double t,
                                           const std::vector<double>& direction) {
    if (G0.K() < 2) throw std::invalid_argument("mean-preserving family needs K0 >= 2");
    if (direction.size() != G0.V()) throw std::invalid_argument("direction length must equal V");
    const double sum = std::accumulate(direction.begin(), direction.end(), 0.0);
    if (std::abs(sum) > 1e-12) throw std::invalid_argument("direction must sum to zero");
    auto rows = G0.atoms().rows();
    const double ratio = G0.weights()[0] / G0.weights()[1];
    for (std::size_t v = 0; v < G0.V(); ++v) {
        rows[0][v] += t * direction[v];
        rows[1][v] -= t * ratio * direction[v];
        if (rows[0][v] < 0.0 || rows[1][v] < 0.0)
            throw std::invalid_argument("perturbation leaves the simplex; use a smaller t");
    }
    return MixingMeasure(G0.weights(), TopicMatrix::unchecked(G0.K(), G0.V(), [&] {
                             std::vector<double> flat;
                             for (auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
                             return flat;
                         }()));
}

MixingMeasure desk_instance(TopicCondition c, std::size_t K0, std::size_t V, const RngStream& rng) {
    if (K0 == 0 || V < 2) throw std::invalid_argument("desk instance needs K0 >= 1 and V >= 2");
    RngStream local = rng.derive({static_cast<std::uint64_t>(c), K0, V});
    std::vector<double> w(K0);
    double ws = 0.0;
    for (auto& v : w) ws += (v = 1.0 + local.uniform());
    for (auto& v : w) v /= ws;

    std::vector<double> t(K0 * V, 0.0);
    switch (c) {
        case TopicCondition::distinct: {
            // Points on the segment between two fixed topics: rank <= 2.
            std::vector<double> a(V), b(V);
            double sa = 0.0, sb = 0.0;
            for (std::size_t v = 0; v < V; ++v) {
                sa += (a[v] = (v % 2 == 0 ? 20.0 : 0.5) + local.uniform());
                sb += (b[v] = (v % 2 == 0 ? 0.5 : 20.0) + local.uniform());
            }
            for (std::size_t k = 0; k < K0; ++k) {
                const double s = K0 == 1 ? 0.5
                                         : static_cast<double>(k) / static_cast<double>(K0 - 1);
                for (std::size_t v = 0; v < V; ++v) t[k * V + v] = s * a[v] / sa + (1 - s) * b[v] / sb;
            }
            break;
        }
        case TopicCondition::linearly_independent: {
            if (V < K0) throw std::invalid_argument("linearly independent topics need V >= K0");
            for (std::size_t k = 0; k < K0; ++k) {
                double s = 0.0;
                for (std::size_t v = 0; v < V; ++v) s += (t[k * V + v] = 0.2 + local.uniform());
                for (std::size_t v = 0; v < V; ++v) t[k * V + v] = 0.4 * t[k * V + v] / s;
                t[k * V + k] += 0.6;
            }
            break;
        }
        case TopicCondition::anchor_word: {
            if (V < K0 + 1) throw std::invalid_argument("anchor-word topics need V >= K0 + 1");
            for (std::size_t k = 0; k < K0; ++k) {
                double s = 0.0;
                for (std::size_t v = K0; v < V; ++v) s += (t[k * V + v] = 0.2 + local.uniform());
                for (std::size_t v = K0; v < V; ++v) t[k * V + v] = 0.6 * t[k * V + v] / s;
                t[k * V + k] = 0.4;
            }
            break;
        }
    }
    for (std::size_t k = 0; k < K0; ++k) {
        double s = 0.0;
        for (std::size_t v = 0; v < V; ++v) s += t[k * V + v];
        for (std::size_t v = 0; v < V; ++v) t[k * V + v] /= s;
    }
    return MixingMeasure(std::move(w), TopicMatrix::unchecked(K0, V, std::move(t)));
}

std::size_t exact_fitted_bound(TopicCondition c, std::size_t K0) {
    switch (c) {
        case TopicCondition::distinct: return 2 * K0 - 1;
        case TopicCondition::linearly_independent: return std::min<std::size_t>(3, 2 * K0 - 1);
        case TopicCondition::anchor_word: return K0 == 1 ? 1 : 2;
    }
    return 0;
}

std::size_t overfitted_bound(TopicCondition c, std::size_t K0, std::size_t K) {
    (void)K;
    switch (c) {
        case TopicCondition::distinct: return 2 * K0;
        case TopicCondition::linearly_independent: return 4;
        case TopicCondition::anchor_word: return 2;
    }
    return 0;
}

}  // namespace dirtensor
