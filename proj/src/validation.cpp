#include "dirtensor/validation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dirtensor/combinatorics.hpp"
#include "dirtensor/dirichlet.hpp"
#include "dirtensor/inference.hpp"
#include "dirtensor/metrics.hpp"
#include "dirtensor/parallel.hpp"

namespace dirtensor {

namespace {

std::vector<double> random_simplex(std::size_t K, RngStream& rng) {
    std::vector<double> w(K);
    double total = 0.0;
    for (auto& v : w) total += (v = -std::log(1.0 - rng.uniform()));
    for (auto& v : w) v /= total;
    return w;
}

MixingMeasure random_measure(std::size_t K, std::size_t V, RngStream& rng) {
    std::vector<double> flat;
    for (std::size_t k = 0; k < K; ++k) {
        auto row = random_simplex(V, rng);
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return MixingMeasure(random_simplex(K, rng), TopicMatrix::unchecked(K, V, std::move(flat)));
}

void apply_fuzz(Tensor& t, double fuzz) {
    if (fuzz == 0.0) return;
    for (auto& v : t.data()) v *= 1.0 + fuzz;
}

void accumulate(IdentityCell& cell, Tensor a, const Tensor& b, double fuzz) {
    apply_fuzz(a, fuzz);
    cell.max_rel_err = std::max(cell.max_rel_err, max_relative_error(a, b));
    cell.max_abs_err = std::max(cell.max_abs_err, max_abs_difference(a, b));
    cell.max_ratio = std::max(cell.max_ratio, max_tolerance_ratio(a, b));
    ++cell.trials;
}

bool within_tolerance(double a, double b) { return std::abs(a - b) <= std::max(1e-10 * std::abs(b), 1e-12); }

std::uint64_t key(double v) { return std::bit_cast<std::uint64_t>(v); }

}  // namespace

std::vector<IdentityCell> moment_identity_grid(const IdentityGridConfig& cfg, bool inverse, const RngStream& rng) {
    if (cfg.K_max == 0 || cfg.N_max == 0 || cfg.alphas_per_cell == 0)
        throw std::invalid_argument("identity grid is empty");
    if (!(cfg.abar_min > 0.0) || cfg.abar_max < cfg.abar_min) throw std::invalid_argument("bad abar range");
    std::vector<IdentityCell> out;
    const double lo = std::log(cfg.abar_min), hi = std::log(cfg.abar_max);
    for (std::size_t K = 1; K <= cfg.K_max; ++K)
        for (std::size_t N = 1; N <= cfg.N_max; ++N) {
            IdentityCell cell;
            cell.check = inverse ? "inverse" : "forward";
            cell.K = K;
            cell.N = N;
            for (std::size_t t = 0; t < cfg.alphas_per_cell; ++t) {
                RngStream local = rng.derive({inverse ? 2u : 1u, K, N, t});
                const double abar = std::exp(lo + (hi - lo) * local.uniform());
                const auto mean = random_simplex(K, local);
                const auto dp = DirichletParam::from_mean(abar, mean);
                if (inverse)
                    accumulate(cell, diagonal_from_moments(dp, N), diag_tensor(dp.atilde(), N), cfg.fuzz);
                else
                    accumulate(cell, moment_tensor_from_diagonals(dp, N), moment_tensor_closed(dp, N), cfg.fuzz);
            }
            out.push_back(cell);
        }
    return out;
}

std::vector<IdentityCell> correspondence_grid(const IdentityGridConfig& cfg, const RngStream& rng) {
    if (cfg.corr_K_max == 0 || cfg.corr_V.empty() || cfg.corr_N_max == 0 || cfg.corr_abar.empty() ||
        cfg.measures_per_cell == 0)
        throw std::invalid_argument("correspondence grid is empty");
    std::vector<IdentityCell> out;
    for (std::size_t K = 1; K <= cfg.corr_K_max; ++K)
        for (std::size_t V : cfg.corr_V)
            for (std::size_t N = 1; N <= cfg.corr_N_max; ++N)
                for (double abar : cfg.corr_abar) {
                    IdentityCell fwd{"lda_from_mixture", K, V, N, abar}, bwd{"mixture_from_lda", K, V, N, abar};
                    for (std::size_t t = 0; t < cfg.measures_per_cell; ++t) {
                        RngStream local = rng.derive({3, K, V, N, key(abar), t});
                        const auto G = random_measure(K, V, local);
                        const LdaParams P(G, abar);
                        accumulate(fwd, lda_from_mixture_marginals(G, abar, N).table, lda_density(P, N).table, cfg.fuzz);
                        accumulate(bwd, mixture_from_lda_marginals(P, N).table, mixture_density(G, N).table, cfg.fuzz);
                    }
                    out.push_back(fwd);
                    out.push_back(bwd);
                }
    return out;
}

bool MomentPairRow::within_3se() const {
    if (std_error == 0.0) return within_tolerance(empirical, theoretical);
    return std::abs(empirical - theoretical) <= 3.0 * std_error;
}

bool MomentsResult::cross_checks_pass() const {
    return std::all_of(cross_checks.begin(), cross_checks.end(), [](const auto& c) { return c.pass; });
}

double MomentsResult::pair_coverage() const {
    if (pairs.empty()) return 1.0;
    const auto n = std::count_if(pairs.begin(), pairs.end(), [](const auto& p) { return p.within_3se(); });
    return static_cast<double>(n) / static_cast<double>(pairs.size());
}

MomentsResult moments_validation(const MomentsConfig& cfg, const RngStream& rng) {
    if (cfg.alpha.empty() || cfg.alpha.size() != cfg.x.size())
        throw std::invalid_argument("alpha and x must be nonempty and of equal length");
    if (cfg.N_max == 0 || cfg.m_grid.empty() || cfg.replications == 0)
        throw std::invalid_argument("moment grid is empty");
    MomentsResult res;
    const DirichletParam dp(cfg.alpha);
    const auto theory = linear_moments_recursive(dp, cfg.x, std::max(cfg.N_max, cfg.contraction_N_max));

    auto cross = [&](std::size_t pair, const DirichletParam& d, const std::vector<double>& x,
                     const std::vector<double>& rec, std::size_t n_max) {
        for (std::size_t N = 1; N <= n_max; ++N) {
            MomentCrossCheck c;
            c.pair = pair;
            c.N = N;
            c.recursive = rec[N] * (1.0 + cfg.fuzz);
            c.contracted = contract_repeated(moment_tensor_closed(d, N), x);
            c.pass = within_tolerance(c.recursive, c.contracted);
            res.cross_checks.push_back(c);
        }
    };
    cross(0, dp, cfg.x, theory, cfg.contraction_N_max);

    // Convergence in m for the fixed configuration.
    const std::size_t R = cfg.replications;
    std::vector<std::vector<MonteCarloEstimate>> est(cfg.m_grid.size() * R);
    parallel_for(est.size(), cfg.jobs, [&](std::size_t task) {
        const std::size_t gi = task / R, rep = task % R;
        RngStream local = rng.derive({1, cfg.m_grid[gi], rep});
        est[task] = monte_carlo_linear_moments(dp, cfg.x, cfg.N_max, cfg.m_grid[gi], local);
    });
    for (std::size_t N = 1; N <= cfg.N_max; ++N)
        for (std::size_t gi = 0; gi < cfg.m_grid.size(); ++gi) {
            std::vector<double> v(R);
            for (std::size_t rep = 0; rep < R; ++rep) v[rep] = est[gi * R + rep][N].estimate;
            MomentConvergenceRow row;
            row.N = N;
            row.m = cfg.m_grid[gi];
            row.theoretical = theory[N];
            row.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(R);
            row.q25 = quantile(v, 0.25);
            row.q75 = quantile(v, 0.75);
            res.convergence.push_back(row);
        }

    // Random (x, alpha) pairs on (0, 1]^K x [0, 1]^K.
    const std::size_t K = cfg.alpha.size();
    std::vector<std::vector<MomentPairRow>> pair_rows(cfg.pairs);
    std::vector<std::vector<MomentCrossCheck>> pair_checks(cfg.pairs);
    parallel_for(cfg.pairs, cfg.jobs, [&](std::size_t i) {
        RngStream local = rng.derive({2, i});
        std::vector<double> alpha(K), x(K);
        for (auto& a : alpha) a = 1.0 - local.uniform();
        for (auto& v : x) v = local.uniform();
        const DirichletParam d(alpha);
        const auto rec = linear_moments_recursive(d, x, std::max(cfg.pair_N_max, cfg.contraction_N_max));
        const auto mc = monte_carlo_linear_moments(d, x, cfg.pair_N_max, cfg.pair_m, local);
        for (std::size_t N = 1; N <= cfg.pair_N_max; ++N)
            pair_rows[i].push_back({i + 1, N, alpha, x, rec[N], mc[N].estimate, mc[N].std_error});
        for (std::size_t N = 1; N <= std::min(cfg.pair_N_max, cfg.contraction_N_max); ++N) {
            MomentCrossCheck c;
            c.pair = i + 1;
            c.N = N;
            c.recursive = rec[N] * (1.0 + cfg.fuzz);
            c.contracted = contract_repeated(moment_tensor_closed(d, N), x);
            c.pass = within_tolerance(c.recursive, c.contracted);
            pair_checks[i].push_back(c);
        }
    });
    for (std::size_t i = 0; i < cfg.pairs; ++i) {
        res.pairs.insert(res.pairs.end(), pair_rows[i].begin(), pair_rows[i].end());
        res.cross_checks.insert(res.cross_checks.end(), pair_checks[i].begin(), pair_checks[i].end());
    }
    return res;
}

std::vector<DistanceAuditCell> distance_audit(const DistanceAuditConfig& cfg, const RngStream& rng) {
    if (cfg.N.empty() || cfg.abar.empty() || cfg.pairs == 0 || cfg.K_max == 0 || cfg.V_max < 2)
        throw std::invalid_argument("distance audit grid is empty");
    std::vector<DistanceAuditCell> out;
    for (std::size_t N : cfg.N)
        for (double abar : cfg.abar) {
            DistanceAuditCell cell;
            cell.N = N;
            cell.abar = abar;
            cell.c1 = c1_constant(N, abar);
            cell.c1_partitions = c1_constant_by_partitions(N, abar);
            cell.c2 = c2_constant(N, abar);
            for (std::size_t i = 0; i < cfg.pairs; ++i) {
                RngStream local = rng.derive({4, N, key(abar), i});
                const std::size_t V = 2 + static_cast<std::size_t>(local.uniform() * static_cast<double>(cfg.V_max - 1));
                const std::size_t K1 = 1 + static_cast<std::size_t>(local.uniform() * static_cast<double>(cfg.K_max));
                const auto G = random_measure(K1, V, local);
                MixingMeasure Gp;
                if (i % 2 == 0) {
                    const std::size_t K2 = 1 + static_cast<std::size_t>(local.uniform() * static_cast<double>(cfg.K_max));
                    Gp = random_measure(K2, V, local);
                } else {
                    // Nearby pair: convex move towards another measure with the same K.
                    const double t = std::pow(10.0, -3.0 * local.uniform());
                    const auto H = random_measure(K1, V, local);
                    std::vector<double> w(K1), flat(K1 * V);
                    for (std::size_t k = 0; k < K1; ++k) {
                        w[k] = (1 - t) * G.weights()[k] + t * H.weights()[k];
                        for (std::size_t v = 0; v < V; ++v)
                            flat[k * V + v] = (1 - t) * G.atoms()(k, v) + t * H.atoms()(k, v);
                    }
                    Gp = MixingMeasure(std::move(w), TopicMatrix::unchecked(K1, V, std::move(flat)));
                }
                const auto rep = check_distance_bounds(LdaParams(G, abar), LdaParams(Gp, abar), N);
                ++cell.pairs;
                cell.tv_violations += !rep.tv_ok;
                cell.h2_violations += !rep.h2_ok;
                cell.kl_violations += !rep.kl_ok;
                cell.converse_violations += !rep.converse_ok;
                cell.kl_skipped += rep.kl_skipped;
                if (rep.tv_mix > 0.0) cell.max_tv_ratio = std::max(cell.max_tv_ratio, rep.tv_lda / (rep.c1 * rep.tv_mix));
            }
            out.push_back(cell);
        }
    return out;
}

std::vector<TableRow> identifiability_table(const TableConfig& cfg, const RngStream& rng) {
    std::vector<TableRow> out;
    for (std::size_t idx = 0; idx < cfg.instances.size(); ++idx) {
        const auto& inst = cfg.instances[idx];
        const auto G0 = desk_instance(inst.condition, inst.K0, inst.V, rng);
        const auto ranks = kruskal_rank(G0.atoms());
        const std::size_t exact = exact_fitted_bound(inst.condition, inst.K0);
        const std::size_t over = overfitted_bound(inst.condition, inst.K0, inst.K0 + 1);
        const std::size_t n_hi = std::max(exact, over);
        std::vector<ModelKind> models{ModelKind::lda};
        if (cfg.both_models) models.push_back(ModelKind::mixture);
        for (std::size_t N = 1; N <= n_hi; ++N)
            for (std::size_t K_fit : {inst.K0, inst.K0 + 1})
                for (ModelKind model : models) {
                    TableRow row;
                    row.condition = inst.condition;
                    row.K0 = inst.K0;
                    row.V = inst.V;
                    row.N = N;
                    row.K_fit = K_fit;
                    row.model = model;
                    row.rank = ranks.rank;
                    row.kruskal_rank = ranks.kruskal_rank;
                    row.bound = K_fit == inst.K0 ? exact : over;
                    row.alt_bound = K_fit == inst.K0 ? 0 : inst.K0 + K_fit - 1;
                    auto opts = cfg.probe;
                    opts.model = model;
                    row.report = identifiability_probe(G0, cfg.abar, N, K_fit, opts,
                                                       rng.derive({5, idx, N, K_fit}));
                    out.push_back(std::move(row));
                }
    }
    return out;
}

}  // namespace dirtensor
