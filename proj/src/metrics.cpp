#include "dirtensor/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dirtensor/combinatorics.hpp"

namespace dirtensor {

namespace {

void same_shape(const DiscreteDensity& p, const DiscreteDensity& q) {
    if (p.V != q.V || p.N != q.N) throw std::invalid_argument("densities differ in V or N");
}

void same_length(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("distributions differ in length");
}

double euclid(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t v = 0; v < a.size(); ++v) s += (a[v] - b[v]) * (a[v] - b[v]);
    return std::sqrt(s);
}

}  // namespace

double tv_distance(std::span<const double> p, std::span<const double> q) {
    same_length(p, q);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

double tv_distance(const DiscreteDensity& p, const DiscreteDensity& q) {
    same_shape(p, q);
    return tv_distance(p.table.data(), q.table.data());
}

double hellinger_squared(std::span<const double> p, std::span<const double> q) {
    same_length(p, q);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = std::sqrt(std::max(p[i], 0.0)) - std::sqrt(std::max(q[i], 0.0));
        s += d * d;
    }
    return 0.5 * s;
}

double hellinger_distance(const DiscreteDensity& p, const DiscreteDensity& q) {
    same_shape(p, q);
    return std::sqrt(hellinger_squared(p.table.data(), q.table.data()));
}

KlResult kl_divergence(std::span<const double> p, std::span<const double> q) {
    same_length(p, q);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) return {true, std::numeric_limits<double>::infinity()};
        s += p[i] * std::log(p[i] / q[i]);
    }
    return {false, std::max(s, 0.0)};
}

KlResult kl_divergence(const DiscreteDensity& p, const DiscreteDensity& q) {
    same_shape(p, q);
    return kl_divergence(p.table.data(), q.table.data());
}

WassersteinResult wasserstein(const MixingMeasure& G, const MixingMeasure& Gp, double r) {
    if (G.V() != Gp.V()) throw std::invalid_argument("mixing measures differ in V");
    if (!(r >= 1.0)) throw std::invalid_argument("Wasserstein order must be >= 1");
    std::vector<double> cost(G.K() * Gp.K());
    for (std::size_t i = 0; i < G.K(); ++i)
        for (std::size_t j = 0; j < Gp.K(); ++j)
            cost[i * Gp.K() + j] = std::pow(euclid(G.atom(i), Gp.atom(j)), r);
    WassersteinResult out;
    out.plan = solve_transport(G.weights(), Gp.weights(), cost);
    out.power = std::max(out.plan.cost, 0.0);
    out.value = std::pow(out.power, 1.0 / r);
    return out;
}

double voronoi_surrogate(const MixingMeasure& G, const MixingMeasure& G0, double r) {
    if (G.V() != G0.V()) throw std::invalid_argument("mixing measures differ in V");
    std::vector<double> cell_mass(G0.K(), 0.0);
    double transport = 0.0;
    for (std::size_t j = 0; j < G.K(); ++j) {
        std::size_t best = 0;
        double bd = euclid(G.atom(j), G0.atom(0));
        for (std::size_t k = 1; k < G0.K(); ++k) {
            const double d = euclid(G.atom(j), G0.atom(k));
            if (d < bd) {
                bd = d;
                best = k;
            }
        }
        cell_mass[best] += G.weights()[j];
        transport += G.weights()[j] * std::pow(bd, r);
    }
    double s = transport;
    for (std::size_t k = 0; k < G0.K(); ++k) s += std::abs(cell_mass[k] - G0.weights()[k]);
    return s;
}

DistanceBoundReport check_distance_bounds(const LdaParams& P, const LdaParams& Pp, std::size_t N, double slack) {
    if (P.abar != Pp.abar) throw std::invalid_argument("comparison requires equal concentration");
    DistanceBoundReport rep;
    rep.N = N;
    rep.abar = P.abar;
    rep.c1 = c1_constant(N, P.abar);
    rep.c2 = c2_constant(N, P.abar);
    const auto pl = lda_density(P, N), plp = lda_density(Pp, N);
    const auto pm = mixture_density(P.mixing, N), pmp = mixture_density(Pp.mixing, N);
    rep.tv_lda = tv_distance(pl, plp);
    rep.tv_mix = tv_distance(pm, pmp);
    rep.h2_lda = hellinger_squared(pl.table.data(), plp.table.data());
    rep.h2_mix = hellinger_squared(pm.table.data(), pmp.table.data());
    rep.kl_lda = kl_divergence(pl, plp);
    rep.kl_mix = kl_divergence(pm, pmp);

    auto le = [slack](double lhs, double rhs) { return lhs <= rhs * (1.0 + slack) + 1e-15; };
    rep.tv_ok = le(rep.tv_lda, rep.c1 * rep.tv_mix);
    rep.h2_ok = le(rep.h2_lda, rep.c1 * rep.h2_mix);
    if (rep.kl_mix.infinite) {
        rep.kl_skipped = true;
    } else {
        rep.kl_ok = !rep.kl_lda.infinite && le(rep.kl_lda.value, rep.c1 * rep.kl_mix.value);
    }
    rep.converse_ok = le(rep.tv_mix, rep.c2 * rep.tv_lda);
    return rep;
}

}  // namespace dirtensor
