#pragma once

#include <cstddef>
#include <span>

#include "dirtensor/models.hpp"
#include "dirtensor/transport.hpp"

namespace dirtensor {

/// (1/2) sum |p - q| over the tables.
double tv_distance(const DiscreteDensity& p, const DiscreteDensity& q);
double tv_distance(std::span<const double> p, std::span<const double> q);

/// d_H with d_H^2 = (1/2) sum (sqrt p - sqrt q)^2.
double hellinger_distance(const DiscreteDensity& p, const DiscreteDensity& q);
double hellinger_squared(std::span<const double> p, std::span<const double> q);

/// KL(p || q) in nats. `infinite` is set (and value left at +inf) when p puts
/// mass where q has none.
struct KlResult {
    bool infinite = false;
    double value = 0.0;
};
KlResult kl_divergence(const DiscreteDensity& p, const DiscreteDensity& q);
KlResult kl_divergence(std::span<const double> p, std::span<const double> q);

struct WassersteinResult {
    double value = 0.0;  // W_r
    double power = 0.0;  // W_r^r
    TransportPlan plan;
};

/// Exact W_r between mixing measures with Euclidean atom cost ||theta_i - theta'_j||^r.
WassersteinResult wasserstein(const MixingMeasure& G, const MixingMeasure& Gp, double r);

/// Voronoi-cell form: sum_k |sum_{j in I_k} w_j - w0_k| + sum_{j in I_k} w_j ||theta_j - theta0_k||^r,
/// ties assigned to the smallest k.
double voronoi_surrogate(const MixingMeasure& G, const MixingMeasure& G0, double r);

/// Distances of both model families for one parameter pair and the two
/// comparison inequalities.
struct DistanceBoundReport {
    std::size_t N = 0;
    double abar = 0.0;
    double c1 = 0.0, c2 = 0.0;
    double tv_lda = 0.0, tv_mix = 0.0;
    double h2_lda = 0.0, h2_mix = 0.0;
    KlResult kl_lda, kl_mix;
    bool tv_ok = true, h2_ok = true, kl_ok = true, converse_ok = true;
    bool kl_skipped = false;  // KL(mixture) infinite: the KL bound is vacuous
    bool all_ok() const { return tv_ok && h2_ok && kl_ok && converse_ok; }
};

/// Requires P.abar == Pp.abar. `slack` is a relative round-off allowance.
DistanceBoundReport check_distance_bounds(const LdaParams& P, const LdaParams& Pp, std::size_t N,
                               double slack = 1e-12);

}  // namespace dirtensor
