#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dirtensor/models.hpp"
#include "dirtensor/rng.hpp"

namespace dirtensor {

struct RankInfo {
    std::size_t rank = 0;
    std::size_t kruskal_rank = 0;
};

/// Plain rank and Kruskal rank of the rows; a subset counts as independent
/// when its smallest singular value exceeds rel_tol times the largest
/// singular value of the whole matrix.
RankInfo kruskal_rank(const TopicMatrix& theta, double rel_tol = 1e-9);

struct AnchorResult {
    bool has_anchor = false;
    std::vector<std::size_t> anchors;  // anchors[k] = column of topic k (when has_anchor)
};

/// Every topic k needs a column v with theta_kv > zero_tol and theta_k'v <= zero_tol
/// for k' != k. The first such column is reported.
AnchorResult anchor_word_check(const TopicMatrix& theta, double zero_tol = 1e-12);

enum class Verdict { identified, counterexample, inconclusive };
enum class ModelKind { lda, mixture };

std::string to_string(Verdict v);
std::string to_string(ModelKind m);

struct ProbeOptions {
    std::size_t restarts = 64;
    double delta_sep = 1e-3;
    double lambda = 1e4;
    double counterexample_tol = 1e-8;
    double identified_tol = 1e-5;
    std::size_t nm_iterations = 1500;
    std::size_t lm_iterations = 200;
    ModelKind model = ModelKind::lda;
    std::size_t jobs = 1;
};

struct IdentifiabilityReport {
    std::size_t K0 = 0;
    std::size_t K_fit = 0;
    std::size_t N = 0;
    ModelKind model = ModelKind::lda;
    Verdict verdict = Verdict::inconclusive;
    std::optional<MixingMeasure> witness;
    double witness_tv = 0.0;
    double witness_w1 = 0.0;
    std::size_t restarts = 0;
    double best_objective = 0.0;   // min over restarts of tv + penalty
    double worst_objective = 0.0;  // max over restarts
    std::size_t evaluations = 0;

    bool overfitted() const { return K_fit > K0; }
};

/// Multi-start search over K_fit-atom measures G for tv(p_{G,N}, p_{G0,N})
/// small while W_1(G, G0) >= delta_sep. Coordinates are softmax logits for
/// weights and for each topic row; Nelder-Mead on the penalised TV is
/// followed by a Levenberg-Marquardt polish on the density residual.
IdentifiabilityReport identifiability_probe(const MixingMeasure& G0, double abar, std::size_t N,
                                            std::size_t K_fit, const ProbeOptions& opts,
                                            const RngStream& rng);

/// Density of G under the chosen model family.
DiscreteDensity model_density(ModelKind model, const MixingMeasure& G, double abar, std::size_t N);

struct RadiusProbe {
    double radius = 0.0;
    double min_ratio = 0.0;
    MixingMeasure argmin;
};

struct InverseBoundResult {
    std::vector<RadiusProbe> per_radius;
    double min_ratio = 0.0;
    MixingMeasure argmin;
};

/// Random perturbations G of G0 at each radius; records min d_TV(p_G, p_G0) / W_r^r(G, G0).
/// With K_fit > K0 each true atom is split among a random nonempty group of fitted atoms.
InverseBoundResult inverse_bound_probe(const MixingMeasure& G0, double abar, std::size_t N, double r,
                                       std::size_t K_fit, std::size_t samples,
                                       const std::vector<double>& radii, const RngStream& rng,
                                       ModelKind model = ModelKind::lda);

/// Two-atom family keeping the mean topic fixed: theta_1 + t d and
/// theta_2 - t (w_1 / w_2) d, with d summing to zero. Requires K0 >= 2.
MixingMeasure mean_preserving_perturbation(const MixingMeasure& G0, double t,
                                           const std::vector<double>& direction);

/// Desk-scale true measures used by the identifiability table.
enum class TopicCondition { distinct, linearly_independent, anchor_word };
std::string to_string(TopicCondition c);
TopicCondition condition_from_string(const std::string& s);
MixingMeasure desk_instance(TopicCondition c, std::size_t K0, std::size_t V, const RngStream& rng);
/// Minimum document length for exact-fitted identifiability.
std::size_t exact_fitted_bound(TopicCondition c, std::size_t K0);
/// Minimum document length for over-fitted identifiability (K > K0), with the
/// rank-based row evaluated at R = R_K = rank.
std::size_t overfitted_bound(TopicCondition c, std::size_t K0, std::size_t K);

}  // namespace dirtensor
