#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dirtensor/models.hpp"
#include "dirtensor/rng.hpp"

namespace dirtensor {

/// Dirichlet priors on the weights and on each topic row, truncated to
/// topics with every entry >= topic_floor.
struct PriorSpec {
    std::vector<double> weight_prior;
    std::vector<double> topic_prior;
    double topic_floor = 1e-4;

    static PriorSpec uniform(std::size_t K, std::size_t V, double floor = 1e-4);
    /// All hyperparameters <= 1.
    bool regular() const;
    void validate(std::size_t K, std::size_t V) const;
};

enum class SamplerKind {
    /// Blocked random-walk Metropolis on the exact marginal likelihood.
    metropolis,
    /// Gibbs over latent topic indicators with document proportions integrated
    /// out, plus a Metropolis step for the weights. Same posterior on (weights, topics).
    collapsed_gibbs,
};

std::string to_string(SamplerKind s);
SamplerKind sampler_from_string(const std::string& s);

struct McmcOptions {
    std::size_t steps = 2000;
    std::size_t burn_in = 500;
    /// 0 = choose the thinning so that at most max_samples are kept.
    std::size_t thin = 0;
    std::size_t max_samples = 500;
    SamplerKind sampler = SamplerKind::collapsed_gibbs;
    /// Start from this measure instead of a prior draw.
    std::optional<MixingMeasure> init;
    /// Optional extra document whose own topic proportions are tracked.
    std::optional<Document> extra_doc;
};

struct ChainSample {
    MixingMeasure G;
    /// Log of the sampler's target up to a constant: the marginal posterior for
    /// metropolis, the complete-data posterior for collapsed_gibbs.
    double log_target = 0.0;
    /// Topic proportions of the extra document (empty without one).
    std::vector<double> q_extra;
};

struct Chain {
    std::vector<ChainSample> samples;
    /// Acceptance rate per Metropolis block after burn-in: weights, then one
    /// entry per topic row (metropolis only), then q_extra (metropolis only).
    std::vector<double> acceptance;
    std::uint64_t seed = 0;
    std::size_t steps = 0, burn_in = 0, thin = 0;
};

Chain run_mcmc(const Corpus& corpus, std::size_t K, double abar, const PriorSpec& prior,
               const McmcOptions& opts, RngStream& rng);

struct WSummary {
    double mean = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    std::size_t n = 0;
};

/// Mean and quartiles (linear interpolation) of W_r(sample, G0) over the chain.
WSummary posterior_w_summary(const Chain& chain, const MixingMeasure& G0, double r);

/// Sample quantile with linear interpolation between order statistics.
double quantile(std::vector<double> v, double p);

struct SlopeFit {
    double slope = 0.0;
    double slope_se = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares y = intercept + slope * x; needs >= 3 points.
std::optional<SlopeFit> fit_slope(const std::vector<double>& x, const std::vector<double>& y);

/// K_random topics drawn uniformly from the simplex (redrawn until every
/// entry is >= floor) plus, optionally, their average as one more; uniform weights.
MixingMeasure contraction_truth(std::size_t V, std::size_t K_random, bool dependent_topic,
                                const RngStream& rng, double floor = 1e-4);

struct ContractionConfig {
    std::string experiment_id = "contract";
    std::size_t V = 10;
    std::size_t K_random = 3;
    bool dependent_topic = true;
    double abar = 0.5;
    std::size_t N = 20;
    std::vector<std::size_t> m_grid{100, 316, 1000, 3162};
    std::size_t replications = 8;
    std::size_t K_fit = 4;
    double r = 1.0;
    McmcOptions mcmc;
    /// Start every chain at the truth (padded to K_fit atoms) instead of a prior draw.
    bool init_at_truth = true;
    double topic_floor = 1e-4;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
};

struct ContractionRow {
    std::size_t m = 0;
    std::size_t replication = 0;
    WSummary w;
    std::uint64_t seed = 0;
    bool failed = false;
};

struct ContractionResult {
    ContractionConfig config;
    MixingMeasure truth;
    std::vector<ContractionRow> rows;  // ordered by (m, replication)
    /// Mean over replications of the posterior mean W_r, and its quartiles, per m.
    std::vector<WSummary> per_m;
    std::optional<SlopeFit> slope;
    std::size_t failures = 0;
};

/// G0 with K - K0 extra atoms, each a copy of a true atom that then shares
/// its weight equally with the copy. Requires K >= K0.
MixingMeasure pad_measure(const MixingMeasure& G0, std::size_t K);

ContractionResult contraction_experiment(const ContractionConfig& cfg);

struct AllocationConfig {
    std::string experiment_id = "allocation";
    std::size_t V = 6;
    std::size_t K0 = 3;
    double abar = 1.0;
    std::size_t N = 10;
    std::vector<std::size_t> m_grid{200, 400, 800};
    /// Length of the extra document per grid point; same length as m_grid.
    std::vector<std::size_t> ntilde_grid{400, 800, 1600};
    std::vector<double> q_true{0.6, 0.3, 0.1};
    std::size_t replications = 8;
    McmcOptions mcmc;
    bool init_at_truth = true;
    double topic_floor = 1e-4;
    std::uint64_t seed = 2;
    std::size_t jobs = 1;
};

struct AllocationRow {
    std::size_t m = 0;
    std::size_t ntilde = 0;
    std::size_t replication = 0;
    double error = 0.0;  // || q_posterior_mean (aligned) - q_true ||_2
    std::uint64_t seed = 0;
    bool failed = false;
};

struct AllocationResult {
    AllocationConfig config;
    MixingMeasure truth;
    std::vector<AllocationRow> rows;
    std::vector<double> mean_error;  // per grid point
    std::size_t failures = 0;
};

/// Linearly independent truth used by the allocation experiment.
MixingMeasure allocation_truth(std::size_t V, std::size_t K0, const RngStream& rng);

AllocationResult allocation_experiment(const AllocationConfig& cfg);

/// Map from fitted labels to true labels read off the W_1-optimal plan: each
/// fitted atom goes to the true atom receiving most of its mass. Several
/// fitted atoms may share a true label.
std::vector<std::size_t> align_labels(const MixingMeasure& fitted, const MixingMeasure& truth);

}  // namespace dirtensor
