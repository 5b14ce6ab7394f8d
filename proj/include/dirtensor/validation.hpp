#pragma once

// Validation grids shared by the command-line tool and the acceptance runner.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dirtensor/identifiability.hpp"
#include "dirtensor/rng.hpp"

namespace dirtensor {

// ---- decomposition and correspondence identities ----

struct IdentityGridConfig {
    std::size_t K_max = 4;
    std::size_t N_max = 5;
    std::size_t alphas_per_cell = 20;
    double abar_min = 0.1;  // abar is log-uniform on [abar_min, abar_max]
    double abar_max = 10.0;

    std::size_t corr_K_max = 3;
    std::vector<std::size_t> corr_V{2, 3};
    std::size_t corr_N_max = 5;
    std::vector<double> corr_abar{0.3, 1.0, 4.0};
    std::size_t measures_per_cell = 10;

    /// Relative perturbation applied to every assembled entry (negative control).
    double fuzz = 0.0;
};

struct IdentityCell {
    std::string check;  // forward | inverse | lda_from_mixture | mixture_from_lda
    std::size_t K = 0, V = 0, N = 0;
    double abar = 0.0;  // 0 for the moment grids, where abar is drawn per trial
    std::size_t trials = 0;
    double max_rel_err = 0.0;  // |a-b| / max(|b|, 1e-12)
    double max_abs_err = 0.0;
    double max_ratio = 0.0;    // |a-b| / max(1e-10 |b|, 1e-12); <= 1 passes
    bool pass() const { return max_ratio <= 1.0; }
};

/// Forward (inverse = false) or inverse expansion against the closed form /
/// the diagonal tensor, for K = 1..K_max, N = 1..N_max.
std::vector<IdentityCell> moment_identity_grid(const IdentityGridConfig& cfg, bool inverse, const RngStream& rng);

/// Both correspondence directions against the direct densities.
std::vector<IdentityCell> correspondence_grid(const IdentityGridConfig& cfg, const RngStream& rng);

// ---- linear moments ----

struct MomentsConfig {
    std::vector<double> alpha{0.3, 0.3, 0.4};
    std::vector<double> x{0.6, 0.7, 0.8};
    std::size_t N_max = 5;
    std::vector<std::size_t> m_grid{100, 316, 1000, 3162, 10000, 31623, 100000};
    std::size_t replications = 16;
    std::size_t pairs = 100;
    std::size_t pair_N_max = 10;
    std::size_t pair_m = 1000;
    /// Recursion is compared with the contracted moment tensor up to this order.
    std::size_t contraction_N_max = 8;
    double fuzz = 0.0;
    std::size_t jobs = 1;
};

struct MomentConvergenceRow {
    std::size_t N = 0, m = 0;
    double theoretical = 0.0;
    double mean = 0.0, q25 = 0.0, q75 = 0.0;  // over replications
};

struct MomentPairRow {
    std::size_t pair = 0, N = 0;
    std::vector<double> alpha, x;
    double theoretical = 0.0;
    double empirical = 0.0;
    double std_error = 0.0;
    bool within_3se() const;
};

struct MomentCrossCheck {
    std::size_t pair = 0;  // 0 = fixed configuration, i = random pair i
    std::size_t N = 0;
    double recursive = 0.0, contracted = 0.0;
    bool pass = false;     // |r - c| <= max(1e-10 |c|, 1e-12)
};

struct MomentsResult {
    std::vector<MomentConvergenceRow> convergence;
    std::vector<MomentPairRow> pairs;
    std::vector<MomentCrossCheck> cross_checks;
    bool cross_checks_pass() const;
    double pair_coverage() const;  // fraction of pair rows within 3 SE
};

MomentsResult moments_validation(const MomentsConfig& cfg, const RngStream& rng);

// ---- distance comparison audit ----

struct DistanceAuditConfig {
    std::vector<std::size_t> N{1, 2, 3, 4};
    std::vector<double> abar{0.3, 1.0, 4.0};
    std::size_t pairs = 200;
    std::size_t K_max = 3;
    std::size_t V_max = 3;
};

struct DistanceAuditCell {
    std::size_t N = 0;
    double abar = 0.0;
    std::size_t pairs = 0;
    std::size_t tv_violations = 0, h2_violations = 0, kl_violations = 0, converse_violations = 0;
    std::size_t kl_skipped = 0;
    double c1 = 0.0, c1_partitions = 0.0, c2 = 0.0;
    double max_tv_ratio = 0.0;  // max tv_lda / (c1 tv_mix)
    std::size_t violations() const {
        return tv_violations + h2_violations + kl_violations + converse_violations;
    }
};

std::vector<DistanceAuditCell> distance_audit(const DistanceAuditConfig& cfg, const RngStream& rng);

// ---- identifiability table ----

struct TableInstance {
    TopicCondition condition = TopicCondition::distinct;
    std::size_t K0 = 2;
    std::size_t V = 2;
};

struct TableConfig {
    std::vector<TableInstance> instances{
        {TopicCondition::distinct, 2, 2},           {TopicCondition::distinct, 3, 2},
        {TopicCondition::linearly_independent, 2, 3}, {TopicCondition::linearly_independent, 3, 3},
        {TopicCondition::anchor_word, 2, 3},        {TopicCondition::anchor_word, 3, 4},
    };
    double abar = 1.0;
    ProbeOptions probe;
    /// Also probe the mixture family on every cell.
    bool both_models = false;
};

struct TableRow {
    TopicCondition condition = TopicCondition::distinct;
    std::size_t K0 = 0, V = 0, N = 0, K_fit = 0;
    ModelKind model = ModelKind::lda;
    std::size_t rank = 0, kruskal_rank = 0;
    IdentifiabilityReport report;
    std::size_t bound = 0;      // table bound for this setting
    std::size_t alt_bound = 0;  // over-fitted only: K0 + K - 1
    bool overfitted() const { return K_fit > K0; }
    bool false_counterexample() const { return N >= bound && report.verdict == Verdict::counterexample; }
};

/// N runs from 1 to max(exact bound, over-fitted bound) per instance, with
/// K_fit = K0 and K0 + 1.
std::vector<TableRow> identifiability_table(const TableConfig& cfg, const RngStream& rng);

}  // namespace dirtensor
