#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace dirtensor {

/// Partition of {0..N-1} into nonempty blocks, kept canonical: blocks
/// ordered by their minimum element, elements ascending within a block.
class SetPartition {
public:
    SetPartition() = default;
    /// Validates disjointness and coverage, then canonicalizes.
    SetPartition(std::size_t n, std::vector<std::vector<std::size_t>> blocks);
    /// From a restricted-growth string a: a[0]=0, a[i] <= 1 + max(a[0..i-1]).
    static SetPartition from_rgs(std::span<const std::size_t> rgs);

    std::size_t ground_size() const { return n_; }
    std::size_t num_blocks() const { return blocks_.size(); }
    const std::vector<std::vector<std::size_t>>& blocks() const { return blocks_; }
    std::vector<std::size_t> block_sizes() const;
    std::vector<std::size_t> rgs() const;

    friend bool operator==(const SetPartition&, const SetPartition&) = default;

private:
    std::size_t n_ = 0;
    std::vector<std::vector<std::size_t>> blocks_;
};

/// Largest N accepted by the exact integer routines.
inline constexpr std::size_t kMaxExactN = 20;

/// Visits every partition of {0..N-1} (all block counts) in lexicographic
/// restricted-growth-string order. The callback sees the RGS and the block count.
void for_each_rgs(std::size_t N,
                  const std::function<void(std::span<const std::size_t>, std::size_t)>& visit);

/// Visits every partition of {0..N-1} in lexicographic RGS order.
void for_each_set_partition(std::size_t N, const std::function<void(const SetPartition&)>& visit);

/// All partitions of {0..N-1} with exactly n blocks, lexicographic RGS order.
std::vector<SetPartition> set_partitions(std::size_t N, std::size_t n);

std::uint64_t stirling2(std::size_t N, std::size_t n);
std::uint64_t stirling1_unsigned(std::size_t N, std::size_t n);
std::uint64_t bell_number(std::size_t N);
std::uint64_t factorial(std::size_t n);

/// a (a+1) ... (a+n-1); a^{[0]} = 1. Requires a > 0.
double rising_factorial(double a, std::size_t n);
double log_rising_factorial(double a, std::size_t n);

/// Ewens partition probability abar^{#blocks} prod (|S|-1)! / abar^{[N]}.
double ewens_weight(const SetPartition& p, double abar);

/// Expected block count of an Ewens(abar) partition of N: sum_i abar/(abar+i).
double c1_constant(std::size_t N, double abar);
/// Same quantity assembled from the partition sum; used as a cross-check.
double c1_constant_by_partitions(std::size_t N, double abar);
/// (1/((N-1)! abar)) sum_n (n-1)! sum_{P(N,n)} prod_i abar^{[|S_i|]}.
double c2_constant(std::size_t N, double abar);

}  // namespace dirtensor
