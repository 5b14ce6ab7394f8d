#include "dirtensor/combinatorics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dirtensor {

namespace {

void require_exact_range(std::size_t N, std::size_t n) {
    if (N > kMaxExactN)
        throw std::out_of_range("exact integer mode supports N <= " + std::to_string(kMaxExactN));
    if (n > N) throw std::out_of_range("block count exceeds ground set size");
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("64-bit overflow");
    return r;
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("64-bit overflow");
    return r;
}

// Integer partitions of N as nonincreasing part lists.
void integer_partitions(std::size_t remaining, std::size_t max_part, std::vector<std::size_t>& cur,
                        const std::function<void(const std::vector<std::size_t>&)>& visit) {
    if (remaining == 0) {
        visit(cur);
        return;
    }
    for (std::size_t p = std::min(remaining, max_part); p >= 1; --p) {
        cur.push_back(p);
        integer_partitions(remaining - p, p, cur, visit);
        cur.pop_back();
    }
}

}  // namespace

SetPartition::SetPartition(std::size_t n, std::vector<std::vector<std::size_t>> blocks)
    : n_(n), blocks_(std::move(blocks)) {
    std::vector<bool> seen(n_, false);
    std::size_t covered = 0;
    for (auto& b : blocks_) {
        if (b.empty()) throw std::invalid_argument("set partition has an empty block");
        std::sort(b.begin(), b.end());
        for (std::size_t e : b) {
            if (e >= n_ || seen[e]) throw std::invalid_argument("set partition blocks overlap");
            seen[e] = true;
            ++covered;
        }
    }
    if (covered != n_) throw std::invalid_argument("set partition does not cover ground set");
    std::sort(blocks_.begin(), blocks_.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
}

SetPartition SetPartition::from_rgs(std::span<const std::size_t> rgs) {
    std::vector<std::vector<std::size_t>> blocks;
    for (std::size_t i = 0; i < rgs.size(); ++i) {
        if (rgs[i] > blocks.size()) throw std::invalid_argument("not a restricted growth string");
        if (rgs[i] == blocks.size()) blocks.emplace_back();
        blocks[rgs[i]].push_back(i);
    }
    return SetPartition(rgs.size(), std::move(blocks));
}

std::vector<std::size_t> SetPartition::block_sizes() const {
    std::vector<std::size_t> s;
    s.reserve(blocks_.size());
    for (const auto& b : blocks_) s.push_back(b.size());
    return s;
}

std::vector<std::size_t> SetPartition::rgs() const {
    std::vector<std::size_t> a(n_);
    for (std::size_t i = 0; i < blocks_.size(); ++i)
        for (std::size_t e : blocks_[i]) a[e] = i;
    return a;
}

void for_each_rgs(std::size_t N,
                  const std::function<void(std::span<const std::size_t>, std::size_t)>& visit) {
    if (N == 0) throw std::invalid_argument("set partitions need N >= 1");
    std::vector<std::size_t> a(N, 0);
    // prefix_max[i] = max(a[0..i])
    std::vector<std::size_t> prefix_max(N, 0);
    while (true) {
        visit(a, prefix_max[N - 1] + 1);
        // find rightmost position that can be incremented
        std::size_t i = N - 1;
        while (i > 0 && a[i] == prefix_max[i - 1] + 1) --i;
        if (i == 0) return;
        ++a[i];
        prefix_max[i] = std::max(prefix_max[i - 1], a[i]);
        for (std::size_t j = i + 1; j < N; ++j) {
            a[j] = 0;
            prefix_max[j] = prefix_max[i];
        }
    }
}

void for_each_set_partition(std::size_t N, const std::function<void(const SetPartition&)>& visit) {
    for_each_rgs(N, [&](std::span<const std::size_t> a, std::size_t) {
        visit(SetPartition::from_rgs(a));
    });
}

std::vector<SetPartition> set_partitions(std::size_t N, std::size_t n) {
    if (n < 1 || n > N) throw std::invalid_argument("set_partitions requires 1 <= n <= N");
    std::vector<SetPartition> out;
    for_each_rgs(N, [&](std::span<const std::size_t> a, std::size_t blocks) {
        if (blocks == n) out.push_back(SetPartition::from_rgs(a));
    });
    return out;
}

std::uint64_t stirling2(std::size_t N, std::size_t n) {
    require_exact_range(N, n);
    // S(i, j) = j S(i-1, j) + S(i-1, j-1)
    std::vector<std::uint64_t> row(N + 1, 0);
    row[0] = 1;
    for (std::size_t i = 1; i <= N; ++i) {
        for (std::size_t j = i; j >= 1; --j) row[j] = checked_add(checked_mul(j, row[j]), row[j - 1]);
        row[0] = 0;
    }
    return row[n];
}

std::uint64_t stirling1_unsigned(std::size_t N, std::size_t n) {
    require_exact_range(N, n);
    // c(i, j) = (i-1) c(i-1, j) + c(i-1, j-1)
    std::vector<std::uint64_t> row(N + 1, 0);
    row[0] = 1;
    for (std::size_t i = 1; i <= N; ++i) {
        for (std::size_t j = i; j >= 1; --j)
            row[j] = checked_add(checked_mul(i - 1, row[j]), row[j - 1]);
        row[0] = 0;
    }
    return row[n];
}

std::uint64_t bell_number(std::size_t N) {
    require_exact_range(N, 0);
    std::uint64_t total = N == 0 ? 1 : 0;
    for (std::size_t n = 1; n <= N; ++n) total = checked_add(total, stirling2(N, n));
    return total;
}

std::uint64_t factorial(std::size_t n) {
    std::uint64_t f = 1;
    for (std::size_t i = 2; i <= n; ++i) f = checked_mul(f, i);
    return f;
}

double rising_factorial(double a, std::size_t n) {
    if (!(a > 0.0)) throw std::invalid_argument("rising_factorial requires a > 0");
    double r = 1.0;
    for (std::size_t i = 0; i < n; ++i) r *= a + static_cast<double>(i);
    return r;
}

double log_rising_factorial(double a, std::size_t n) {
    if (!(a > 0.0)) throw std::invalid_argument("log_rising_factorial requires a > 0");
    // The lgamma difference cancels badly when a dominates n; sum logs there.
    if (n <= 4096 || a > static_cast<double>(n)) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += std::log(a + static_cast<double>(i));
        return s;
    }
    return std::lgamma(a + static_cast<double>(n)) - std::lgamma(a);
}

double ewens_weight(const SetPartition& p, double abar) {
    if (!(abar > 0.0)) throw std::invalid_argument("ewens_weight requires abar > 0");
    const std::size_t N = p.ground_size();
    const double denom = rising_factorial(abar, N);
    if (std::isfinite(denom) && denom < 1e300) {
        double num = std::pow(abar, static_cast<double>(p.num_blocks()));
        for (std::size_t s : p.block_sizes()) num *= std::tgamma(static_cast<double>(s));
        return num / denom;
    }
    double lw = static_cast<double>(p.num_blocks()) * std::log(abar);
    for (std::size_t s : p.block_sizes()) lw += std::lgamma(static_cast<double>(s));
    return std::exp(lw - log_rising_factorial(abar, N));
}

double c1_constant(std::size_t N, double abar) {
    if (N == 0) throw std::invalid_argument("c1_constant requires N >= 1");
    if (!(abar > 0.0)) throw std::invalid_argument("c1_constant requires abar > 0");
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += abar / (abar + static_cast<double>(i));
    return s;
}

double c1_constant_by_partitions(std::size_t N, double abar) {
    double s = 0.0;
    for_each_set_partition(N, [&](const SetPartition& p) {
        s += static_cast<double>(p.num_blocks()) * ewens_weight(p, abar);
    });
    return s;
}

double c2_constant(std::size_t N, double abar) {
    if (N == 0) throw std::invalid_argument("c2_constant requires N >= 1");
    if (!(abar > 0.0)) throw std::invalid_argument("c2_constant requires abar > 0");
    // Group set partitions by block-size multiset: a multiset with parts s_i
    // and multiplicities m_j is realised by N! / (prod s_i! prod m_j!) partitions.
    double total = 0.0;
    std::vector<std::size_t> cur;
    const double log_n_fact = std::lgamma(static_cast<double>(N) + 1.0);
    integer_partitions(N, N, cur, [&](const std::vector<std::size_t>& parts) {
        double log_count = log_n_fact;
        double log_term = std::lgamma(static_cast<double>(parts.size()));  // (n-1)!
        for (std::size_t s : parts) {
            log_count -= std::lgamma(static_cast<double>(s) + 1.0);
            log_term += log_rising_factorial(abar, s);
        }
        for (std::size_t i = 0; i < parts.size();) {
            std::size_t j = i;
            while (j < parts.size() && parts[j] == parts[i]) ++j;
            log_count -= std::lgamma(static_cast<double>(j - i) + 1.0);
            i = j;
        }
        total += std::exp(log_count + log_term);
    });
    return total / (std::exp(std::lgamma(static_cast<double>(N))) * abar);
}

}  // namespace dirtensor
