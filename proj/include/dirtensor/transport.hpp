#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dirtensor {

/// Coupling between a source and a target weight vector.
struct TransportPlan {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> mass;  // row-major rows x cols
    double cost = 0.0;

    double operator()(std::size_t i, std::size_t j) const { return mass[i * cols + j]; }
};

/// Exact balanced transportation problem: min sum q_ij c_ij subject to row
/// sums = supply and column sums = demand. Solved by the transportation
/// simplex (u-v potentials) from a northwest-corner basis. Zero-weight rows and
/// columns are dropped before solving and come back as zero rows/columns.
/// Demand is rescaled to the supply total when the two differ by round-off;
/// larger mismatches (> 1e-9) are rejected.
TransportPlan solve_transport(std::span<const double> supply, std::span<const double> demand,
                              std::span<const double> cost);

}  // namespace dirtensor
