#include "dirtensor/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dirtensor {

namespace {

struct Reduced {
    std::size_t m, n;
    std::vector<double> s, d, c;
};

// Path between two nodes of the basis tree (rows are nodes 0..m-1, columns
// m..m+n-1). Returns the basic cells along the path in order.
std::vector<std::size_t> tree_path(const Reduced& p, const std::vector<char>& basic, std::size_t from,
                                   std::size_t to) {
    const std::size_t nodes = p.m + p.n;
    std::vector<std::size_t> parent(nodes, nodes), via(nodes, 0);
    std::vector<std::size_t> queue{from};
    parent[from] = from;
    for (std::size_t head = 0; head < queue.size() && parent[to] == nodes; ++head) {
        const std::size_t a = queue[head];
        if (a < p.m) {
            for (std::size_t j = 0; j < p.n; ++j)
                if (basic[a * p.n + j] && parent[p.m + j] == nodes) {
                    parent[p.m + j] = a;
                    via[p.m + j] = a * p.n + j;
                    queue.push_back(p.m + j);
                }
        } else {
            const std::size_t j = a - p.m;
            for (std::size_t i = 0; i < p.m; ++i)
                if (basic[i * p.n + j] && parent[i] == nodes) {
                    parent[i] = a;
                    via[i] = i * p.n + j;
                    queue.push_back(i);
                }
        }
    }
    if (parent[to] == nodes) throw std::logic_error("transport basis is not a spanning tree");
    std::vector<std::size_t> cells;
    for (std::size_t a = to; a != from; a = parent[a]) cells.push_back(via[a]);
    std::reverse(cells.begin(), cells.end());
    return cells;
}

void potentials(const Reduced& p, const std::vector<char>& basic, std::vector<double>& u,
                std::vector<double>& v) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    u.assign(p.m, nan);
    v.assign(p.n, nan);
    u[0] = 0.0;
    std::vector<std::size_t> queue{0};
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const std::size_t a = queue[head];
        if (a < p.m) {
            for (std::size_t j = 0; j < p.n; ++j)
                if (basic[a * p.n + j] && std::isnan(v[j])) {
                    v[j] = p.c[a * p.n + j] - u[a];
                    queue.push_back(p.m + j);
                }
        } else {
            const std::size_t j = a - p.m;
            for (std::size_t i = 0; i < p.m; ++i)
                if (basic[i * p.n + j] && std::isnan(u[i])) {
                    u[i] = p.c[i * p.n + j] - v[j];
                    queue.push_back(i);
                }
        }
    }
}

}  // namespace

TransportPlan solve_transport(std::span<const double> supply, std::span<const double> demand,
                              std::span<const double> cost) {
    const std::size_t M = supply.size(), Nc = demand.size();
    if (M == 0 || Nc == 0) throw std::invalid_argument("transport needs nonempty marginals");
    if (cost.size() != M * Nc) throw std::invalid_argument("cost matrix size mismatch");
    for (double w : supply)
        if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("negative supply");
    for (double w : demand)
        if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("negative demand");
    for (double c : cost)
        if (!std::isfinite(c)) throw std::invalid_argument("non-finite transport cost");
    const double ts = std::accumulate(supply.begin(), supply.end(), 0.0);
    const double td = std::accumulate(demand.begin(), demand.end(), 0.0);
    if (!(ts > 0.0) || std::abs(ts - td) > 1e-9 * std::max(1.0, ts))
        throw std::invalid_argument("transport marginals must have equal positive mass");

    std::vector<std::size_t> ri, ci;
    for (std::size_t i = 0; i < M; ++i)
        if (supply[i] > 0.0) ri.push_back(i);
    for (std::size_t j = 0; j < Nc; ++j)
        if (demand[j] > 0.0) ci.push_back(j);

    Reduced p{ri.size(), ci.size(), {}, {}, {}};
    for (auto i : ri) p.s.push_back(supply[i]);
    for (auto j : ci) p.d.push_back(demand[j] * ts / td);
    p.c.resize(p.m * p.n);
    double cscale = 0.0;
    for (std::size_t a = 0; a < p.m; ++a)
        for (std::size_t b = 0; b < p.n; ++b) {
            p.c[a * p.n + b] = cost[ri[a] * Nc + ci[b]];
            cscale = std::max(cscale, std::abs(p.c[a * p.n + b]));
        }

    // Northwest-corner start; ties advance the row so the basis keeps m+n-1
    // cells (a zero-valued basic cell stands in for the degenerate step).
    std::vector<double> x(p.m * p.n, 0.0);
    std::vector<char> basic(p.m * p.n, 0);
    {
        auto s = p.s, d = p.d;
        std::size_t i = 0, j = 0;
        while (true) {
            const double q = std::min(s[i], d[j]);
            x[i * p.n + j] = q;
            basic[i * p.n + j] = 1;
            s[i] -= q;
            d[j] -= q;
            if (i == p.m - 1 && j == p.n - 1) break;
            if (i == p.m - 1) ++j;
            else if (j == p.n - 1) ++i;
            else if (s[i] <= d[j]) ++i;
            else ++j;
        }
    }

    const double tol = 1e-12 * std::max(1.0, cscale);
    const std::size_t max_iter = 200 * (p.m * p.n) + 1000;
    std::vector<double> u, v;
    bool last_degenerate = false;
    std::size_t iter = 0;
    for (; iter < max_iter; ++iter) {
        potentials(p, basic, u, v);
        std::size_t enter = p.m * p.n;
        double best = -tol;
        for (std::size_t cell = 0; cell < p.m * p.n; ++cell) {
            if (basic[cell]) continue;
            const double r = p.c[cell] - u[cell / p.n] - v[cell % p.n];
            if (r < best) {
                best = r;
                enter = cell;
                if (last_degenerate) break;  // Bland's rule after a degenerate pivot
            }
        }
        if (enter == p.m * p.n) break;

        const std::size_t ie = enter / p.n, je = enter % p.n;
        const auto path = tree_path(p, basic, ie, p.m + je);
        // path[0] touches row ie and receives "-", signs then alternate.
        double theta = std::numeric_limits<double>::infinity();
        std::size_t leave = p.m * p.n;
        for (std::size_t k = 0; k < path.size(); k += 2)
            if (x[path[k]] < theta || (x[path[k]] == theta && path[k] < leave)) {
                theta = x[path[k]];
                leave = path[k];
            }
        for (std::size_t k = 0; k < path.size(); ++k) x[path[k]] += (k % 2 == 0) ? -theta : theta;
        x[enter] = theta;
        x[leave] = 0.0;
        basic[enter] = 1;
        basic[leave] = 0;
        last_degenerate = theta == 0.0;
    }
    if (iter == max_iter) throw std::runtime_error("transport simplex did not converge");

    TransportPlan plan{M, Nc, std::vector<double>(M * Nc, 0.0), 0.0};
    for (std::size_t a = 0; a < p.m; ++a)
        for (std::size_t b = 0; b < p.n; ++b) {
            const double q = std::max(0.0, x[a * p.n + b]);
            plan.mass[ri[a] * Nc + ci[b]] = q;
            plan.cost += q * p.c[a * p.n + b];
        }
    return plan;
}

}  // namespace dirtensor
