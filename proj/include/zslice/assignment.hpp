#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "zslice/matrix.hpp"

namespace zslice::assignment {

struct Match {
    std::size_t row;
    std::size_t col;

    friend auto operator<=>(const Match&, const Match&) = default;
};

struct Result {
    std::vector<Match> matches;              // ascending row
    std::vector<std::size_t> unmatched_rows;  // ascending
    std::vector<std::size_t> unmatched_cols;  // ascending

    double total_cost(const Matrix& cost) const {
        double total = 0.0;
        for (const auto& m : matches) total += cost(m.row, m.col);
        return total;
    }
};

namespace detail {

// Shortest-augmenting-path Hungarian method with potentials. Requires
// rows <= cols and finite entries; every row is assigned. Returns row -> col.
inline std::vector<std::size_t> hungarian(const Matrix& cost) {
    const std::size_t n = cost.rows();
    const std::size_t m = cost.cols();
    constexpr double inf = std::numeric_limits<double>::infinity();

    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::size_t> row_to_col(n, 0);
    for (std::size_t j = 1; j <= m; ++j) {
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    }
    return row_to_col;
}

struct Optimum {
    std::size_t cardinality = 0;
    double cost = 0.0;
};

// Best (max cardinality, then min cost) matching over allowed entries of the
// submatrix selected by `rows` x `cols`.
inline Optimum best_matching(const Matrix& cost, const std::vector<char>& allowed,
                             const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols,
                             double forbidden, std::vector<Match>* out = nullptr) {
    if (rows.empty() || cols.empty()) return {};
    const bool transpose = rows.size() > cols.size();
    const auto& r = transpose ? cols : rows;
    const auto& c = transpose ? rows : cols;

    Matrix sub(r.size(), c.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        for (std::size_t j = 0; j < c.size(); ++j) {
            const std::size_t row = transpose ? c[j] : r[i];
            const std::size_t col = transpose ? r[i] : c[j];
            sub(i, j) = allowed[row * cost.cols() + col] ? cost(row, col) : forbidden;
        }
    }
    const auto assigned = hungarian(sub);

    std::vector<Match> matches;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const std::size_t row = transpose ? c[assigned[i]] : r[i];
        const std::size_t col = transpose ? r[i] : c[assigned[i]];
        if (allowed[row * cost.cols() + col]) matches.push_back({row, col});
    }
    std::sort(matches.begin(), matches.end());

    Optimum best;
    best.cardinality = matches.size();
    for (const auto& mt : matches) best.cost += cost(mt.row, mt.col);
    if (out) *out = std::move(matches);
    return best;
}

inline bool same_cost(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

}  // namespace detail

/// Exact minimum-cost assignment restricted to entries with cost <= gate.
///
/// Among matchings that use only allowed entries, the result has maximum
/// cardinality and, among those, minimum total cost. Ties between optimal
/// matchings resolve to the lexicographically smallest list of (row, col)
/// pairs. Entries above the gate are replaced by a sentinel larger than any
/// allowed matching's total, so the solver never prefers them.
inline Result solve(const Matrix& cost, double gate) {
    const std::size_t n = cost.rows();
    const std::size_t m = cost.cols();

    std::vector<char> allowed(n * m, 0);
    double max_allowed = 0.0;
    bool any_allowed = false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (cost(i, j) <= gate) {
                allowed[i * m + j] = 1;
                max_allowed = std::max(max_allowed, cost(i, j));
                any_allowed = true;
            }
        }
    }

    Result result;
    if (!any_allowed) {
        for (std::size_t i = 0; i < n; ++i) result.unmatched_rows.push_back(i);
        for (std::size_t j = 0; j < m; ++j) result.unmatched_cols.push_back(j);
        return result;
    }

    const double forbidden = static_cast<double>(std::min(n, m)) * (max_allowed + 1.0) + 1.0;

    std::vector<std::size_t> rows(n), cols(m);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    for (std::size_t j = 0; j < m; ++j) cols[j] = j;

    std::vector<Match> optimal;
    const auto target = detail::best_matching(cost, allowed, rows, cols, forbidden, &optimal);

    // Lexicographic refinement: walk rows in order, pinning each to the
    // smallest column that still admits an optimal completion.
    std::vector<char> col_used(m, 0);
    std::size_t fixed_card = 0;
    double fixed_cost = 0.0;
    for (std::size_t i = 0; i < n && fixed_card < target.cardinality; ++i) {
        std::vector<std::size_t> rest_rows;
        for (std::size_t k = i + 1; k < n; ++k) rest_rows.push_back(k);

        bool pinned = false;
        for (std::size_t j = 0; j < m && !pinned; ++j) {
            if (col_used[j] || !allowed[i * m + j]) continue;
            std::vector<std::size_t> rest_cols;
            for (std::size_t k = 0; k < m; ++k) {
                if (k != j && !col_used[k]) rest_cols.push_back(k);
            }
            const auto rest = detail::best_matching(cost, allowed, rest_rows, rest_cols, forbidden);
            if (fixed_card + 1 + rest.cardinality == target.cardinality &&
                detail::same_cost(fixed_cost + cost(i, j) + rest.cost, target.cost)) {
                result.matches.push_back({i, j});
                col_used[j] = 1;
                ++fixed_card;
                fixed_cost += cost(i, j);
                pinned = true;
            }
        }
    }

    std::vector<char> row_used(n, 0);
    for (const auto& mt : result.matches) row_used[mt.row] = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (!row_used[i]) result.unmatched_rows.push_back(i);
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (!col_used[j]) result.unmatched_cols.push_back(j);
    }
    return result;
}

}  // namespace zslice::assignment
