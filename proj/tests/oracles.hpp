#pragma once

// Independent reference computations used only by tests.

#include <cstddef>
#include <limits>
#include <vector>

#include "zslice/assignment.hpp"
#include "zslice/matrix.hpp"

namespace zslice::oracle {

struct BruteAssignment {
    std::size_t cardinality = 0;
    double cost = 0.0;
    std::vector<assignment::Match> matches;  // lexicographically smallest optimum
};

namespace detail {

inline void enumerate(const Matrix& cost, double gate, std::size_t row, std::vector<char>& col_used,
                      std::vector<assignment::Match>& current, BruteAssignment& best, bool& have_best) {
    if (row == cost.rows()) {
        double total = 0.0;
        for (const auto& m : current) total += cost(m.row, m.col);
        const std::size_t card = current.size();
        bool better = !have_best || card > best.cardinality ||
                      (card == best.cardinality &&
                       (total < best.cost || (total == best.cost && current < best.matches)));
        if (better) {
            best = {card, total, current};
            have_best = true;
        }
        return;
    }
    for (std::size_t j = 0; j < cost.cols(); ++j) {
        if (col_used[j] || cost(row, j) > gate) continue;
        col_used[j] = 1;
        current.push_back({row, j});
        enumerate(cost, gate, row + 1, col_used, current, best, have_best);
        current.pop_back();
        col_used[j] = 0;
    }
    enumerate(cost, gate, row + 1, col_used, current, best, have_best);
}

}  // namespace detail

/// Exhaustive search over every partial matching on entries <= gate: maximum
/// cardinality, then minimum cost (summed in ascending row order), then the
/// lexicographically smallest match list.
inline BruteAssignment brute_force_assignment(const Matrix& cost,
                                              double gate = std::numeric_limits<double>::infinity()) {
    BruteAssignment best;
    bool have_best = false;
    std::vector<char> col_used(cost.cols(), 0);
    std::vector<assignment::Match> current;
    detail::enumerate(cost, gate, 0, col_used, current, best, have_best);
    return best;
}

/// Scalar constant-velocity filter for one decoupled coordinate.
struct ScalarKalman {
    double x, v;
    double pxx, pxv, pvv;

    void predict(double q_pos, double q_vel) {
        x += v;
        const double nxx = pxx + 2 * pxv + pvv + q_pos;
        const double nxv = pxv + pvv;
        const double nvv = pvv + q_vel;
        pxx = nxx;
        pxv = nxv;
        pvv = nvv;
    }

    void update(double z, double r) {
        const double s = pxx + r;
        const double kx = pxx / s;
        const double kv = pxv / s;
        const double innov = z - x;
        x += kx * innov;
        v += kv * innov;
        const double nxx = pxx - kx * pxx;
        const double nxv = pxv - kx * pxv;
        const double nvv = pvv - kv * pxv;
        pxx = nxx;
        pxv = nxv;
        pvv = nvv;
    }
};

}  // namespace zslice::oracle
