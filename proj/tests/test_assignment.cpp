#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "zslice/assignment.hpp"

using zslice::Matrix;
using zslice::assignment::Match;
using zslice::assignment::solve;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix make(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
    std::size_t r = 0;
    for (const auto& row : rows) {
        std::size_t c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

// Costs are multiples of 1/64 so sums are exact and ties are common.
Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::uniform_int_distribution<int> q(0, 64);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = q(rng) / 64.0;
    }
    return m;
}

}  // namespace

TEST(Assignment, Examples) {
    const auto a = make({{4, 1}, {2, 3}});
    const auto ra = solve(a, kInf);
    EXPECT_EQ(ra.matches, (std::vector<Match>{{0, 1}, {1, 0}}));
    EXPECT_DOUBLE_EQ(ra.total_cost(a), 3.0);

    const auto b = make({{0, 9}, {9, 0}});
    EXPECT_EQ(solve(b, kInf).matches, (std::vector<Match>{{0, 0}, {1, 1}}));

    const auto c = make({{0.9, 0.8}, {0.7, 0.95}});
    const auto rc = solve(c, 0.5);
    EXPECT_TRUE(rc.matches.empty());
    EXPECT_EQ(rc.unmatched_rows, (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(rc.unmatched_cols, (std::vector<std::size_t>{0, 1}));
}

TEST(Assignment, EmptyMatrices) {
    const auto r0 = solve(Matrix(0, 3), kInf);
    EXPECT_TRUE(r0.matches.empty());
    EXPECT_TRUE(r0.unmatched_rows.empty());
    EXPECT_EQ(r0.unmatched_cols.size(), 3u);
    const auto r1 = solve(Matrix(2, 0), kInf);
    EXPECT_EQ(r1.unmatched_rows.size(), 2u);
    EXPECT_TRUE(r1.unmatched_cols.empty());
}

TEST(Assignment, GatePrefersMoreAdmissiblePairs) {
    // (0,0)+(1,1) costs 0.9 with both under the gate; (0,1) alone is cheaper but smaller.
    const auto m = make({{0.45, 0.1}, {0.9, 0.45}});
    const auto r = solve(m, 0.5);
    EXPECT_EQ(r.matches, (std::vector<Match>{{0, 0}, {1, 1}}));
}

TEST(Assignment, TiesResolveLexicographically) {
    const auto m = make({{1, 1, 1}, {1, 1, 1}});
    EXPECT_EQ(solve(m, kInf).matches, (std::vector<Match>{{0, 0}, {1, 1}}));
    const auto tall = make({{0.5}, {0.5}, {0.5}});
    const auto r = solve(tall, kInf);
    EXPECT_EQ(r.matches, (std::vector<Match>{{0, 0}}));
    EXPECT_EQ(r.unmatched_rows, (std::vector<std::size_t>{1, 2}));
}

TEST(Assignment, MatchesBruteForceOracle) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> dim(0, 6);
    std::uniform_real_distribution<double> gate(0.2, 1.2);
    for (int trial = 0; trial < 600; ++trial) {
        const Matrix m = random_matrix(rng, dim(rng), dim(rng));
        const double g = trial % 3 == 0 ? kInf : gate(rng);
        const auto got = solve(m, g);
        const auto want = zslice::oracle::brute_force_assignment(m, g);
        ASSERT_EQ(got.matches, want.matches) << "trial " << trial;
        ASSERT_EQ(got.total_cost(m), want.cost);
        for (const auto& mt : got.matches) ASSERT_LE(m(mt.row, mt.col), g);
        ASSERT_EQ(got.matches.size() + got.unmatched_rows.size(), m.rows());
        ASSERT_EQ(got.matches.size() + got.unmatched_cols.size(), m.cols());
    }
}

TEST(Assignment, ContinuousCostsMatchBruteForceMinimum) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + trial % 7, k = 1 + (trial / 7) % 7;
        Matrix m(n, k);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) m(i, j) = u(rng);
        }
        EXPECT_EQ(solve(m, kInf).total_cost(m), zslice::oracle::brute_force_assignment(m).cost);
    }
}

TEST(Assignment, RowPermutationEquivariance) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 5, k = 6;
        Matrix m(n, k);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) m(i, j) = u(rng);
        }
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix pm(n, k);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) pm(i, j) = m(perm[i], j);
        }
        const auto base = solve(m, 0.7);
        const auto permuted = solve(pm, 0.7);
        std::vector<Match> mapped;
        for (const auto& mt : permuted.matches) mapped.push_back({perm[mt.row], mt.col});
        std::sort(mapped.begin(), mapped.end());
        EXPECT_EQ(mapped, base.matches) << "trial " << trial;
    }
}
