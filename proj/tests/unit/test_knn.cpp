// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "sven/knn.hpp"

using namespace sven;

namespace {

// Independent oracle: full distance table, full sort.
std::vector<std::pair<double, std::size_t>> full_sort(const Matrix& m, const std::vector<std::size_t>& subset,
                                                      const std::vector<float>& q) {
    std::vector<std::pair<double, std::size_t>> all;
    for (auto r : subset) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.dim; ++j) s += std::pow(double(m.row(r)[j]) - q[j], 2);
        all.emplace_back(std::sqrt(s), r);
    }
    std::sort(all.begin(), all.end());
    return all;
}

} // namespace

TEST(TopK, TwoPointGeometry) {
    const Matrix m(2, 2, {1, 0, 0, 1});
    const std::vector<float> q = {0.9f, 0.1f};
    const auto nn = top_k(m, q, 1);
    ASSERT_EQ(nn.size(), 1u);
    EXPECT_EQ(nn[0].row_index, 0u);
    EXPECT_NEAR(nn[0].distance, std::sqrt(0.02), 1e-6);
}

TEST(TopK, QueryOnARowComesFirstAtZero) {
    const Matrix m(3, 2, {0, 0, 5, 5, 1, 2});
    const std::vector<float> q = {1, 2};
    const auto nn = top_k(m, q, 3);
    EXPECT_EQ(nn[0].row_index, 2u);
    EXPECT_EQ(nn[0].distance, 0.0f);
}

TEST(TopK, TiesBreakByRowIndex) {
    const Matrix m(4, 1, {1, -1, 1, -1});
    const std::vector<float> q = {0};
    const auto nn = top_k(m, q, 4);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(nn[i].row_index, i);
}

TEST(TopK, ReturnsAtMostSubsetSize) {
    const Matrix m(3, 1, {0, 1, 2});
    const std::vector<std::size_t> subset = {2, 0};
    const std::vector<float> q = {0};
    const auto nn = top_k(m, subset, q, 10);
    ASSERT_EQ(nn.size(), 2u);
    EXPECT_EQ(nn[0].row_index, 0u);
    EXPECT_EQ(nn[1].row_index, 2u);
}

TEST(TopK, Errors) {
    const Matrix m(2, 2, {0, 0, 1, 1});
    const std::vector<float> bad = {0, 0, 0};
    const std::vector<float> q = {0, 0};
    EXPECT_THROW(top_k(m, bad, 1), Error);
    EXPECT_THROW(top_k(m, std::vector<std::size_t>{}, q, 1), Error);
}

TEST(TopK, MatchesFullSortOracleOnRandomMatrix) {
    std::mt19937 gen(5);
    std::normal_distribution<float> nd;
    Matrix m(50, 8);
    for (auto& v : m.data) v = nd(gen);
    std::vector<std::size_t> all(50);
    for (std::size_t i = 0; i < 50; ++i) all[i] = i;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<float> q(8);
        for (auto& v : q) v = nd(gen);
        const auto nn = top_k(m, q, 5);
        const auto ref = full_sort(m, all, q);
        ASSERT_EQ(nn.size(), 5u);
        for (std::size_t i = 0; i < 5; ++i) {
            EXPECT_EQ(nn[i].row_index, ref[i].second);
            EXPECT_NEAR(nn[i].distance, ref[i].first, 1e-6);
        }
    }
}

TEST(TopK, SubsetOrderDoesNotMatter) {
    std::mt19937 gen(9);
    std::normal_distribution<float> nd;
    Matrix m(40, 3);
    for (auto& v : m.data) v = nd(gen);
    std::vector<std::size_t> subset = {3, 7, 11, 19, 23, 31, 37, 2, 5};
    const std::vector<float> q = {0.1f, -0.2f, 0.3f};
    const auto a = top_k(m, subset, q, 4);
    std::reverse(subset.begin(), subset.end());
    EXPECT_EQ(top_k(m, subset, q, 4), a);
}

TEST(TopK, CosineMetric) {
    const Matrix m(3, 2, {1, 0, 0, 1, 10, 1});
    const std::vector<float> q = {2, 0};
    const auto nn = top_k(m, q, 3, Metric::cosine);
    EXPECT_EQ(nn[0].row_index, 0u);
    EXPECT_NEAR(nn[0].distance, 0.0f, 1e-7);
    EXPECT_EQ(nn[1].row_index, 2u);
    EXPECT_NEAR(nn[2].distance, 1.0f, 1e-7);
}

TEST(Distance, SymmetricAndZeroOnSelf) {
    const std::vector<float> a = {1, 2, 3}, b = {-1, 0.5f, 7};
    EXPECT_EQ(distance(a, a, Metric::euclidean), 0.0f);
    EXPECT_EQ(distance(a, b, Metric::euclidean), distance(b, a, Metric::euclidean));
}

TEST(DistanceStats, QueryOnItsPassage) {
    const Matrix m(3, 2, {0, 0, 1, 0, 5, 5});
    const CorpusIndex index({"a", "b", "c"});
    QuerySet qs{{"q"}, Matrix(1, 2, {1, 0})};
    RelevanceJudgments qrels;
    qrels.relevant["q"] = {"b"};
    const auto rep = distance_stats(qs, qrels, m, index);
    ASSERT_EQ(rep.per_query.size(), 1u);
    EXPECT_EQ(rep.per_query[0].min_distance, 0.0);
    EXPECT_EQ(rep.per_query[0].rank, 1u);
}

TEST(DistanceStats, HandEnumeratedRanks) {
    // Points on a line: a=0, b=2, c=5.
    // q1 at 1.5: distances a 1.5, b 0.5, c 3.5 -> relevant c has rank 3.
    // q2 at 4.0: distances a 4, b 2, c 1     -> relevant {a,b}: nearest b, rank 2.
    // q3 at 1.0: distances a 1, b 1 (tie, a first by row), c 4 -> relevant b rank 2.
    const Matrix m(3, 1, {0, 2, 5});
    const CorpusIndex index({"a", "b", "c"});
    QuerySet qs{{"q1", "q2", "q3"}, Matrix(3, 1, {1.5f, 4.0f, 1.0f})};
    RelevanceJudgments qrels;
    qrels.relevant["q1"] = {"c"};
    qrels.relevant["q2"] = {"a", "b"};
    qrels.relevant["q3"] = {"b"};
    const auto rep = distance_stats(qs, qrels, m, index);
    ASSERT_EQ(rep.per_query.size(), 3u);
    EXPECT_EQ(rep.per_query[0].rank, 3u);
    EXPECT_DOUBLE_EQ(rep.per_query[0].min_distance, 3.5);
    EXPECT_EQ(rep.per_query[1].rank, 2u);
    EXPECT_EQ(rep.per_query[1].nearest_relevant, "b");
    EXPECT_EQ(rep.per_query[2].rank, 2u);
    // distances 3.5, 2, 1 -> mean 6.5/3, median 2, p90 = 2 + 0.8*(3.5-2) = 3.2
    EXPECT_NEAR(rep.mean_distance, 6.5 / 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(rep.median_distance, 2.0);
    EXPECT_NEAR(rep.p90_distance, 3.2, 1e-12);
    EXPECT_DOUBLE_EQ(rep.median_rank, 2.0);
}

TEST(DistanceStats, UnknownPassageThrows) {
    const Matrix m(1, 1, {0});
    const CorpusIndex index({"a"});
    QuerySet qs{{"q"}, Matrix(1, 1, {0})};
    RelevanceJudgments qrels;
    qrels.relevant["q"] = {"zz"};
    EXPECT_THROW(distance_stats(qs, qrels, m, index), Error);
}
