// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "sven/bagging.hpp"

using namespace sven;

namespace {

std::set<std::size_t> union_of(const BaggingPlan& p) {
    std::set<std::size_t> all;
    for (const auto& s : p.subsets) all.insert(s.begin(), s.end());
    return all;
}

} // namespace

TEST(Bagging, NoOverlapIsAPartition) {
    const auto p = make_plan(10, 2, 0.0, 1);
    ASSERT_EQ(p.subsets.size(), 2u);
    EXPECT_EQ(p.subsets[0].size(), 5u);
    EXPECT_EQ(p.subsets[1].size(), 5u);
    std::vector<std::size_t> both;
    std::set_intersection(p.subsets[0].begin(), p.subsets[0].end(), p.subsets[1].begin(), p.subsets[1].end(),
                          std::back_inserter(both));
    EXPECT_TRUE(both.empty());
    EXPECT_EQ(union_of(p).size(), 10u);
}

TEST(Bagging, SingleSubsetHoldsEverything) {
    const auto p = make_plan(10, 1, 0.6, 3);
    ASSERT_EQ(p.subsets.size(), 1u);
    EXPECT_EQ(p.subsets[0].size(), 10u);
}

TEST(Bagging, OverlapAddsFloorOfFraction) {
    // Shards of 5; 0.6 * 5 = 3 extra rows each.
    const auto p = make_plan(10, 2, 0.6, 9);
    for (const auto& s : p.subsets) {
        EXPECT_EQ(s.size(), 8u);
        EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
        EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), s.size());
    }
}

TEST(Bagging, FullScaleSizes) {
    const std::size_t n = 3095383;
    EXPECT_EQ(ceil_div(n, 35), 88440u);
    EXPECT_EQ(expected_subset_size(n, 35, 0.6, 0), 141504u);
    EXPECT_EQ(expected_subset_size(n, 35, 0.6, 34), 88423u + 53053u);

    const auto p = make_plan(n, 35, 0.6, 42);
    EXPECT_EQ(p.base_shard_size, 88440u);
    for (std::size_t j = 0; j + 1 < 35; ++j) EXPECT_EQ(p.subsets[j].size(), 141504u);
    EXPECT_EQ(p.subsets[34].size(), 141476u);
    EXPECT_EQ(union_of(p).size(), n);
}

TEST(Bagging, SameSeedSamePlan) {
    EXPECT_EQ(make_plan(1000, 7, 0.3, 11), make_plan(1000, 7, 0.3, 11));
    EXPECT_NE(make_plan(1000, 7, 0.3, 11), make_plan(1000, 7, 0.3, 12));
}

TEST(Bagging, RejectsBadParameters) {
    EXPECT_THROW(make_plan(10, 0, 0.0, 1), Error);
    EXPECT_THROW(make_plan(10, 11, 0.0, 1), Error);
    EXPECT_THROW(make_plan(10, 2, 1.0, 1), Error);
    EXPECT_THROW(make_plan(10, 2, -0.1, 1), Error);
    // n = 10, s = 6: shards of 2, the first five use all 10 rows.
    EXPECT_NO_THROW(make_plan(10, 4, 0.0, 1));
    EXPECT_THROW(make_plan(10, 6, 0.0, 1), Error);
}

TEST(Bagging, QueryAssignmentMatchesMembershipScan) {
    std::vector<std::string> ids;
    for (int i = 0; i < 100; ++i) ids.push_back("p" + std::to_string(i));
    const CorpusIndex index(ids);
    RelevanceJudgments qrels;
    for (int q = 0; q < 30; ++q) {
        qrels.relevant["q" + std::to_string(q)].insert("p" + std::to_string((q * 37) % 100));
        if (q % 3 == 0) qrels.relevant["q" + std::to_string(q)].insert("p" + std::to_string((q * 11 + 5) % 100));
    }
    const auto plan = make_plan(100, 4, 0.5, 7);
    const auto got = assign_queries(plan, qrels, index);

    for (const auto& [qid, pids] : qrels.relevant) {
        std::vector<std::size_t> expect;
        for (std::size_t j = 0; j < plan.subsets.size(); ++j) {
            for (const auto& pid : pids) {
                const auto& s = plan.subsets[j];
                if (std::find(s.begin(), s.end(), index.row(pid)) != s.end()) {
                    expect.push_back(j);
                    break;
                }
            }
        }
        EXPECT_EQ(got.at(qid), expect) << qid;
    }
}
