// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#pragma once

#include <cmath>

#include "sven/corpus.hpp"
#include "sven/run.hpp"

namespace sven::testing {

// Five judged queries:
//   q1 {a}    a at rank 1
//   q2 {b}    b at rank 2 behind x
//   q3 {c,d}  c at rank 1, d at rank 3 but not flagged positive
//   q4 {e}    e at rank 11
//   q5 {f}    absent from the run
struct MetricFixture {
    RunFile run;
    RelevanceJudgments qrels;

    double mrr10 = (1.0 + 0.5 + 1.0 + 0.0 + 0.0) / 5.0;
    double ndcg20 = (1.0 + 1.0 / std::log2(3.0) + 1.5 / (1.0 + 1.0 / std::log2(3.0)) + 1.0 / std::log2(12.0)) / 5.0;
    double recall = 4.0 / 6.0;     // a, b, c, e
    double recall_at_2 = 3.0 / 6.0; // a, b, c
    double hit_rate = 4.0 / 5.0;
};

inline MetricFixture metric_fixture() {
    MetricFixture f;
    f.qrels.relevant = {{"q1", {"a"}}, {"q2", {"b"}}, {"q3", {"c", "d"}}, {"q4", {"e"}}, {"q5", {"f"}}};
    auto& r = f.run.queries;
    r["q1"] = {{"a", 0.9, 1, true}, {"z", 0.8, 2, true}};
    r["q2"] = {{"x", 0.9, 1, true}, {"b", 0.8, 2, true}};
    r["q3"] = {{"c", 0.9, 1, true}, {"y", 0.6, 2, true}, {"d", 0.4, 3, false}};
    for (std::size_t i = 1; i <= 10; ++i) r["q4"].push_back({"n" + std::to_string(i), 2.0 - 0.1 * static_cast<double>(i), i, true});
    r["q4"].push_back({"e", 0.5, 11, true});
    return f;
}

} // namespace sven::testing
