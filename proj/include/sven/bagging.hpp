// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sven/corpus.hpp"
#include "sven/rng.hpp"

namespace sven {

/// s overlapping subsets of the passage rows 0..n-1.
///
/// Construction: shuffle 0..n-1 with Rng(seed); cut the permutation into s
/// contiguous base shards of ceil(n/s) rows (the last one takes the
/// remainder); each subset is its base shard plus floor(overlap * |shard|)
/// rows sampled without replacement from the other n - |shard| rows, drawn
/// from the same generator in shard order. Subsets are stored sorted.
struct BaggingPlan {
    std::size_t n_passages = 0;
    std::size_t s = 0;
    double overlap = 0.0;
    std::uint64_t seed = 0;
    std::size_t base_shard_size = 0;
    std::vector<std::vector<std::size_t>> subsets;

    bool operator==(const BaggingPlan&) const = default;
};

inline std::size_t ceil_div(std::size_t a, std::size_t b) noexcept { return (a + b - 1) / b; }

/// floor(overlap * shard) with the product evaluated in double; the +1e-9
/// guards against 0.6*5 landing at 2.9999999999999996.
inline std::size_t overlap_extra(double overlap, std::size_t shard) noexcept {
    return static_cast<std::size_t>(std::floor(overlap * static_cast<double>(shard) + 1e-9));
}

inline BaggingPlan make_plan(std::size_t n_passages, std::size_t s, double overlap, std::uint64_t seed) {
    if (s < 1 || s > n_passages)
        fail(ErrorKind::InvalidParams, "bagging: need 1 <= s <= n_passages (s=" + std::to_string(s) +
                                           ", n=" + std::to_string(n_passages) + ")");
    if (!(overlap >= 0.0 && overlap < 1.0)) fail(ErrorKind::InvalidParams, "bagging: overlap must be in [0, 1)");
    const std::size_t base = ceil_div(n_passages, s);
    if (base * (s - 1) >= n_passages)
        fail(ErrorKind::InvalidParams, "bagging: s=" + std::to_string(s) + " with shard size " + std::to_string(base) +
                                           " leaves the last shard empty for n=" + std::to_string(n_passages));

    BaggingPlan plan;
    plan.n_passages = n_passages;
    plan.s = s;
    plan.overlap = overlap;
    plan.seed = seed;
    plan.base_shard_size = base;

    Rng rng(seed);
    std::vector<std::size_t> perm(n_passages);
    for (std::size_t i = 0; i < n_passages; ++i) perm[i] = i;
    rng.shuffle(std::span<std::size_t>(perm));

    plan.subsets.resize(s);
    std::vector<std::size_t> complement;
    complement.reserve(n_passages);
    for (std::size_t j = 0; j < s; ++j) {
        const std::size_t begin = j * base;
        const std::size_t end = std::min(begin + base, n_passages);
        const std::size_t shard = end - begin;

        complement.clear();
        complement.insert(complement.end(), perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(begin));
        complement.insert(complement.end(), perm.begin() + static_cast<std::ptrdiff_t>(end), perm.end());
        const std::size_t extra = std::min(overlap_extra(overlap, shard), complement.size());
        rng.sample_front(std::span<std::size_t>(complement), extra);

        auto& subset = plan.subsets[j];
        subset.reserve(shard + extra);
        subset.insert(subset.end(), perm.begin() + static_cast<std::ptrdiff_t>(begin),
                      perm.begin() + static_cast<std::ptrdiff_t>(end));
        subset.insert(subset.end(), complement.begin(), complement.begin() + static_cast<std::ptrdiff_t>(extra));
        std::sort(subset.begin(), subset.end());
    }
    return plan;
}

/// Expected size of subset j under the construction rule.
inline std::size_t expected_subset_size(std::size_t n_passages, std::size_t s, double overlap, std::size_t j) {
    const std::size_t base = ceil_div(n_passages, s);
    const std::size_t shard = std::min(base, n_passages - std::min(n_passages, j * base));
    return shard + std::min(overlap_extra(overlap, shard), n_passages - shard);
}

/// Subsets (ascending) that contain at least one relevant passage of each
/// query. Queries absent from the map had no judged passage.
inline std::map<std::string, std::vector<std::size_t>> assign_queries(const BaggingPlan& plan,
                                                                      const RelevanceJudgments& qrels,
                                                                      const CorpusIndex& index) {
    if (index.size() != plan.n_passages)
        fail(ErrorKind::DimMismatch, "bagging plan covers " + std::to_string(plan.n_passages) + " passages, index has " +
                                         std::to_string(index.size()));
    std::vector<std::vector<std::size_t>> member_of(plan.n_passages);
    for (std::size_t j = 0; j < plan.subsets.size(); ++j) {
        for (auto r : plan.subsets[j]) member_of[r].push_back(j);
    }
    std::map<std::string, std::vector<std::size_t>> out;
    for (const auto& [qid, pids] : qrels.relevant) {
        std::vector<std::size_t> subsets;
        for (const auto& pid : pids) {
            const auto& m = member_of[index.row(pid)];
            subsets.insert(subsets.end(), m.begin(), m.end());
        }
        std::sort(subsets.begin(), subsets.end());
        subsets.erase(std::unique(subsets.begin(), subsets.end()), subsets.end());
        if (!subsets.empty()) out.emplace(qid, std::move(subsets));
    }
    return out;
}

} // namespace sven
