// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sven/corpus.hpp"
#include "sven/matrix.hpp"

namespace sven {

enum class Metric { euclidean, cosine };

inline constexpr std::string_view to_string(Metric m) noexcept {
    return m == Metric::euclidean ? "euclidean" : "cosine";
}

inline Metric parse_metric(std::string_view s) {
    if (s == "euclidean") return Metric::euclidean;
    if (s == "cosine") return Metric::cosine;
    fail(ErrorKind::InvalidConfig, "metric: expected euclidean|cosine, got '" + std::string(s) + "'");
}

struct Neighbor {
    std::size_t row_index = 0;
    float distance = 0.0f;

    bool operator==(const Neighbor&) const = default;
};

namespace detail {

inline double squared_l2(std::span<const float> a, std::span<const float> b) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        acc += d * d;
    }
    return acc;
}

inline double norm(std::span<const float> a) noexcept {
    double acc = 0.0;
    for (float v : a) acc += static_cast<double>(v) * v;
    return std::sqrt(acc);
}

// Sort key: squared distance for euclidean, 1 - cos for cosine. Zero vectors
// have cosine similarity 0 with everything.
inline double ranking_key(std::span<const float> row, std::span<const float> q, Metric metric, double q_norm) noexcept {
    if (metric == Metric::euclidean) return squared_l2(row, q);
    const double rn = norm(row);
    if (rn == 0.0 || q_norm == 0.0) return 1.0;
    double dot = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) dot += static_cast<double>(row[i]) * q[i];
    return 1.0 - dot / (rn * q_norm);
}

inline float key_to_distance(double key, Metric metric) noexcept {
    return static_cast<float>(metric == Metric::euclidean ? std::sqrt(key) : std::max(key, 0.0));
}

struct Scored {
    double key;
    std::size_t row;
    bool operator<(const Scored& o) const noexcept { return key != o.key ? key < o.key : row < o.row; }
};

} // namespace detail

/// Metric distance between two vectors, as reported in Neighbor::distance.
inline float distance(std::span<const float> a, std::span<const float> b, Metric metric) {
    if (a.size() != b.size()) fail(ErrorKind::DimMismatch, "vector lengths differ");
    return detail::key_to_distance(detail::ranking_key(a, b, metric, detail::norm(b)), metric);
}

/// Exact k nearest rows of `m` among `subset`, ascending by distance with ties
/// broken by ascending row index. Returns min(k, |subset|) neighbors.
inline std::vector<Neighbor> top_k(const EmbeddingMatrix& m, std::span<const std::size_t> subset,
                                   std::span<const float> q, std::size_t k, Metric metric = Metric::euclidean) {
    if (q.size() != m.dim)
        fail(ErrorKind::DimMismatch, "query dim " + std::to_string(q.size()) + " != matrix dim " + std::to_string(m.dim));
    if (subset.empty()) fail(ErrorKind::EmptySubset, "top_k over an empty subset");
    if (k == 0) fail(ErrorKind::InvalidParams, "top_k needs k >= 1");

    const double q_norm = metric == Metric::cosine ? detail::norm(q) : 0.0;
    std::vector<detail::Scored> scored;
    scored.reserve(subset.size());
    for (auto r : subset) {
        if (r >= m.n_rows) fail(ErrorKind::UnknownId, "subset row " + std::to_string(r) + " out of range");
        scored.push_back({detail::ranking_key(m.row(r), q, metric, q_norm), r});
    }
    const std::size_t take = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end());

    std::vector<Neighbor> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back({scored[i].row, detail::key_to_distance(scored[i].key, metric)});
    return out;
}

/// top_k over every row of `m`.
inline std::vector<Neighbor> top_k(const EmbeddingMatrix& m, std::span<const float> q, std::size_t k,
                                   Metric metric = Metric::euclidean) {
    std::vector<std::size_t> all(m.n_rows);
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return top_k(m, all, q, k, metric);
}

struct QueryDistance {
    std::string query_id;
    std::string nearest_relevant; // passage id
    double min_distance = 0.0;
    std::size_t rank = 0;         // 1-based rank of that passage among all passages
};

struct DistanceReport {
    Metric metric = Metric::euclidean;
    std::vector<QueryDistance> per_query;
    double mean_distance = 0.0;
    double median_distance = 0.0;
    double p90_distance = 0.0;
    double mean_rank = 0.0;
    double median_rank = 0.0;
    double p90_rank = 0.0;
};

/// Percentile with linear interpolation between order statistics.
inline double percentile(std::vector<double> values, double p) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

/// How close each query sits to its relevant passages. The rank uses the same
/// total order as top_k, so rank r means the passage would be the r-th
/// neighbor of a full scan.
inline DistanceReport distance_stats(const QuerySet& queries, const RelevanceJudgments& qrels,
                                     const EmbeddingMatrix& m, const CorpusIndex& index,
                                     Metric metric = Metric::euclidean) {
    validate(queries, m.dim);
    DistanceReport rep;
    rep.metric = metric;
    std::vector<double> dists, ranks;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        const auto& qid = queries.query_ids[qi];
        auto judged = qrels.relevant.find(qid);
        if (judged == qrels.relevant.end()) continue;
        const auto q = queries.embeddings.row(qi);
        const double q_norm = metric == Metric::cosine ? detail::norm(q) : 0.0;

        std::optional<detail::Scored> best;
        for (const auto& pid : judged->second) {
            const auto row = index.row(pid);
            detail::Scored s{detail::ranking_key(m.row(row), q, metric, q_norm), row};
            if (!best || s < *best) best = s;
        }
        if (!best) continue;
        std::size_t ahead = 0;
        for (std::size_t r = 0; r < m.n_rows; ++r) {
            if (detail::Scored{detail::ranking_key(m.row(r), q, metric, q_norm), r} < *best) ++ahead;
        }
        QueryDistance qd{qid, index.id(best->row), detail::key_to_distance(best->key, metric), ahead + 1};
        dists.push_back(qd.min_distance);
        ranks.push_back(static_cast<double>(qd.rank));
        rep.per_query.push_back(std::move(qd));
    }
    if (!dists.empty()) {
        double sd = 0.0, sr = 0.0;
        for (std::size_t i = 0; i < dists.size(); ++i) {
            sd += dists[i];
            sr += ranks[i];
        }
        rep.mean_distance = sd / static_cast<double>(dists.size());
        rep.mean_rank = sr / static_cast<double>(ranks.size());
        rep.median_distance = percentile(dists, 50);
        rep.p90_distance = percentile(dists, 90);
        rep.median_rank = percentile(ranks, 50);
        rep.p90_rank = percentile(ranks, 90);
    }
    return rep;
}

inline std::string format_distance_report(const DistanceReport& rep) {
    std::string out = "query_id\tnearest_relevant\tmin_distance\trank\n";
    for (const auto& q : rep.per_query) {
        out += q.query_id + '\t' + q.nearest_relevant + '\t' + text::format_double(q.min_distance) + '\t' +
               std::to_string(q.rank) + '\n';
    }
    auto line = [&](std::string_view name, double v) {
        out += "#";
        out += name;
        out += '\t';
        out += text::format_double(v);
        out += '\n';
    };
    out += "#metric\t" + std::string(to_string(rep.metric)) + '\n';
    out += "#n_queries\t" + std::to_string(rep.per_query.size()) + '\n';
    line("mean_distance", rep.mean_distance);
    line("median_distance", rep.median_distance);
    line("p90_distance", rep.p90_distance);
    line("mean_rank", rep.mean_rank);
    line("median_rank", rep.median_rank);
    line("p90_rank", rep.p90_rank);
    return out;
}

} // namespace sven
