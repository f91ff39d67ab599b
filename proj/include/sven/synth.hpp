// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sven/corpus.hpp"
#include "sven/knn.hpp"
#include "sven/rng.hpp"

namespace sven {

/// Planted-needle dataset: passages from a Gaussian mixture around unit-norm
/// centers, each query a noisy copy of one passage that is its only
/// relevant passage.
struct SynthConfig {
    std::size_t n_passages = 5000;
    std::size_t n_queries = 500;
    std::size_t dim = 32;
    std::size_t n_clusters = 10;
    double cluster_sigma = 0.1;
    double noise_sigma = 0.005;
    std::size_t passages_per_doc = 1;
    std::uint64_t seed = 7;
};

inline void validate(const SynthConfig& c) {
    if (c.n_passages == 0) fail(ErrorKind::InvalidParams, "synth: n_passages must be positive");
    if (c.n_queries > c.n_passages) fail(ErrorKind::InvalidParams, "synth: n_queries must be <= n_passages");
    if (c.dim < 2) fail(ErrorKind::InvalidParams, "synth: dim must be >= 2");
    if (c.n_clusters == 0) fail(ErrorKind::InvalidParams, "synth: n_clusters must be positive");
    if (!(c.cluster_sigma >= 0.0) || !(c.noise_sigma >= 0.0)) fail(ErrorKind::InvalidParams, "synth: sigmas must be >= 0");
    if (c.passages_per_doc == 0) fail(ErrorKind::InvalidParams, "synth: passages_per_doc must be positive");
}

struct SynthData {
    EmbeddingMatrix passages;
    CorpusIndex index;
    std::map<std::string, std::string> doc_map;
    QuerySet queries;
    RelevanceJudgments qrels;
};

inline std::string padded_id(char prefix, std::size_t i, std::size_t n) {
    const std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
    std::string digits = std::to_string(i);
    return prefix + std::string(width - digits.size(), '0') + digits;
}

inline SynthData generate(const SynthConfig& cfg) {
    validate(cfg);
    Rng rng(cfg.seed);
    const std::size_t d = cfg.dim;

    std::vector<double> centers(cfg.n_clusters * d);
    for (std::size_t c = 0; c < cfg.n_clusters; ++c) {
        double norm = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            centers[c * d + j] = rng.normal();
            norm += centers[c * d + j] * centers[c * d + j];
        }
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < d; ++j) centers[c * d + j] /= norm;
    }

    SynthData out;
    out.passages = EmbeddingMatrix(cfg.n_passages, d);
    std::vector<std::string> pids(cfg.n_passages);
    for (std::size_t i = 0; i < cfg.n_passages; ++i) {
        const auto c = static_cast<std::size_t>(rng.below(cfg.n_clusters));
        auto row = out.passages.row(i);
        for (std::size_t j = 0; j < d; ++j) row[j] = static_cast<float>(centers[c * d + j] + cfg.cluster_sigma * rng.normal());
        pids[i] = padded_id('p', i, cfg.n_passages);
        if (cfg.passages_per_doc > 1) {
            out.doc_map[pids[i]] = padded_id('d', i / cfg.passages_per_doc, (cfg.n_passages + cfg.passages_per_doc - 1) / cfg.passages_per_doc);
        }
    }
    out.index = CorpusIndex(pids, out.doc_map);

    std::vector<std::size_t> order(cfg.n_passages);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.sample_front(std::span<std::size_t>(order), cfg.n_queries);

    out.queries.embeddings = EmbeddingMatrix(cfg.n_queries, d);
    for (std::size_t qi = 0; qi < cfg.n_queries; ++qi) {
        const auto src = out.passages.row(order[qi]);
        auto row = out.queries.embeddings.row(qi);
        for (std::size_t j = 0; j < d; ++j) row[j] = static_cast<float>(src[j] + cfg.noise_sigma * rng.normal());
        const auto qid = padded_id('q', qi, cfg.n_queries);
        out.queries.query_ids.push_back(qid);
        out.qrels.relevant[qid].insert(pids[order[qi]]);
    }
    return out;
}

/// Empirical placement of the needles: rank of each query's relevant
/// passage in a full exact scan of the collection.
struct SynthReport {
    DistanceReport distances;
    std::map<std::size_t, double> within_top; // k -> fraction of queries with needle rank <= k
};

inline SynthReport self_check(const SynthData& data, std::vector<std::size_t> ks = {1, 10, 20, 50},
                              Metric metric = Metric::euclidean) {
    SynthReport rep;
    rep.distances = distance_stats(data.queries, data.qrels, data.passages, data.index, metric);
    const auto n = static_cast<double>(std::max<std::size_t>(1, rep.distances.per_query.size()));
    for (auto k : ks) {
        std::size_t hits = 0;
        for (const auto& q : rep.distances.per_query) hits += q.rank <= k;
        rep.within_top[k] = static_cast<double>(hits) / n;
    }
    return rep;
}

/// Writes corpus.emb/.ids, queries.emb/.ids, qrels.tsv and docs.tsv into `dir`.
inline void write_dataset(const SynthData& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_embeddings(data.passages, dir / "corpus.emb");
    save_ids(data.index.passage_ids(), dir / "corpus.ids");
    save_embeddings(data.queries.embeddings, dir / "queries.emb");
    save_ids(data.queries.query_ids, dir / "queries.ids");
    save_qrels(data.qrels, dir / "qrels.tsv");
    std::string docs;
    for (const auto& pid : data.index.passage_ids()) docs += pid + '\t' + data.index.document_of(pid) + '\n';
    io::write_text(dir / "docs.tsv", docs);
}

} // namespace sven
