// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sven/bagging.hpp"
#include "sven/binary_io.hpp"
#include "sven/config.hpp"
#include "sven/corpus.hpp"
#include "sven/knn.hpp"
#include "sven/metrics.hpp"
#include "sven/parallel.hpp"
#include "sven/rng.hpp"
#include "sven/run.hpp"
#include "sven/scaler.hpp"
#include "sven/svr.hpp"

namespace sven {

/// Relevant passage rows per query row of a QuerySet (empty when unjudged).
using RelevantRows = std::vector<std::vector<std::size_t>>;

inline RelevantRows resolve_judgments(const QuerySet& queries, const RelevanceJudgments& qrels,
                                      const CorpusIndex& index) {
    RelevantRows out(queries.size());
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        auto it = qrels.relevant.find(queries.query_ids[qi]);
        if (it == qrels.relevant.end()) continue;
        for (const auto& pid : it->second) out[qi].push_back(index.row(pid));
        std::sort(out[qi].begin(), out[qi].end());
    }
    return out;
}

/// One training row: a (query, candidate passage) pair.
struct RowOrigin {
    std::size_t query = 0;   // row in the QuerySet
    std::size_t passage = 0; // row in the collection matrix

    bool operator==(const RowOrigin&) const = default;
};

/// Concatenated [query | passage] feature rows with {0,1} targets.
struct FeatureSet {
    Matrix features;
    std::vector<float> labels;
    std::vector<RowOrigin> origin;
};

struct BuildReport {
    std::size_t queries_used = 0;
    std::size_t queries_skipped = 0; // no relevant passage among the k neighbors
    std::size_t positives_injected = 0;
};

inline void concat_into(std::span<const float> query, std::span<const float> passage, std::span<float> out) {
    std::copy(query.begin(), query.end(), out.begin());
    std::copy(passage.begin(), passage.end(), out.begin() + static_cast<std::ptrdiff_t>(query.size()));
}

/// For each assigned query: its k nearest passages inside `subset`, one row
/// per neighbor, label 1 iff the passage is judged relevant. Queries with no
/// relevant neighbor are dropped (skip) or get their nearest in-subset
/// relevant passage in place of the k-th neighbor (inject).
inline FeatureSet build_training_set(std::span<const std::size_t> subset, std::span<const std::size_t> assigned,
                                     const EmbeddingMatrix& m, const QuerySet& queries, const RelevantRows& relevant,
                                     const TrainConfig& cfg, BuildReport* report = nullptr) {
    validate(queries, m.dim);
    const std::size_t d = m.dim;
    std::vector<float> feats;
    FeatureSet fs;
    BuildReport rep;
    for (auto qi : assigned) {
        const auto q = queries.embeddings.row(qi);
        const auto& rel = relevant.at(qi);
        auto neighbors = top_k(m, subset, q, cfg.k, cfg.metric);
        auto is_relevant = [&](std::size_t row) { return std::binary_search(rel.begin(), rel.end(), row); };

        const bool hit = std::any_of(neighbors.begin(), neighbors.end(), [&](const Neighbor& n) { return is_relevant(n.row_index); });
        if (!hit) {
            if (cfg.missing_positive == MissingPositive::skip) {
                ++rep.queries_skipped;
                continue;
            }
            std::vector<std::size_t> candidates;
            for (auto r : rel) {
                if (std::binary_search(subset.begin(), subset.end(), r)) candidates.push_back(r);
            }
            if (candidates.empty()) {
                ++rep.queries_skipped;
                continue;
            }
            neighbors.back() = top_k(m, candidates, q, 1, cfg.metric).front();
            ++rep.positives_injected;
        }
        ++rep.queries_used;
        for (const auto& nb : neighbors) {
            const auto p = m.row(nb.row_index);
            feats.insert(feats.end(), q.begin(), q.end());
            feats.insert(feats.end(), p.begin(), p.end());
            fs.labels.push_back(is_relevant(nb.row_index) ? 1.0f : 0.0f);
            fs.origin.push_back({qi, nb.row_index});
        }
    }
    fs.features = Matrix(fs.labels.size(), 2 * d, std::move(feats));
    if (report) *report = rep;
    return fs;
}

/// Seeded train/test row split for member `member`; both lists ascending.
/// Test size is ceil(split * R), kept below R so training is never empty.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(std::size_t rows, double split,
                                                                                std::uint64_t seed, std::size_t member) {
    std::vector<std::size_t> perm(rows);
    for (std::size_t i = 0; i < rows; ++i) perm[i] = i;
    Rng rng(mix_seed(seed, member));
    rng.shuffle(std::span<std::size_t>(perm));
    std::size_t n_test = 0;
    if (rows >= 2) {
        n_test = static_cast<std::size_t>(std::ceil(split * static_cast<double>(rows) - 1e-9));
        n_test = std::min(n_test, rows - 1);
    }
    std::vector<std::size_t> test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    return {std::move(train), std::move(test)};
}

inline Matrix gather_rows(const Matrix& src, std::span<const std::size_t> ids) {
    Matrix out(ids.size(), src.dim);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto r = src.row(ids[i]);
        std::copy(r.begin(), r.end(), out.row(i).begin());
    }
    return out;
}

struct EnsembleMember {
    FeatureScaler scaler;
    SvrModel svr;

    bool operator==(const EnsembleMember&) const = default;
};

struct EnsembleModel {
    static constexpr std::uint32_t kFormatVersion = 1;

    std::uint32_t format_version = kFormatVersion;
    std::size_t dim = 0; // embedding width; features are 2 * dim
    TrainConfig config;
    BaggingPlan plan;
    std::vector<EnsembleMember> members;

    bool operator==(const EnsembleModel&) const = default;
};

struct MemberReport {
    std::size_t subset_size = 0;
    std::size_t assigned_queries = 0;
    BuildReport build;
    std::size_t rows = 0;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    SvrTrainSummary svr;
    double kkt_violation = 0.0;
    ClassificationReport test_report;
};

struct TrainReport {
    std::vector<MemberReport> members;
    ClassificationReport test_report; // pooled over all members' test rows
    std::size_t total_rows = 0;
    std::size_t queries_skipped = 0;
    std::size_t positives_injected = 0;
    bool all_converged = true;
};

struct TrainedEnsemble {
    EnsembleModel model;
    TrainReport report;
};

/// Scaler and SVR for one member's feature rows, following cfg's split and
/// scaler_fit rules. Returns the test-split scores alongside.
struct MemberFit {
    EnsembleMember member;
    MemberReport report;
    std::vector<double> test_scores;
    std::vector<float> test_labels;
};

inline MemberFit fit_member(const FeatureSet& fs, const TrainConfig& cfg, std::size_t member_index) {
    MemberFit out;
    auto& rep = out.report;
    rep.rows = fs.labels.size();
    const std::size_t width = fs.features.dim;
    if (rep.rows == 0) {
        // Nothing to learn from: an all-zero member that never fires.
        out.member.scaler.means.assign(width, 0.0);
        out.member.scaler.stds.assign(width, 1.0);
        out.member.svr.params = cfg.svr;
        out.member.svr.support_vectors = Matrix(0, width);
        out.member.svr.gamma = cfg.svr.gamma.value_or(1.0 / static_cast<double>(std::max<std::size_t>(width, 1)));
        out.member.svr.params.gamma = out.member.svr.gamma;
        rep.svr.converged = true;
        return out;
    }
    auto [train, test] = split_rows(rep.rows, cfg.split, cfg.seed, member_index);
    rep.train_rows = train.size();
    rep.test_rows = test.size();

    out.member.scaler = cfg.scaler_fit == ScalerFit::all ? fit_scaler(fs.features) : fit_scaler(fs.features, train);
    const Matrix train_x = transform_rows(out.member.scaler, gather_rows(fs.features, train));
    std::vector<float> train_y(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) train_y[i] = fs.labels[train[i]];

    auto fit = train_svr(train_x, train_y, cfg.svr);
    rep.svr = fit.summary;
    rep.kkt_violation = kkt_violation(fit.model, train_x, train_y);
    out.member.svr = std::move(fit.model);

    std::vector<float> scaled(width);
    for (auto r : test) {
        transform_into(out.member.scaler, fs.features.row(r), scaled);
        out.test_scores.push_back(predict(out.member.svr, scaled));
        out.test_labels.push_back(fs.labels[r]);
    }
    rep.test_report = classification_report(out.test_scores, out.test_labels, cfg.threshold);
    return out;
}

/// The full training pipeline: plan, per-subset training sets, per-subset
/// scaler + SVR. Members train independently on up to `threads` workers;
/// the result does not depend on the thread count.
inline TrainedEnsemble train_ensemble(const EmbeddingMatrix& m, const CorpusIndex& index, const QuerySet& queries,
                                      const RelevanceJudgments& qrels, const TrainConfig& cfg, std::size_t threads = 1) {
    validate(cfg);
    validate(m);
    validate(queries, m.dim);
    if (index.size() != m.n_rows) fail(ErrorKind::DimMismatch, "index size != collection rows");
    validate(qrels, index);

    TrainedEnsemble out;
    auto& model = out.model;
    model.dim = m.dim;
    model.config = cfg;
    model.plan = make_plan(m.n_rows, cfg.s, cfg.overlap, cfg.seed);

    const auto relevant = resolve_judgments(queries, qrels, index);
    const auto assignment = assign_queries(model.plan, qrels, index);
    std::vector<std::vector<std::size_t>> assigned(cfg.s);
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        auto it = assignment.find(queries.query_ids[qi]);
        if (it == assignment.end()) continue;
        for (auto j : it->second) assigned[j].push_back(qi);
    }

    std::vector<MemberFit> fits(cfg.s);
    parallel_for(cfg.s, threads, [&](std::size_t j) {
        BuildReport build;
        const auto fs = build_training_set(model.plan.subsets[j], assigned[j], m, queries, relevant, cfg, &build);
        fits[j] = fit_member(fs, cfg, j);
        fits[j].report.subset_size = model.plan.subsets[j].size();
        fits[j].report.assigned_queries = assigned[j].size();
        fits[j].report.build = build;
    });

    std::vector<double> pooled_scores;
    std::vector<float> pooled_labels;
    auto& report = out.report;
    for (auto& f : fits) {
        model.members.push_back(std::move(f.member));
        pooled_scores.insert(pooled_scores.end(), f.test_scores.begin(), f.test_scores.end());
        pooled_labels.insert(pooled_labels.end(), f.test_labels.begin(), f.test_labels.end());
        report.total_rows += f.report.rows;
        report.queries_skipped += f.report.build.queries_skipped;
        report.positives_injected += f.report.build.positives_injected;
        report.all_converged = report.all_converged && f.report.svr.converged;
        report.members.push_back(std::move(f.report));
    }
    report.test_report = classification_report(pooled_scores, pooled_labels, cfg.threshold);
    return out;
}

struct RetrieveOptions {
    std::size_t k = 0;                  // 0 -> model's inference k
    std::optional<double> threshold;    // unset -> model's threshold
};

/// Scores one query against every member and merges: each member scores its
/// own k nearest in-subset passages; a passage's score is the max over the
/// members that scored it; it is positive iff that max reaches the
/// threshold, i.e. iff at least one member fired. Entries come back ranked.
inline std::vector<RunEntry> retrieve(const EnsembleModel& e, const EmbeddingMatrix& m, const CorpusIndex& index,
                                      std::span<const float> q, const RetrieveOptions& opts = {}) {
    if (q.size() != e.dim || m.dim != e.dim)
        fail(ErrorKind::DimMismatch, "query/collection dim does not match the model (" + std::to_string(e.dim) + ")");
    if (m.n_rows != e.plan.n_passages || index.size() != m.n_rows)
        fail(ErrorKind::DimMismatch, "collection does not match the model's bagging plan");
    const std::size_t k = opts.k ? opts.k : e.config.inference_k();
    const double threshold = opts.threshold.value_or(e.config.threshold);

    std::unordered_map<std::size_t, double> best;
    std::vector<float> raw(2 * e.dim), scaled(2 * e.dim);
    for (std::size_t j = 0; j < e.members.size(); ++j) {
        const auto& member = e.members[j];
        for (const auto& nb : top_k(m, e.plan.subsets[j], q, k, e.config.metric)) {
            concat_into(q, m.row(nb.row_index), raw);
            transform_into(member.scaler, raw, scaled);
            const double score = predict(member.svr, scaled);
            auto [it, inserted] = best.try_emplace(nb.row_index, score);
            if (!inserted) it->second = std::max(it->second, score);
        }
    }
    std::vector<RunEntry> entries;
    entries.reserve(best.size());
    for (const auto& [row, score] : best) entries.push_back({index.id(row), score, 0, score >= threshold});
    rerank(entries);
    return entries;
}

inline std::vector<std::uint8_t> encode_model(const EnsembleModel& e);

/// First 12 hex digits of the FNV-1a hash of the serialized model.
inline std::string model_tag_from_bytes(std::span<const std::uint8_t> bytes) {
    return io::hex64(io::fnv1a64(bytes)).substr(0, 12);
}

/// Runs every query of `queries` through `retrieve`, in parallel over queries.
inline RunFile retrieve_all(const EnsembleModel& e, const EmbeddingMatrix& m, const CorpusIndex& index,
                            const QuerySet& queries, const RetrieveOptions& opts = {}, std::size_t threads = 1,
                            std::string tag = {}) {
    validate(queries, m.dim);
    std::vector<std::vector<RunEntry>> slots(queries.size());
    parallel_for(queries.size(), threads,
                 [&](std::size_t qi) { slots[qi] = retrieve(e, m, index, queries.embeddings.row(qi), opts); });
    RunFile run;
    run.tag = tag.empty() ? model_tag_from_bytes(encode_model(e)) : std::move(tag);
    for (std::size_t qi = 0; qi < queries.size(); ++qi) run.queries[queries.query_ids[qi]] = std::move(slots[qi]);
    return run;
}

// Model file, little-endian:
//   "SVEN" u32 version | u64 checksum of everything after it
//   string config (key = value lines) | u64 dim
//   plan: u64 n, u64 s, f64 overlap, u64 seed, u64 base_shard_size, s x (u64 len, len x u32)
//   u64 members, each: scaler (u64 F, F f64 means, F f64 stds, u64 fitted_on)
//                      svr (u32 kernel, f64 C, f64 eps, f64 gamma, f64 tol, u64 max_passes,
//                           u64 S, u64 F, S*F f32, S f64 beta, f64 bias, S u32 sv_indices)
inline constexpr char kModelMagic[4] = {'S', 'V', 'E', 'N'};

inline std::vector<std::uint8_t> encode_model(const EnsembleModel& e) {
    io::ByteWriter body;
    body.put_string(format_pairs(to_pairs(e.config)));
    body.put<std::uint64_t>(e.dim);
    const auto& p = e.plan;
    body.put<std::uint64_t>(p.n_passages);
    body.put<std::uint64_t>(p.s);
    body.put<double>(p.overlap);
    body.put<std::uint64_t>(p.seed);
    body.put<std::uint64_t>(p.base_shard_size);
    for (const auto& subset : p.subsets) {
        body.put<std::uint64_t>(subset.size());
        for (auto r : subset) body.put<std::uint32_t>(static_cast<std::uint32_t>(r));
    }
    body.put<std::uint64_t>(e.members.size());
    for (const auto& mem : e.members) {
        body.put<std::uint64_t>(mem.scaler.means.size());
        body.put_array<double>(mem.scaler.means);
        body.put_array<double>(mem.scaler.stds);
        body.put<std::uint64_t>(mem.scaler.fitted_on);
        const auto& svr = mem.svr;
        body.put<std::uint32_t>(static_cast<std::uint32_t>(svr.params.kernel));
        body.put<double>(svr.params.C);
        body.put<double>(svr.params.epsilon);
        body.put<double>(svr.gamma);
        body.put<double>(svr.params.tol);
        body.put<std::uint64_t>(svr.params.max_passes);
        body.put<std::uint64_t>(svr.n_support());
        body.put<std::uint64_t>(svr.support_vectors.dim);
        body.put_array<float>(svr.support_vectors.data);
        body.put_array<double>(svr.beta);
        body.put<double>(svr.bias);
        body.put_array<std::uint32_t>(svr.sv_indices);
    }
    io::ByteWriter out;
    out.put_raw({kModelMagic, 4});
    out.put<std::uint32_t>(e.format_version);
    out.put<std::uint64_t>(io::fnv1a64(body.bytes()));
    auto& bytes = out.bytes();
    bytes.insert(bytes.end(), body.bytes().begin(), body.bytes().end());
    return std::move(bytes);
}

inline EnsembleModel decode_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kModelMagic, 4) != 0) fail(ErrorKind::BadMagic, "not a model file");
    io::ByteReader head(bytes);
    head.get_raw(4);
    EnsembleModel e;
    e.format_version = head.get<std::uint32_t>();
    if (e.format_version != EnsembleModel::kFormatVersion)
        fail(ErrorKind::VersionMismatch, "model format version " + std::to_string(e.format_version) + " is not supported");
    const auto checksum = head.get<std::uint64_t>();
    const auto body_bytes = bytes.subspan(head.position());
    if (io::fnv1a64(body_bytes) != checksum) fail(ErrorKind::Truncated, "model file is truncated or corrupt");

    io::ByteReader r(body_bytes);
    e.config = parse_train_config(r.get_string());
    e.dim = r.get<std::uint64_t>();
    auto& p = e.plan;
    p.n_passages = r.get<std::uint64_t>();
    p.s = r.get<std::uint64_t>();
    p.overlap = r.get<double>();
    p.seed = r.get<std::uint64_t>();
    p.base_shard_size = r.get<std::uint64_t>();
    if (p.s > r.remaining()) fail(ErrorKind::Truncated, "implausible subset count");
    p.subsets.resize(p.s);
    for (auto& subset : p.subsets) {
        const auto rows = r.get_array<std::uint32_t>(r.get<std::uint64_t>());
        subset.assign(rows.begin(), rows.end());
    }
    const auto n_members = r.get<std::uint64_t>();
    if (n_members != p.s) fail(ErrorKind::DimMismatch, "member count != subset count");
    e.members.resize(n_members);
    for (auto& mem : e.members) {
        const auto width = r.get<std::uint64_t>();
        mem.scaler.means = r.get_array<double>(width);
        mem.scaler.stds = r.get_array<double>(width);
        mem.scaler.fitted_on = r.get<std::uint64_t>();
        auto& svr = mem.svr;
        const auto kernel = r.get<std::uint32_t>();
        if (kernel > 1) fail(ErrorKind::VersionMismatch, "unknown kernel id " + std::to_string(kernel));
        svr.params.kernel = static_cast<KernelType>(kernel);
        svr.params.C = r.get<double>();
        svr.params.epsilon = r.get<double>();
        svr.gamma = r.get<double>();
        svr.params.gamma = svr.gamma;
        svr.params.tol = r.get<double>();
        svr.params.max_passes = r.get<std::uint64_t>();
        const auto n_sv = r.get<std::uint64_t>();
        const auto sv_width = r.get<std::uint64_t>();
        if (sv_width != 0 && n_sv > r.remaining() / sv_width) fail(ErrorKind::Truncated, "support vectors run past end");
        svr.support_vectors = Matrix(n_sv, sv_width, r.get_array<float>(n_sv * sv_width));
        svr.beta = r.get_array<double>(n_sv);
        svr.bias = r.get<double>();
        svr.sv_indices = r.get_array<std::uint32_t>(n_sv);
    }
    if (r.remaining() != 0) fail(ErrorKind::Truncated, "trailing bytes after model");
    return e;
}

inline void save_model(const EnsembleModel& e, const std::filesystem::path& path) { io::write_file(path, encode_model(e)); }

inline EnsembleModel load_model(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) fail(ErrorKind::NotFound, "model: not found");
    return decode_model(io::read_file(path));
}

} // namespace sven
