// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "sven/binary_io.hpp"
#include "sven/matrix.hpp"
#include "sven/run.hpp"
#include "sven/text.hpp"

namespace sven {

// EMB1 layout: "EMB1", u32 n_rows, u32 dim, then n_rows*dim float32, row-major.
inline constexpr char kEmbMagic[4] = {'E', 'M', 'B', '1'};
inline constexpr std::size_t kEmbHeaderBytes = 12;

inline std::vector<std::uint8_t> encode_embeddings(const EmbeddingMatrix& m) {
    validate(m);
    if (m.n_rows > UINT32_MAX || m.dim > UINT32_MAX)
        fail(ErrorKind::InvalidParams, "matrix shape exceeds the u32 header fields");
    io::ByteWriter w;
    w.put_raw({kEmbMagic, 4});
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.n_rows));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.dim));
    w.put_array<float>(m.data);
    return std::move(w.bytes());
}

inline EmbeddingMatrix decode_embeddings(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kEmbHeaderBytes || std::memcmp(bytes.data(), kEmbMagic, 4) != 0)
        fail(ErrorKind::BadMagic, "not an EMB1 file");
    io::ByteReader r(bytes);
    r.get_raw(4);
    const auto n = r.get<std::uint32_t>();
    const auto d = r.get<std::uint32_t>();
    const std::uint64_t expected = std::uint64_t{n} * d * sizeof(float);
    if (r.remaining() != expected)
        fail(ErrorKind::DimMismatch, "payload is " + std::to_string(r.remaining()) + " bytes, header implies " +
                                         std::to_string(expected));
    EmbeddingMatrix m(n, d, r.get_array<float>(std::uint64_t{n} * d));
    validate(m);
    return m;
}

inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
    return decode_embeddings(io::read_file(path));
}

inline void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
    io::write_file(path, encode_embeddings(m));
}

/// `corpus.emb` -> `corpus.ids`
inline std::filesystem::path ids_path(std::filesystem::path emb_path) {
    return emb_path.replace_extension(".ids");
}

inline std::vector<std::string> load_ids(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    std::vector<std::string> ids;
    for (auto line : text::lines({reinterpret_cast<const char*>(bytes.data()), bytes.size()}))
        ids.emplace_back(line);
    return ids;
}

inline void save_ids(const std::vector<std::string>& ids, const std::filesystem::path& path) {
    std::string out;
    for (const auto& id : ids) {
        out += id;
        out += '\n';
    }
    io::write_text(path, out);
}

/// Row order of the collection matrix plus the passage -> document mapping.
class CorpusIndex {
public:
    CorpusIndex() = default;

    /// Identity document map unless `passage_to_doc` is given; passages absent
    /// from a given map keep their own id as document id.
    explicit CorpusIndex(std::vector<std::string> passage_ids,
                         std::map<std::string, std::string> passage_to_doc = {})
        : passage_ids_(std::move(passage_ids)) {
        row_of_.reserve(passage_ids_.size());
        for (std::size_t i = 0; i < passage_ids_.size(); ++i) {
            if (passage_ids_[i].empty()) fail(ErrorKind::InvalidParams, "empty passage id at row " + std::to_string(i));
            if (!row_of_.emplace(passage_ids_[i], i).second)
                fail(ErrorKind::InvalidParams, "duplicate passage id '" + passage_ids_[i] + "'");
        }
        for (const auto& [pid, doc] : passage_to_doc) {
            if (!row_of_.contains(pid)) fail(ErrorKind::UnknownId, "document map names unknown passage '" + pid + "'");
        }
        doc_of_row_.reserve(passage_ids_.size());
        for (const auto& pid : passage_ids_) {
            auto it = passage_to_doc.find(pid);
            doc_of_row_.push_back(it == passage_to_doc.end() ? pid : it->second);
        }
    }

    std::size_t size() const noexcept { return passage_ids_.size(); }
    const std::vector<std::string>& passage_ids() const noexcept { return passage_ids_; }
    const std::string& id(std::size_t row) const { return passage_ids_.at(row); }

    std::optional<std::size_t> find(const std::string& pid) const {
        auto it = row_of_.find(pid);
        if (it == row_of_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t row(const std::string& pid) const {
        auto r = find(pid);
        if (!r) fail(ErrorKind::UnknownId, "unknown passage id '" + pid + "'");
        return *r;
    }

    const std::string& document_of(const std::string& pid) const { return doc_of_row_[row(pid)]; }

private:
    std::vector<std::string> passage_ids_;
    std::unordered_map<std::string, std::size_t> row_of_;
    std::vector<std::string> doc_of_row_;
};

/// Two-column TSV `passage_id<TAB>document_id`.
inline std::map<std::string, std::string> load_doc_map(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    std::map<std::string, std::string> out;
    std::size_t line_no = 0;
    for (auto line : text::lines({reinterpret_cast<const char*>(bytes.data()), bytes.size()})) {
        ++line_no;
        if (line.empty()) continue;
        const auto cols = text::split(line, '\t');
        if (cols.size() != 2 || cols[0].empty() || cols[1].empty())
            fail(ErrorKind::MalformedLine, path.string() + ":" + std::to_string(line_no) + ": expected 2 columns");
        out[std::string(cols[0])] = std::string(cols[1]);
    }
    return out;
}

struct QuerySet {
    std::vector<std::string> query_ids;
    EmbeddingMatrix embeddings;

    std::size_t size() const noexcept { return query_ids.size(); }
};

/// Throws unless the query set is internally consistent and matches `dim`.
inline void validate(const QuerySet& q, std::size_t dim) {
    if (q.query_ids.size() != q.embeddings.n_rows)
        fail(ErrorKind::DimMismatch, "query id count does not match query matrix rows");
    if (q.embeddings.n_rows > 0 && q.embeddings.dim != dim)
        fail(ErrorKind::DimMismatch, "query dim " + std::to_string(q.embeddings.dim) + " != collection dim " +
                                         std::to_string(dim));
}

struct RelevanceJudgments {
    std::map<std::string, std::set<std::string>> relevant;

    std::size_t total_relevant() const noexcept {
        std::size_t n = 0;
        for (const auto& [q, ps] : relevant) n += ps.size();
        return n;
    }

    bool operator==(const RelevanceJudgments&) const = default;
};

inline RelevanceJudgments parse_qrels(std::string_view content) {
    RelevanceJudgments out;
    std::size_t line_no = 0;
    for (auto line : text::lines(content)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cols = text::split(line, '\t');
        if (cols.size() != 2 || cols[0].empty() || cols[1].empty())
            fail(ErrorKind::MalformedLine, "qrels line " + std::to_string(line_no) + ": expected 2 tab-separated columns");
        out.relevant[std::string(cols[0])].insert(std::string(cols[1]));
    }
    if (out.relevant.empty()) fail(ErrorKind::EmptyJudgments, "qrels contain no judgments");
    return out;
}

inline RelevanceJudgments load_qrels(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    return parse_qrels({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

inline void save_qrels(const RelevanceJudgments& qrels, const std::filesystem::path& path) {
    std::string out;
    for (const auto& [q, ps] : qrels.relevant) {
        for (const auto& p : ps) {
            out += q;
            out += '\t';
            out += p;
            out += '\n';
        }
    }
    io::write_text(path, out);
}

/// Throws UnknownId for any judged passage absent from `index`.
inline void validate(const RelevanceJudgments& qrels, const CorpusIndex& index) {
    for (const auto& [q, ps] : qrels.relevant) {
        if (ps.empty()) fail(ErrorKind::EmptyJudgments, "query '" + q + "' has no relevant passage");
        for (const auto& p : ps) {
            if (!index.find(p)) fail(ErrorKind::UnknownId, "qrels for '" + q + "' name unknown passage '" + p + "'");
        }
    }
}

/// Maps passages to their documents, keeping the best-scoring passage of each
/// document per query, then re-ranks.
inline RunFile to_document_run(const RunFile& run, const CorpusIndex& index) {
    RunFile out;
    out.tag = run.tag;
    for (const auto& [qid, entries] : run.queries) {
        std::map<std::string, RunEntry> best;
        for (const auto& e : entries) {
            const auto& doc = index.document_of(e.id);
            auto [it, inserted] = best.try_emplace(doc, RunEntry{doc, e.score, 0, e.positive});
            if (!inserted) {
                it->second.score = std::max(it->second.score, e.score);
                it->second.positive = it->second.positive || e.positive;
            }
        }
        auto& dst = out.queries[qid];
        dst.reserve(best.size());
        for (auto& [doc, e] : best) dst.push_back(std::move(e));
        rerank(dst);
    }
    return out;
}

/// Judgments lifted to document granularity through the index's doc map.
inline RelevanceJudgments to_document_qrels(const RelevanceJudgments& qrels, const CorpusIndex& index) {
    RelevanceJudgments out;
    for (const auto& [q, ps] : qrels.relevant) {
        for (const auto& p : ps) out.relevant[q].insert(index.document_of(p));
    }
    return out;
}

} // namespace sven
