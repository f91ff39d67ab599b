// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sven/binary_io.hpp"
#include "sven/text.hpp"

namespace sven {

struct RunEntry {
    std::string id; // passage id, or document id after to_document_run
    double score = 0.0;
    std::size_t rank = 0;
    bool positive = false;

    bool operator==(const RunEntry&) const = default;
};

/// Ranked retrieval output, keyed by query id. Within a query, entries are
/// ordered by score descending with ties broken by id ascending, and ranks
/// run 1..m.
struct RunFile {
    std::map<std::string, std::vector<RunEntry>> queries;
    std::string tag = "sven";

    bool operator==(const RunFile&) const = default;
};

/// Sorts by (score desc, id asc) and renumbers ranks from 1.
inline void rerank(std::vector<RunEntry>& entries) {
    std::sort(entries.begin(), entries.end(), [](const RunEntry& a, const RunEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    for (std::size_t i = 0; i < entries.size(); ++i) entries[i].rank = i + 1;
}

/// TREC run text: `query_id Q0 id rank score tag`, one entry per line, LF.
/// The positive flag is not part of the format.
inline std::string format_trec(const RunFile& run) {
    std::string out;
    for (const auto& [qid, entries] : run.queries) {
        for (const auto& e : entries) {
            out += qid;
            out += " Q0 ";
            out += e.id;
            out += ' ';
            out += std::to_string(e.rank);
            out += ' ';
            out += text::format_double(e.score);
            out += ' ';
            out += run.tag;
            out += '\n';
        }
    }
    return out;
}

inline void save_run(const RunFile& run, const std::filesystem::path& path) {
    io::write_text(path, format_trec(run));
}

/// Parses TREC run text. Entries are re-sorted and re-ranked; an entry is
/// positive when its score is at least `threshold`.
inline RunFile parse_trec(std::string_view content, double threshold) {
    RunFile run;
    std::size_t line_no = 0;
    for (auto line : text::lines(content)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto fields = text::split_ws(line);
        if (fields.size() != 6)
            fail(ErrorKind::MalformedLine, "run line " + std::to_string(line_no) + ": expected 6 fields");
        RunEntry e;
        e.id = std::string(fields[2]);
        try {
            e.score = text::parse_double(fields[4], "score");
        } catch (const Error&) {
            fail(ErrorKind::MalformedLine, "run line " + std::to_string(line_no) + ": bad score");
        }
        e.positive = e.score >= threshold;
        run.tag = std::string(fields[5]);
        run.queries[std::string(fields[0])].push_back(std::move(e));
    }
    for (auto& [qid, entries] : run.queries) rerank(entries);
    return run;
}

inline RunFile load_run(const std::filesystem::path& path, double threshold) {
    const auto bytes = io::read_file(path);
    return parse_trec({reinterpret_cast<const char*>(bytes.data()), bytes.size()}, threshold);
}

} // namespace sven
