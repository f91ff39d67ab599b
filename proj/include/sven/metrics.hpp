// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sven/corpus.hpp"
#include "sven/run.hpp"

namespace sven {

// Retrieval metrics. Averages run over the queries of the judgments; a judged
// query missing from the run contributes 0. Run queries without judgments
// are an error.

namespace detail {

inline void check_run_queries(const RunFile& run, const RelevanceJudgments& qrels) {
    for (const auto& [qid, entries] : run.queries) {
        if (!qrels.relevant.contains(qid)) fail(ErrorKind::UnknownQuery, "run query '" + qid + "' has no judgments");
    }
}

inline const std::vector<RunEntry>* entries_for(const RunFile& run, const std::string& qid) {
    auto it = run.queries.find(qid);
    return it == run.queries.end() ? nullptr : &it->second;
}

} // namespace detail

/// Micro-averaged recall over the positive set: relevant items flagged
/// positive (and ranked within `cutoff`, when given) over all relevant items.
inline double recall_eval(const RunFile& run, const RelevanceJudgments& qrels,
                          std::optional<std::size_t> cutoff = std::nullopt) {
    detail::check_run_queries(run, qrels);
    std::size_t hits = 0, total = 0;
    for (const auto& [qid, rel] : qrels.relevant) {
        total += rel.size();
        const auto* entries = detail::entries_for(run, qid);
        if (!entries) continue;
        for (const auto& e : *entries) {
            if (cutoff && e.rank > *cutoff) break;
            if (e.positive && rel.contains(e.id)) ++hits;
        }
    }
    return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

/// Fraction of judged queries with at least one relevant item in the positive set.
inline double hit_rate(const RunFile& run, const RelevanceJudgments& qrels) {
    detail::check_run_queries(run, qrels);
    std::size_t hits = 0;
    for (const auto& [qid, rel] : qrels.relevant) {
        const auto* entries = detail::entries_for(run, qid);
        if (!entries) continue;
        for (const auto& e : *entries) {
            if (e.positive && rel.contains(e.id)) {
                ++hits;
                break;
            }
        }
    }
    return qrels.relevant.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(qrels.relevant.size());
}

inline double mrr_at(const RunFile& run, const RelevanceJudgments& qrels, std::size_t cutoff = 10) {
    detail::check_run_queries(run, qrels);
    double sum = 0.0;
    for (const auto& [qid, rel] : qrels.relevant) {
        const auto* entries = detail::entries_for(run, qid);
        if (!entries) continue;
        for (const auto& e : *entries) {
            if (e.rank > cutoff) break;
            if (rel.contains(e.id)) {
                sum += 1.0 / static_cast<double>(e.rank);
                break;
            }
        }
    }
    return qrels.relevant.empty() ? 0.0 : sum / static_cast<double>(qrels.relevant.size());
}

/// Binary-gain nDCG with discount 1/log2(rank + 1).
inline double ndcg_at(const RunFile& run, const RelevanceJudgments& qrels, std::size_t cutoff = 20) {
    detail::check_run_queries(run, qrels);
    double sum = 0.0;
    std::size_t counted = 0;
    for (const auto& [qid, rel] : qrels.relevant) {
        if (rel.empty()) continue;
        ++counted;
        const auto* entries = detail::entries_for(run, qid);
        if (!entries) continue;
        double dcg = 0.0;
        for (const auto& e : *entries) {
            if (e.rank > cutoff) break;
            if (rel.contains(e.id)) dcg += 1.0 / std::log2(static_cast<double>(e.rank) + 1.0);
        }
        double ideal = 0.0;
        for (std::size_t i = 1; i <= std::min(rel.size(), cutoff); ++i) ideal += 1.0 / std::log2(static_cast<double>(i) + 1.0);
        sum += dcg / ideal;
    }
    return counted ? sum / static_cast<double>(counted) : 0.0;
}

enum class EvalMode { passage, document };

inline constexpr std::string_view to_string(EvalMode m) noexcept { return m == EvalMode::passage ? "passage" : "document"; }

inline EvalMode parse_mode(std::string_view s) {
    if (s == "passage" || s == "P") return EvalMode::passage;
    if (s == "document" || s == "D") return EvalMode::document;
    fail(ErrorKind::InvalidConfig, "mode: expected passage|document, got '" + std::string(s) + "'");
}

struct EvalResult {
    double recall = 0.0;
    double hit_rate = 0.0;
    std::map<std::size_t, double> recall_at;
    double mrr_at_10 = 0.0;
    double ndcg_at_20 = 0.0;
    EvalMode mode = EvalMode::passage;
    std::size_t n_queries = 0;
};

inline EvalResult evaluate(const RunFile& run, const RelevanceJudgments& qrels, EvalMode mode = EvalMode::passage,
                           std::span<const std::size_t> recall_cutoffs = {}) {
    EvalResult r;
    r.mode = mode;
    r.n_queries = qrels.relevant.size();
    r.recall = recall_eval(run, qrels);
    r.hit_rate = hit_rate(run, qrels);
    for (auto c : recall_cutoffs) r.recall_at[c] = recall_eval(run, qrels, c);
    r.mrr_at_10 = mrr_at(run, qrels, 10);
    r.ndcg_at_20 = ndcg_at(run, qrels, 20);
    return r;
}

struct ClassStats {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

/// Binary classification report at a score threshold (predict 1 iff score >= threshold).
/// Precision and recall with a zero denominator are 0.
struct ClassificationReport {
    std::array<ClassStats, 2> classes{};
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    double accuracy = 0.0;
    ClassStats macro_avg;
    ClassStats weighted_avg;

    std::size_t total() const noexcept { return tp + fp + fn + tn; }
};

inline ClassificationReport classification_report(std::span<const double> scores, std::span<const float> labels,
                                                  double threshold) {
    if (scores.size() != labels.size()) fail(ErrorKind::LengthMismatch, "classification_report: sizes differ");
    ClassificationReport rep;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        const bool truth = labels[i] >= 0.5f;
        if (pred && truth) ++rep.tp;
        else if (pred) ++rep.fp;
        else if (truth) ++rep.fn;
        else ++rep.tn;
    }
    auto ratio = [](std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };
    auto stats = [&](std::size_t correct, std::size_t predicted, std::size_t support) {
        ClassStats c;
        c.precision = ratio(correct, predicted);
        c.recall = ratio(correct, support);
        c.f1 = c.precision + c.recall > 0.0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
        c.support = support;
        return c;
    };
    rep.classes[1] = stats(rep.tp, rep.tp + rep.fp, rep.tp + rep.fn);
    rep.classes[0] = stats(rep.tn, rep.tn + rep.fn, rep.tn + rep.fp);
    const std::size_t n = rep.total();
    rep.accuracy = ratio(rep.tp + rep.tn, n);

    rep.macro_avg.support = rep.weighted_avg.support = n;
    for (const auto& c : rep.classes) {
        rep.macro_avg.precision += c.precision / 2.0;
        rep.macro_avg.recall += c.recall / 2.0;
        rep.macro_avg.f1 += c.f1 / 2.0;
        if (n) {
            const double w = static_cast<double>(c.support) / static_cast<double>(n);
            rep.weighted_avg.precision += w * c.precision;
            rep.weighted_avg.recall += w * c.recall;
            rep.weighted_avg.f1 += w * c.f1;
        }
    }
    return rep;
}

inline std::string format_eval_table(const EvalResult& r) {
    std::string out = "mode\tn_queries\trecall\thit_rate";
    for (const auto& [c, v] : r.recall_at) out += "\trecall@" + std::to_string(c);
    out += "\tmrr@10\tndcg@20\n";
    out += std::string(r.mode == EvalMode::passage ? "P" : "D") + '\t' + std::to_string(r.n_queries) + '\t' +
           text::format_double(r.recall) + '\t' + text::format_double(r.hit_rate);
    for (const auto& [c, v] : r.recall_at) out += '\t' + text::format_double(v);
    out += '\t' + text::format_double(r.mrr_at_10) + '\t' + text::format_double(r.ndcg_at_20) + '\n';
    return out;
}

inline std::string format_classification_report(const ClassificationReport& rep) {
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", v);
        return std::string(buf);
    };
    auto row = [&](const std::string& name, const ClassStats& c) {
        return name + '\t' + num(c.precision) + '\t' + num(c.recall) + '\t' + num(c.f1) + '\t' + std::to_string(c.support) + '\n';
    };
    std::string out = "class\tprecision\trecall\tf1\tsupport\n";
    out += row("0", rep.classes[0]);
    out += row("1", rep.classes[1]);
    out += "accuracy\t" + num(rep.accuracy) + "\t\t\t" + std::to_string(rep.total()) + '\n';
    out += row("macro_avg", rep.macro_avg);
    out += row("weighted_avg", rep.weighted_avg);
    return out;
}

} // namespace sven
