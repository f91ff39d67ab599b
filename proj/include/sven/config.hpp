// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sven/knn.hpp"
#include "sven/svr.hpp"
#include "sven/text.hpp"

namespace sven {

enum class ScalerFit { all, train };
enum class MissingPositive { skip, inject };

inline constexpr std::string_view to_string(ScalerFit f) noexcept { return f == ScalerFit::all ? "all" : "train"; }
inline constexpr std::string_view to_string(MissingPositive p) noexcept {
    return p == MissingPositive::skip ? "skip" : "inject";
}

/// Everything that shapes a trained ensemble. Thread counts are deliberately
/// absent: they never change results, so they never enter the model file.
struct TrainConfig {
    std::size_t k = 50;
    std::size_t s = 35;
    double overlap = 0.6;
    SvrParams svr;
    double threshold = 0.5;
    double split = 0.1;
    std::uint64_t seed = 42;
    Metric metric = Metric::euclidean;
    ScalerFit scaler_fit = ScalerFit::all;
    MissingPositive missing_positive = MissingPositive::skip;
    std::size_t infer_k = 0; // 0 -> k

    std::size_t inference_k() const noexcept { return infer_k ? infer_k : k; }

    bool operator==(const TrainConfig&) const = default;
};

inline void validate(const TrainConfig& c) {
    if (c.k < 2) fail(ErrorKind::InvalidConfig, "k must be >= 2");
    if (!(c.split > 0.0 && c.split < 1.0)) fail(ErrorKind::InvalidConfig, "split must be in (0, 1)");
    if (c.s < 1) fail(ErrorKind::InvalidConfig, "subsets must be >= 1");
    if (!(c.overlap >= 0.0 && c.overlap < 1.0)) fail(ErrorKind::InvalidConfig, "overlap must be in [0, 1)");
    validate(c.svr);
}

/// Ordered key/value view of a TrainConfig, the form used in config files,
/// model files and reports.
inline std::vector<std::pair<std::string, std::string>> to_pairs(const TrainConfig& c) {
    return {
        {"k", std::to_string(c.k)},
        {"subsets", std::to_string(c.s)},
        {"overlap", text::format_double(c.overlap)},
        {"threshold", text::format_double(c.threshold)},
        {"split", text::format_double(c.split)},
        {"seed", std::to_string(c.seed)},
        {"metric", std::string(to_string(c.metric))},
        {"scaler_fit", std::string(to_string(c.scaler_fit))},
        {"missing_positive", std::string(to_string(c.missing_positive))},
        {"infer_k", std::to_string(c.infer_k)},
        {"kernel", std::string(to_string(c.svr.kernel))},
        {"C", text::format_double(c.svr.C)},
        {"epsilon", text::format_double(c.svr.epsilon)},
        {"gamma", c.svr.gamma ? text::format_double(*c.svr.gamma) : "scale"},
        {"tol", text::format_double(c.svr.tol)},
        {"max_passes", std::to_string(c.svr.max_passes)},
    };
}

/// Applies one key; returns false if the key is not a TrainConfig key.
inline bool apply_setting(TrainConfig& c, std::string_view key, std::string_view value) {
    const std::string k(key);
    if (k == "k") c.k = text::parse_u64(value, key);
    else if (k == "subsets") c.s = text::parse_u64(value, key);
    else if (k == "overlap") c.overlap = text::parse_double(value, key);
    else if (k == "threshold") c.threshold = text::parse_double(value, key);
    else if (k == "split") c.split = text::parse_double(value, key);
    else if (k == "seed") c.seed = text::parse_u64(value, key);
    else if (k == "metric") c.metric = parse_metric(text::trim(value));
    else if (k == "scaler_fit") {
        const auto v = text::trim(value);
        if (v == "all") c.scaler_fit = ScalerFit::all;
        else if (v == "train") c.scaler_fit = ScalerFit::train;
        else fail(ErrorKind::InvalidConfig, "scaler_fit: expected all|train");
    } else if (k == "missing_positive") {
        const auto v = text::trim(value);
        if (v == "skip") c.missing_positive = MissingPositive::skip;
        else if (v == "inject") c.missing_positive = MissingPositive::inject;
        else fail(ErrorKind::InvalidConfig, "missing_positive: expected skip|inject");
    } else if (k == "infer_k") c.infer_k = text::parse_u64(value, key);
    else if (k == "kernel") {
        const auto v = text::trim(value);
        if (v == "rbf") c.svr.kernel = KernelType::rbf;
        else if (v == "linear") c.svr.kernel = KernelType::linear;
        else fail(ErrorKind::InvalidConfig, "kernel: expected rbf|linear");
    } else if (k == "C") c.svr.C = text::parse_double(value, key);
    else if (k == "epsilon") c.svr.epsilon = text::parse_double(value, key);
    else if (k == "gamma") {
        if (text::trim(value) == "scale") c.svr.gamma.reset();
        else c.svr.gamma = text::parse_double(value, key);
    } else if (k == "tol") c.svr.tol = text::parse_double(value, key);
    else if (k == "max_passes") c.svr.max_passes = text::parse_u64(value, key);
    else return false;
    return true;
}

inline std::string format_pairs(const std::vector<std::pair<std::string, std::string>>& pairs) {
    std::string out;
    for (const auto& [k, v] : pairs) out += k + " = " + v + '\n';
    return out;
}

/// Parses `key = value` lines; blank lines and `#` comments are ignored.
/// Later duplicates override earlier ones.
inline std::vector<std::pair<std::string, std::string>> parse_pairs(std::string_view content) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t line_no = 0;
    for (auto line : text::lines(content)) {
        ++line_no;
        const auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos)
            fail(ErrorKind::InvalidConfig, "config line " + std::to_string(line_no) + ": expected key = value");
        const auto key = text::trim(t.substr(0, eq));
        if (key.empty()) fail(ErrorKind::InvalidConfig, "config line " + std::to_string(line_no) + ": empty key");
        out.emplace_back(std::string(key), std::string(text::trim(t.substr(eq + 1))));
    }
    return out;
}

inline TrainConfig parse_train_config(std::string_view content) {
    TrainConfig c;
    for (const auto& [k, v] : parse_pairs(content)) {
        if (!apply_setting(c, k, v)) fail(ErrorKind::InvalidConfig, "unknown config key '" + k + "'");
    }
    return c;
}

} // namespace sven
