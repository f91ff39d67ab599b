// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "sven/matrix.hpp"

namespace sven {

/// Z-score standardizer with population standard deviations.
struct FeatureScaler {
    std::vector<double> means;
    std::vector<double> stds;
    std::size_t fitted_on = 0;

    static constexpr double kMinStd = 1e-12;

    std::size_t width() const noexcept { return means.size(); }

    bool operator==(const FeatureScaler&) const = default;
};

/// Fits on the given rows of `rows` (all rows when `row_ids` is empty).
/// Two-pass accumulation in float64.
inline FeatureScaler fit_scaler(const Matrix& rows, std::span<const std::size_t> row_ids = {}) {
    const std::size_t count = row_ids.empty() ? rows.n_rows : row_ids.size();
    if (count == 0) fail(ErrorKind::EmptyInput, "cannot fit a scaler on zero rows");
    const std::size_t width = rows.dim;
    auto row_at = [&](std::size_t i) { return rows.row(row_ids.empty() ? i : row_ids[i]); };

    FeatureScaler s;
    s.fitted_on = count;
    s.means.assign(width, 0.0);
    s.stds.assign(width, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
        const auto r = row_at(i);
        for (std::size_t c = 0; c < width; ++c) s.means[c] += r[c];
    }
    for (auto& m : s.means) m /= static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto r = row_at(i);
        for (std::size_t c = 0; c < width; ++c) {
            const double dv = r[c] - s.means[c];
            s.stds[c] += dv * dv;
        }
    }
    for (auto& v : s.stds) v = std::sqrt(v / static_cast<double>(count));
    return s;
}

inline void transform_into(const FeatureScaler& s, std::span<const float> row, std::span<float> out) {
    if (row.size() != s.width() || out.size() != s.width())
        fail(ErrorKind::LengthMismatch, "row width " + std::to_string(row.size()) + " != scaler width " +
                                            std::to_string(s.width()));
    for (std::size_t c = 0; c < row.size(); ++c)
        out[c] = static_cast<float>((row[c] - s.means[c]) / std::max(s.stds[c], FeatureScaler::kMinStd));
}

inline std::vector<float> transform(const FeatureScaler& s, std::span<const float> row) {
    std::vector<float> out(row.size());
    transform_into(s, row, out);
    return out;
}

inline Matrix transform_rows(const FeatureScaler& s, const Matrix& rows) {
    Matrix out(rows.n_rows, rows.dim);
    for (std::size_t i = 0; i < rows.n_rows; ++i) transform_into(s, rows.row(i), out.row(i));
    return out;
}

} // namespace sven
