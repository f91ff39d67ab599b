// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sven/error.hpp"

namespace sven {

/// Dense row-major float32 matrix. Used for embeddings, feature rows and
/// support vectors alike.
struct Matrix {
    std::size_t n_rows = 0;
    std::size_t dim = 0;
    std::vector<float> data;

    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : n_rows(rows), dim(cols), data(rows * cols, 0.0f) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<float> values)
        : n_rows(rows), dim(cols), data(std::move(values)) {
        if (data.size() != n_rows * dim)
            fail(ErrorKind::DimMismatch, "matrix data length " + std::to_string(data.size()) +
                                             " != " + std::to_string(n_rows) + "x" + std::to_string(dim));
    }

    std::span<const float> row(std::size_t i) const noexcept { return {data.data() + i * dim, dim}; }
    std::span<float> row(std::size_t i) noexcept { return {data.data() + i * dim, dim}; }

    bool operator==(const Matrix&) const = default;
};

using EmbeddingMatrix = Matrix;

/// Throws unless the buffer length matches the shape and every value is finite.
inline void validate(const Matrix& m) {
    if (m.data.size() != m.n_rows * m.dim)
        fail(ErrorKind::DimMismatch, "matrix data length does not match shape");
    for (std::size_t i = 0; i < m.data.size(); ++i) {
        if (!std::isfinite(m.data[i]))
            fail(ErrorKind::NonFiniteValue, "non-finite value at row " + std::to_string(i / (m.dim ? m.dim : 1)));
    }
}

} // namespace sven
