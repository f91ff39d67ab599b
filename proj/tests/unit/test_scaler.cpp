// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sven/scaler.hpp"

using namespace sven;

TEST(Scaler, TwoPointColumn) {
    const auto s = fit_scaler(Matrix(2, 1, {1.0f, 3.0f}));
    EXPECT_DOUBLE_EQ(s.means[0], 2.0);
    EXPECT_DOUBLE_EQ(s.stds[0], 1.0);
    EXPECT_EQ(s.fitted_on, 2u);
}

TEST(Scaler, ConstantColumnMapsToZero) {
    const auto s = fit_scaler(Matrix(3, 1, {5.0f, 5.0f, 5.0f}));
    EXPECT_DOUBLE_EQ(s.means[0], 5.0);
    EXPECT_DOUBLE_EQ(s.stds[0], 0.0);
    const float row[] = {5.0f};
    EXPECT_EQ(transform(s, row)[0], 0.0f);
}

TEST(Scaler, PopulationStdNotSample) {
    // deviations -1, -1, 2 -> squared sum 6, over R=3 -> variance 2
    const auto s = fit_scaler(Matrix(3, 1, {0.0f, 0.0f, 3.0f}));
    EXPECT_DOUBLE_EQ(s.means[0], 1.0);
    EXPECT_NEAR(s.stds[0], std::sqrt(2.0), 1e-15);
}

TEST(Scaler, TransformArithmetic) {
    FeatureScaler s{{2.0}, {1.0}, 1};
    const float row[] = {3.0f};
    EXPECT_EQ(transform(s, row)[0], 1.0f);
}

TEST(Scaler, Errors) {
    EXPECT_THROW(fit_scaler(Matrix(0, 3)), Error);
    FeatureScaler s{{0.0, 0.0}, {1.0, 1.0}, 1};
    const float row[] = {1.0f};
    try {
        transform(s, row);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::LengthMismatch);
    }
}

TEST(Scaler, FitOnRowSubset) {
    const Matrix m(4, 1, {1.0f, 3.0f, 100.0f, -50.0f});
    const std::size_t ids[] = {0, 1};
    const auto s = fit_scaler(m, ids);
    EXPECT_DOUBLE_EQ(s.means[0], 2.0);
    EXPECT_DOUBLE_EQ(s.stds[0], 1.0);
    EXPECT_EQ(s.fitted_on, 2u);
}

TEST(Scaler, TransformIsAffinePerCoordinate) {
    std::mt19937 gen(11);
    std::normal_distribution<double> nd(0.0, 3.0);
    Matrix m(50, 4);
    for (auto& v : m.data) v = static_cast<float>(nd(gen));
    const auto s = fit_scaler(m);
    const std::vector<float> x = {1.5f, -2.0f, 0.25f, 8.0f};
    const std::vector<float> y = {-0.5f, 4.0f, 2.0f, -1.0f};
    const float a = 0.25f;
    std::vector<float> mix(4);
    for (int i = 0; i < 4; ++i) mix[i] = a * x[i] + (1 - a) * y[i];
    const auto tx = transform(s, x), ty = transform(s, y), tm = transform(s, mix);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(tm[i], a * tx[i] + (1 - a) * ty[i], 1e-5);
}
