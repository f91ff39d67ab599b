// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sven/matrix.hpp"

namespace sven {

enum class KernelType : std::uint32_t { rbf = 0, linear = 1 };

inline constexpr std::string_view to_string(KernelType k) noexcept { return k == KernelType::rbf ? "rbf" : "linear"; }

/// Hyperparameters of epsilon-SVR. An empty `gamma` means "scale":
/// 1 / (F * Var(X)) resolved at training time.
struct SvrParams {
    double C = 1.0;
    double epsilon = 0.1;
    std::optional<double> gamma;
    double tol = 1e-3;
    std::uint64_t max_passes = 0; // 0 -> 10 * n; one pass = n working-pair updates
    KernelType kernel = KernelType::rbf;

    bool operator==(const SvrParams&) const = default;
};

inline void validate(const SvrParams& p) {
    if (!(p.C > 0.0) || !std::isfinite(p.C)) fail(ErrorKind::InvalidParams, "svr: C must be positive");
    if (!(p.epsilon >= 0.0) || !std::isfinite(p.epsilon)) fail(ErrorKind::InvalidParams, "svr: epsilon must be >= 0");
    if (!(p.tol > 0.0)) fail(ErrorKind::InvalidParams, "svr: tol must be positive");
    if (p.gamma && !(*p.gamma > 0.0)) fail(ErrorKind::InvalidParams, "svr: gamma must be positive");
}

inline double rbf_kernel(std::span<const float> x, std::span<const float> y, double gamma) {
    if (x.size() != y.size()) fail(ErrorKind::LengthMismatch, "rbf_kernel: vector lengths differ");
    if (!(gamma > 0.0)) fail(ErrorKind::InvalidParams, "rbf_kernel: gamma must be positive");
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = static_cast<double>(x[i]) - y[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

inline double linear_kernel(std::span<const float> x, std::span<const float> y) {
    if (x.size() != y.size()) fail(ErrorKind::LengthMismatch, "linear_kernel: vector lengths differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += static_cast<double>(x[i]) * y[i];
    return acc;
}

struct Kernel {
    KernelType type = KernelType::rbf;
    double gamma = 1.0;

    double operator()(std::span<const float> x, std::span<const float> y) const {
        return type == KernelType::rbf ? rbf_kernel(x, y, gamma) : linear_kernel(x, y);
    }
};

/// gamma = 1 / (F * Var(X)) over all entries of X; 1 / F when the variance is 0.
inline double scale_gamma(const Matrix& X) {
    const double F = static_cast<double>(std::max<std::size_t>(X.dim, 1));
    if (X.data.empty()) return 1.0 / F;
    double mean = 0.0;
    for (float v : X.data) mean += v;
    mean /= static_cast<double>(X.data.size());
    double var = 0.0;
    for (float v : X.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(X.data.size());
    return var > 0.0 ? 1.0 / (F * var) : 1.0 / F;
}

inline double resolve_gamma(const Matrix& X, const SvrParams& p) { return p.gamma ? *p.gamma : scale_gamma(X); }

/// Trained epsilon-SVR: f(x) = sum_i beta_i K(sv_i, x) + bias, beta = alpha - alpha*.
struct SvrModel {
    Matrix support_vectors;
    std::vector<double> beta;
    double bias = 0.0;
    double gamma = 1.0;
    SvrParams params;
    std::vector<std::uint32_t> sv_indices; // training row of each support vector

    std::size_t n_support() const noexcept { return beta.size(); }
    Kernel kernel() const noexcept { return {params.kernel, gamma}; }

    bool operator==(const SvrModel&) const = default;
};

inline double predict(const SvrModel& m, std::span<const float> x) {
    if (m.n_support() > 0 && x.size() != m.support_vectors.dim)
        fail(ErrorKind::LengthMismatch, "predict: input width " + std::to_string(x.size()) + " != model width " +
                                            std::to_string(m.support_vectors.dim));
    const Kernel k = m.kernel();
    double acc = 0.0;
    for (std::size_t i = 0; i < m.n_support(); ++i) acc += m.beta[i] * k(m.support_vectors.row(i), x);
    return acc + m.bias;
}

struct SvrTrainSummary {
    std::uint64_t iterations = 0;
    bool converged = false;
    double max_violation = 0.0; // final maximal-violating-pair gap
    double objective = 0.0;     // dual objective at the returned beta
    double gamma = 0.0;
    std::size_t n_support = 0;
};

struct SvrFit {
    SvrModel model;
    SvrTrainSummary summary;
};

/// Called with the full beta vector after every working-pair update.
using SmoObserver = std::function<void(std::span<const double>)>;

namespace detail {

/// Bounded LRU cache of kernel matrix rows. Rows are computed on demand and
/// are bit-identical whether cached or not.
class KernelRowCache {
public:
    KernelRowCache(const Matrix& X, Kernel k, std::size_t budget_bytes)
        : X_(X), k_(k), capacity_(std::max<std::size_t>(2, budget_bytes / std::max<std::size_t>(1, X.n_rows * sizeof(double)))) {}

    const std::vector<double>& row(std::size_t i) {
        if (auto it = index_.find(i); it != index_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);
            return it->second->values;
        }
        if (index_.size() >= capacity_) {
            index_.erase(lru_.back().row);
            lru_.pop_back();
        }
        lru_.push_front({i, std::vector<double>(X_.n_rows)});
        auto& values = lru_.front().values;
        const auto xi = X_.row(i);
        for (std::size_t j = 0; j < X_.n_rows; ++j) values[j] = k_(xi, X_.row(j));
        index_[i] = lru_.begin();
        return values;
    }

private:
    struct Entry {
        std::size_t row;
        std::vector<double> values;
    };
    const Matrix& X_;
    Kernel k_;
    std::size_t capacity_;
    std::list<Entry> lru_;
    std::unordered_map<std::size_t, std::list<Entry>::iterator> index_;
};

// One-sided derivatives of the dual along +e_i / -e_i. The epsilon term
// contributes eps * sign(beta), with the subgradient at 0 split by side.
inline double up_derivative(double g, double b, double eps) noexcept { return g + (b >= 0.0 ? eps : -eps); }
inline double down_derivative(double g, double b, double eps) noexcept { return g + (b > 0.0 ? eps : -eps); }

/// Exact minimizer over [lo, hi] of
///   phi(t) = a t + eta/2 t^2 + eps (|bi + t| + |bj - t|),
/// a convex piecewise quadratic with kinks at -bi and bj. Works on the
/// derivative segment by segment rather than comparing phi values, which
/// would lose the step once the gain drops below double resolution.
inline double solve_pair_step(double a, double eta, double eps, double bi, double bj, double lo, double hi) {
    double knots[4] = {lo, hi, -bi, bj};
    std::size_t nk = 0;
    for (double t : knots) {
        if (t >= lo && t <= hi) knots[nk++] = t;
    }
    std::sort(knots, knots + nk);
    nk = static_cast<std::size_t>(std::unique(knots, knots + nk) - knots);

    for (std::size_t s = 0; s + 1 < nk; ++s) {
        const double p = knots[s], q = knots[s + 1];
        const double mid = 0.5 * (p + q);
        // Derivative inside (p, q): slope + eta t.
        const double slope = a + eps * ((bi + mid >= 0.0 ? 1.0 : -1.0) - (bj - mid >= 0.0 ? 1.0 : -1.0));
        if (slope + eta * p >= 0.0) return p;
        if (slope + eta * q > 0.0) return std::clamp(-slope / eta, p, q);
    }
    return nk ? knots[nk - 1] : 0.0;
}

inline double snap(double v, double C) noexcept {
    const double tiny = 1e-12 * C;
    if (std::abs(v) <= tiny) return 0.0;
    if (v >= C - tiny) return C;
    if (v <= -C + tiny) return -C;
    return v;
}

struct BiasBounds {
    double max_down = -std::numeric_limits<double>::infinity(); // over beta > -C
    double min_up = std::numeric_limits<double>::infinity();    // over beta < C
    std::size_t arg_down = 0;
    std::size_t arg_up = 0;
};

inline BiasBounds violating_pair(std::span<const double> beta, std::span<const double> grad, double C, double eps) {
    BiasBounds b;
    for (std::size_t k = 0; k < beta.size(); ++k) {
        if (beta[k] < C) {
            const double d = up_derivative(grad[k], beta[k], eps);
            if (d < b.min_up) {
                b.min_up = d;
                b.arg_up = k;
            }
        }
        if (beta[k] > -C) {
            const double d = down_derivative(grad[k], beta[k], eps);
            if (d > b.max_down) {
                b.max_down = d;
                b.arg_down = k;
            }
        }
    }
    return b;
}

} // namespace detail

/// Dual objective 1/2 beta'K beta + eps sum|beta| - y'beta, i.e. the
/// alpha/alpha* form with the minimal-norm split alpha = max(beta, 0),
/// alpha* = max(-beta, 0). Throws InfeasiblePoint off the feasible set.
inline double dual_objective(std::span<const double> beta, const Matrix& X, std::span<const float> y,
                             const SvrParams& params) {
    validate(params);
    const std::size_t n = X.n_rows;
    if (beta.size() != n || y.size() != n) fail(ErrorKind::LengthMismatch, "dual_objective: sizes differ");
    double sum = 0.0;
    for (double b : beta) {
        if (std::abs(b) > params.C * (1.0 + 1e-12)) fail(ErrorKind::InfeasiblePoint, "dual_objective: |beta| > C");
        sum += b;
    }
    if (std::abs(sum) > params.tol) fail(ErrorKind::InfeasiblePoint, "dual_objective: sum(beta) != 0");

    const Kernel k{params.kernel, resolve_gamma(X, params)};
    double quad = 0.0, lin = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (beta[i] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (beta[j] != 0.0) quad += beta[i] * beta[j] * k(X.row(i), X.row(j));
        }
        lin += params.epsilon * std::abs(beta[i]) - static_cast<double>(y[i]) * beta[i];
    }
    return 0.5 * quad + lin;
}

struct SmoOptions {
    std::size_t cache_bytes = std::size_t{128} << 20;
    const SmoObserver* observer = nullptr;
};

/// Trains epsilon-SVR by SMO over beta = alpha - alpha*. Each step picks the
/// maximal violating pair (i up, j down), moves beta_i += t, beta_j -= t,
/// which keeps sum(beta) fixed, and minimizes the dual exactly along that
/// line inside the box. Stops when the pair gap is <= tol or the pass budget
/// runs out; the latter is reported, not thrown.
inline SvrFit train_svr(const Matrix& X, std::span<const float> y, const SvrParams& params,
                        const SmoOptions& options = {}) {
    validate(params);
    const std::size_t n = X.n_rows;
    if (n == 0) fail(ErrorKind::EmptyInput, "train_svr: no training rows");
    if (y.size() != n) fail(ErrorKind::LengthMismatch, "train_svr: target length != rows");
    for (float v : X.data) {
        if (!std::isfinite(v)) fail(ErrorKind::NonFiniteValue, "train_svr: non-finite feature");
    }
    for (float v : y) {
        if (!std::isfinite(v)) fail(ErrorKind::NonFiniteValue, "train_svr: non-finite target");
    }

    const double C = params.C;
    const double eps = params.epsilon;
    const Kernel kernel{params.kernel, resolve_gamma(X, params)};
    const std::uint64_t passes = params.max_passes ? params.max_passes : 10 * std::uint64_t{n};
    const std::uint64_t max_iter = passes * n;

    std::vector<double> beta(n, 0.0);
    std::vector<double> grad(n); // (K beta)_k - y_k
    for (std::size_t k = 0; k < n; ++k) grad[k] = -static_cast<double>(y[k]);
    std::vector<double> diag(n);
    for (std::size_t k = 0; k < n; ++k) diag[k] = kernel(X.row(k), X.row(k));

    detail::KernelRowCache cache(X, kernel, options.cache_bytes);
    SvrTrainSummary summary;
    summary.gamma = kernel.gamma;

    detail::BiasBounds bounds;
    while (true) {
        bounds = detail::violating_pair(beta, grad, C, eps);
        summary.max_violation = std::max(0.0, bounds.max_down - bounds.min_up);
        if (bounds.max_down - bounds.min_up <= params.tol) {
            summary.converged = true;
            break;
        }
        if (summary.iterations >= max_iter) break;

        const std::size_t i = bounds.arg_up;
        const std::size_t j = bounds.arg_down;
        const auto& ki = cache.row(i);
        const double kij = ki[j];
        const double eta = std::max(0.0, diag[i] + diag[j] - 2.0 * kij);
        const double lo = std::max(-C - beta[i], beta[j] - C);
        const double hi = std::min(C - beta[i], beta[j] + C);
        const double t = detail::solve_pair_step(grad[i] - grad[j], eta, eps, beta[i], beta[j], lo, hi);

        const double new_i = detail::snap(beta[i] + t, C);
        const double new_j = detail::snap(beta[j] - t, C);
        const double di = new_i - beta[i];
        const double dj = new_j - beta[j];
        beta[i] = new_i;
        beta[j] = new_j;
        ++summary.iterations;
        if (di != 0.0 || dj != 0.0) {
            const auto& kj = cache.row(j);
            const auto& ki_again = cache.row(i); // j's insertion may have evicted i
            for (std::size_t k = 0; k < n; ++k) grad[k] += di * ki_again[k] + dj * kj[k];
        } else {
            // No progress is possible along the best pair; treat as stalled.
            break;
        }
        assert(std::abs(beta[i]) <= C && std::abs(beta[j]) <= C);
        if (options.observer) (*options.observer)(beta);
    }

    // Bias: average over free support vectors, else the middle of the
    // feasible interval [max_down, min_up] (either side may be empty).
    double neg_bias = 0.0;
    std::size_t n_free = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (beta[k] != 0.0 && std::abs(beta[k]) < C) {
            neg_bias += grad[k] + (beta[k] > 0.0 ? eps : -eps);
            ++n_free;
        }
    }
    if (n_free > 0) {
        neg_bias /= static_cast<double>(n_free);
    } else {
        const bool has_down = std::isfinite(bounds.max_down);
        const bool has_up = std::isfinite(bounds.min_up);
        if (has_down && has_up) neg_bias = 0.5 * (bounds.max_down + bounds.min_up);
        else if (has_down) neg_bias = bounds.max_down;
        else if (has_up) neg_bias = bounds.min_up;
    }

    SvrFit fit;
    auto& model = fit.model;
    model.bias = -neg_bias;
    model.gamma = kernel.gamma;
    model.params = params;
    model.params.gamma = kernel.gamma;
    std::size_t s = 0;
    for (double b : beta) s += b != 0.0;
    model.support_vectors = Matrix(s, X.dim);
    model.beta.reserve(s);
    model.sv_indices.reserve(s);
    double objective = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        // K beta = grad + y, so 1/2 beta'K beta = 1/2 sum beta_k (grad_k + y_k).
        objective += 0.5 * beta[k] * (grad[k] + y[k]) + eps * std::abs(beta[k]) - y[k] * beta[k];
        if (beta[k] == 0.0) continue;
        const auto src = X.row(k);
        std::copy(src.begin(), src.end(), model.support_vectors.row(model.beta.size()).begin());
        model.beta.push_back(beta[k]);
        model.sv_indices.push_back(static_cast<std::uint32_t>(k));
    }
    summary.objective = objective;
    summary.n_support = s;
    fit.summary = summary;
    return fit;
}

/// Expands the model's support coefficients back onto the n training rows.
inline std::vector<double> full_beta(const SvrModel& m, std::size_t n) {
    std::vector<double> beta(n, 0.0);
    for (std::size_t s = 0; s < m.n_support(); ++s) {
        if (m.sv_indices[s] >= n) fail(ErrorKind::LengthMismatch, "support vector index beyond training rows");
        beta[m.sv_indices[s]] = m.beta[s];
    }
    return beta;
}

/// Largest violation of the epsilon-KKT conditions over the training rows,
/// in target units. With residual r = y - f(x):
///   beta = 0        -> |r| <= eps
///   0 < beta < C    -> r = eps        beta = C  -> r >= eps
///   -C < beta < 0   -> r = -eps       beta = -C -> r <= -eps
inline double kkt_violation(const SvrModel& m, const Matrix& X, std::span<const float> y) {
    if (y.size() != X.n_rows) fail(ErrorKind::LengthMismatch, "kkt_violation: target length != rows");
    const auto beta = full_beta(m, X.n_rows);
    const double C = m.params.C;
    const double eps = m.params.epsilon;
    double worst = 0.0;
    for (std::size_t k = 0; k < X.n_rows; ++k) {
        const double r = static_cast<double>(y[k]) - predict(m, X.row(k));
        const double b = beta[k];
        double v;
        if (b == 0.0) v = std::max(0.0, std::abs(r) - eps);
        else if (b >= C) v = std::max(0.0, eps - r);
        else if (b <= -C) v = std::max(0.0, r + eps);
        else if (b > 0.0) v = std::abs(r - eps);
        else v = std::abs(r + eps);
        worst = std::max(worst, v);
    }
    return worst;
}

} // namespace sven
