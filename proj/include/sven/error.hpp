// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sven {

enum class ErrorKind {
    BadMagic,
    DimMismatch,
    NonFiniteValue,
    IoFailure,
    NotFound,
    MalformedLine,
    UnknownId,
    UnknownQuery,
    EmptyJudgments,
    EmptyInput,
    EmptySubset,
    LengthMismatch,
    InvalidParams,
    InfeasiblePoint,
    VersionMismatch,
    Truncated,
    InvalidConfig,
};

inline constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::BadMagic: return "bad_magic";
    case ErrorKind::DimMismatch: return "dim_mismatch";
    case ErrorKind::NonFiniteValue: return "non_finite_value";
    case ErrorKind::IoFailure: return "io_failure";
    case ErrorKind::NotFound: return "not_found";
    case ErrorKind::MalformedLine: return "malformed_line";
    case ErrorKind::UnknownId: return "unknown_id";
    case ErrorKind::UnknownQuery: return "unknown_query";
    case ErrorKind::EmptyJudgments: return "empty_judgments";
    case ErrorKind::EmptyInput: return "empty_input";
    case ErrorKind::EmptySubset: return "empty_subset";
    case ErrorKind::LengthMismatch: return "length_mismatch";
    case ErrorKind::InvalidParams: return "invalid_params";
    case ErrorKind::InfeasiblePoint: return "infeasible_point";
    case ErrorKind::VersionMismatch: return "version_mismatch";
    case ErrorKind::Truncated: return "truncated";
    case ErrorKind::InvalidConfig: return "invalid_config";
    }
    return "unknown";
}

/// Every failure in the library surfaces as this exception; `kind()` is the
/// stable, switchable part, `what()` is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace sven
