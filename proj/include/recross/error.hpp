// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace recross {

enum class ErrorKind {
    // Backend wire taxonomy.
    transport,
    not_found,
    precondition,
    protocol_violation,
    // Engine-side failures.
    parse,
    duplicate,
    build,
    load,
    version,
    pool_too_small,
};

std::string_view to_string(ErrorKind kind);

/// Parses a wire error kind; anything outside the wire taxonomy maps to protocol_violation.
ErrorKind wire_error_kind(std::string_view name);

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

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw Error(ErrorKind::precondition, message);
    }
}

}  // namespace recross
