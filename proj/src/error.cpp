// Copyright 2026 The recross Authors
// SPDX-License-Identifier: Apache-2.0

#include "recross/error.hpp"

namespace recross {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::transport: return "transport";
        case ErrorKind::not_found: return "not_found";
        case ErrorKind::precondition: return "precondition";
        case ErrorKind::protocol_violation: return "protocol_violation";
        case ErrorKind::parse: return "parse";
        case ErrorKind::duplicate: return "duplicate";
        case ErrorKind::build: return "build";
        case ErrorKind::load: return "load";
        case ErrorKind::version: return "version";
        case ErrorKind::pool_too_small: return "pool_too_small";
    }
    return "unknown";
}

ErrorKind wire_error_kind(std::string_view name) {
    if (name == "transport") return ErrorKind::transport;
    if (name == "not_found") return ErrorKind::not_found;
    if (name == "precondition") return ErrorKind::precondition;
    return ErrorKind::protocol_violation;
}

}  // namespace recross
