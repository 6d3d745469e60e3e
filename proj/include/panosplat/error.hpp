// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace panosplat {

enum class ErrorCode {
    InvalidArgument,
    Domain,
    NotFound,
    Io,
    Parse,
    Protocol,
    Timeout,
    Pipeline,
};

const char* to_string(ErrorCode code);

/// Exception type thrown by every panosplat module. The C API maps `code()`
/// onto `ps_status`.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) fail(code, message);
}

// Literal messages are only materialized on failure.
inline void require(bool condition, ErrorCode code, const char* message) {
    if (!condition) fail(code, message);
}

}  // namespace panosplat
