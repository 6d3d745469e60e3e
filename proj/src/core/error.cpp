// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "panosplat/error.hpp"

namespace panosplat {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid argument";
        case ErrorCode::Domain: return "domain error";
        case ErrorCode::NotFound: return "not found";
        case ErrorCode::Io: return "i/o error";
        case ErrorCode::Parse: return "parse error";
        case ErrorCode::Protocol: return "protocol error";
        case ErrorCode::Timeout: return "timeout";
        case ErrorCode::Pipeline: return "pipeline error";
    }
    return "unknown error";
}

}  // namespace panosplat
