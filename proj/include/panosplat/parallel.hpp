// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace panosplat {

/// Number of worker threads: hardware concurrency, capped by the
/// PANOSPLAT_THREADS environment variable when it is set.
int worker_count();

/// Runs body(i) for i in [0, n). Iterations are distributed over worker
/// threads in contiguous blocks; callers must write only to per-index state
/// so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace panosplat
