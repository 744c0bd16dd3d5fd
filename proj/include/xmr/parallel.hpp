// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace xmr {

/// Runs task(i) for i in [0, n_tasks) on up to `threads` workers.
/// Tasks must write to disjoint, index-addressed outputs; results are then
/// independent of the worker count. threads == 0 means hardware concurrency.
/// The first exception thrown by any task is rethrown on the caller.
void parallel_for(std::size_t n_tasks, std::size_t threads,
                  const std::function<void(std::size_t)>& task);

std::size_t resolve_threads(std::size_t threads);

}  // namespace xmr
