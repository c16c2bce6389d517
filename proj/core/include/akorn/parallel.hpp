#pragma once

#include <cstdint>
#include <functional>

namespace akorn {

// Runs fn(i) for every i in [0,n) on up to `threads` workers (threads <= 1
// runs inline). Items are claimed dynamically, so fn must not care about
// execution order; callers needing a deterministic reduction should write
// per-item results and combine them in index order afterwards. The first
// exception thrown by any item is rethrown after all workers finish.
void parallel_for(int64_t n, int64_t threads, const std::function<void(int64_t)>& fn);

}  // namespace akorn
