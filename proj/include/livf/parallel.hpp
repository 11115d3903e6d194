#pragma once

#include <cstddef>
#include <functional>

namespace livf {

// Worker thread budget: LIVF_THREADS when set and nonzero, otherwise the
// hardware concurrency. An unparsable value raises InvalidParamError.
std::size_t worker_thread_count();

// Runs fn(begin, end) over disjoint chunks of [0, n), possibly from several
// threads. Chunk boundaries carry no information: callers must produce
// results that do not depend on the split (write-by-index or order-free
// merges), which keeps parallel runs identical to sequential ones.
void parallel_for_chunks(
    std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace livf
