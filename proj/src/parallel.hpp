#pragma once

#include <cstdint>
#include <functional>

namespace stcae {

// Worker count for all kernel-level parallelism. Thread-safe to set between
// operations, not during one.
void set_threads(int n);
int get_threads();

// Runs body(begin, end) over [0, n) split into chunks of `grain` items.
// Chunk boundaries depend only on (n, grain), never on the worker count, and
// every chunk is executed by exactly one worker, so any computation whose
// chunks write disjoint outputs produces bit-identical results for any
// thread count.
void parallel_chunks(std::int64_t n, std::int64_t grain,
                     const std::function<void(std::int64_t, std::int64_t)>& body);

}  // namespace stcae
