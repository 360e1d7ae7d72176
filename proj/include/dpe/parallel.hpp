#pragma once

#include <cstddef>
#include <functional>

namespace dpe {

// Worker count: explicit request, else DPE_THREADS, else hardware concurrency.
unsigned resolve_threads(unsigned requested);

// Calls fn(i) for i in [0, count) on up to `threads` workers. Indices are
// split into contiguous blocks; fn must only write to slots owned by i.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace dpe
