#pragma once

#include <cstddef>
#include <functional>

namespace majorantlab {

// Process-wide worker count used by chunked kernels. Results never depend on
// it: work is split into fixed-size chunks and merged in chunk order.
int workers();
void set_workers(int n);

// Calls fn(chunk) for every chunk in [0, chunks) on up to workers() threads.
// The exception of the lowest failing chunk is rethrown.
void parallel_chunks(std::size_t chunks, const std::function<void(std::size_t)>& fn);

}  // namespace majorantlab
