#pragma once

#include <cstddef>
#include <functional>

namespace smallnoise {

// Runs fn(i) for every i in [0, n). threads <= 0 picks the hardware count.
// Work items are claimed dynamically, so fn must only touch state owned by
// item i; combined with per-item seeding this makes results independent of
// the worker count. Exceptions are captured and rethrown on the caller.
void parallel_for_index(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

// Number of fixed-size blocks covering n items. Block boundaries depend only
// on block_size, never on the thread count, so per-block partial results can
// be reduced in block order to give worker-count-independent totals.
inline std::size_t block_count(std::size_t n, std::size_t block_size) {
  return (n + block_size - 1) / block_size;
}

}  // namespace smallnoise
