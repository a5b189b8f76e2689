#ifndef BASISRISK_PARALLEL_HPP
#define BASISRISK_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace basisrisk {

/// Number of workers used when the caller passes 0.
unsigned default_thread_count();

/**
 * Run body(i) for i in [0, count) on up to `threads` workers.
 *
 * Indices are handed out dynamically, so the body must write its result
 * into a slot owned by index i; callers reduce afterwards in index order.
 * The first exception thrown by any body is rethrown after all workers join.
 */
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace basisrisk

#endif
