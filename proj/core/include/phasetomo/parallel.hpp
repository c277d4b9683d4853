#pragma once

#include <cstddef>
#include <functional>

namespace phasetomo {

/// Number of worker threads used by parallel_for. Zero means "auto"
/// (PHASETOMO_THREADS if set, otherwise hardware concurrency).
void set_thread_count(unsigned n);
unsigned thread_count();

/// Resolves the documented precedence: explicit flag > PHASETOMO_THREADS > auto.
unsigned resolve_thread_count(unsigned flag_value);

/// Calls fn(i) for every i in [begin, end). Work is split into contiguous
/// static blocks; fn must only write to state owned by index i, so results
/// never depend on the number of workers.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn);

}  // namespace phasetomo
