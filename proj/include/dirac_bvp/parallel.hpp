#pragma once

#include <cstddef>
#include <functional>

namespace dbvp {

/// Worker count used by parallel_for. Defaults to DIRAC_BVP_THREADS when set,
/// otherwise 1.
int thread_count();
void set_thread_count(int threads);

/// Runs body(i) for i in [0, count) on up to thread_count() threads. Each index
/// must write only its own output slot. The first exception is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace dbvp
