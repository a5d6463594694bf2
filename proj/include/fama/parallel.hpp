#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace fama {

/// Worker count used by parallel_for. Defaults to FAMA_THREADS when set,
/// otherwise std::thread::hardware_concurrency().
std::size_t thread_count();

/// Overrides the worker count for this process; 0 restores the default.
void set_thread_count(std::size_t threads);

/// Runs body(i) for i in [0, count). Indices are split into contiguous
/// chunks, one per worker; each index must write only its own outputs.
/// Nested calls run serially on the calling thread. If several bodies
/// throw, the exception from the lowest index is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace fama
