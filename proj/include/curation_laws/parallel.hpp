#pragma once

#include <cstddef>
#include <functional>

namespace curlaw {

/// Worker count: CURATION_LAWS_THREADS if set to a positive integer, else the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads. Calls made
/// from inside a worker run serially. The first exception (lowest index) is
/// rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace curlaw
