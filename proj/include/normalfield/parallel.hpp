#pragma once

#include <cstddef>
#include <functional>

namespace nf {

/// Worker count from NORMALFIELD_THREADS (0 or unset: hardware concurrency).
int worker_count();

/// Overrides the environment for the rest of the process; 0 restores auto.
void set_worker_count(int n);

/// Runs body(i) for i in [0, n). Indices are handed out in contiguous blocks;
/// body must only write state owned by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace nf
