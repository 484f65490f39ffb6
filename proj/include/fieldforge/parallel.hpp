#pragma once

#include <cstddef>
#include <functional>

namespace fieldforge {

// Worker count used by parallel_for. Defaults to FIELDFORGE_THREADS when set,
// otherwise 1.
int thread_count();
void set_thread_count(int n);

// Runs body(i) for every i in [0, n). Work items are independent; callers
// that reduce across items do so afterwards in index order, so results never
// depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fieldforge
