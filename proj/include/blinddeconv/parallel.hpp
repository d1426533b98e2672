#pragma once

#include <cstddef>
#include <functional>

namespace blinddeconv {

//! Worker count used by library loops; 0 means "hardware concurrency".
void set_thread_count(unsigned threads);
unsigned thread_count();

//! Calls body(i) for i in [0, n) on up to thread_count() threads. Each index is
//! processed exactly once; callers write to disjoint outputs so results never
//! depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace blinddeconv
