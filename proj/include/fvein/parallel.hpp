#pragma once

#include <cstddef>
#include <functional>

namespace fvein {

// Caps the worker count used by parallel_for. 0 means hardware concurrency.
void set_thread_limit(unsigned threads);
unsigned thread_limit();

// Runs body(i) for i in [0, n). Work is split into contiguous static blocks,
// so any body that writes only to slot i gives results independent of the
// thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fvein
