#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace evtfair {

// Child seed for stream `index` of a root seed (splitmix64 finalizer), so
// parallel work draws the same numbers regardless of scheduling.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept;

// Worker cap from EVTFAIR_THREADS; 0 or 1 means sequential. Unset means
// hardware concurrency.
unsigned thread_budget();

// Calls fn(i) for i in [0, n). Each index must write only its own output.
// Calls made from inside a worker run sequentially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace evtfair
