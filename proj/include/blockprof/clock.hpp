#pragma once

#include <chrono>
#include <cstdint>

namespace blockprof {

// steady_clock is CLOCK_MONOTONIC on Linux; never the wall clock.
static_assert(std::chrono::steady_clock::is_steady);

/// Monotonic nanoseconds. Non-decreasing within a thread.
inline std::uint64_t now_ns() noexcept {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::steady_clock::now().time_since_epoch())
          .count());
}

}  // namespace blockprof
