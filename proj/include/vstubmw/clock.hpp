#pragma once

#include <chrono>
#include <cstdint>

namespace vstubmw {

// Monotonic nanoseconds. All latency intervals and cache timestamps use this
// clock; wall clocks are never used for measurement.
inline uint64_t mono_now_ns() {
  auto now = std::chrono::steady_clock::now().time_since_epoch();
  return static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(now).count());
}

}  // namespace vstubmw
