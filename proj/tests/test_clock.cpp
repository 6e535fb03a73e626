#include <gtest/gtest.h>

#include <time.h>

#include <thread>

#include "blockprof/clock.hpp"

namespace blockprof {
namespace {

std::uint64_t rawMonotonicNs() {
  timespec ts{};
  ::clock_gettime(CLOCK_MONOTONIC_RAW, &ts);
  return static_cast<std::uint64_t>(ts.tv_sec) * 1'000'000'000ull + static_cast<std::uint64_t>(ts.tv_nsec);
}

TEST(Clock, NonDecreasingWithinThread) {
  std::uint64_t prev = now_ns();
  for (int i = 0; i < 1'000'000; ++i) {
    const std::uint64_t t = now_ns();
    ASSERT_GE(t, prev);
    prev = t;
  }
}

TEST(Clock, OneMillisecondBusyLoopAgreesWithRawClock) {
  // Independent source: CLOCK_MONOTONIC_RAW is not slewed by NTP.
  const std::uint64_t raw_start = rawMonotonicNs();
  const std::uint64_t start = now_ns();
  while (rawMonotonicNs() - raw_start < 1'000'000) {
  }
  const std::uint64_t delta = now_ns() - start;
  EXPECT_GE(delta, 1'000'000u * 999 / 1000);  // slew tolerance 0.1%
  EXPECT_LT(delta, 1'000'000u + 5'000'000u);  // scheduling slack
}

TEST(Clock, HundredMillisecondSleepIsAboutOneE8) {
  const std::uint64_t start = now_ns();
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  const double delta = static_cast<double>(now_ns() - start);
  EXPECT_GE(delta, 0.8e8);
  EXPECT_LE(delta, 1.2e8);
}

}  // namespace
}  // namespace blockprof
