#include <gtest/gtest.h>

#include <atomic>
#include <thread>
#include <vector>

#include "blockprof/mpmc_queue.hpp"

namespace blockprof {
namespace {

TEST(MpmcQueue, ZeroCapacityRejected) {
  EXPECT_THROW(BoundedMpmcQueue<int>(0), std::invalid_argument);
}

TEST(MpmcQueue, ExactNonPowerOfTwoBound) {
  BoundedMpmcQueue<int> q(5);
  for (int i = 0; i < 5; ++i) EXPECT_TRUE(q.try_push(i));
  EXPECT_FALSE(q.try_push(99));
  EXPECT_EQ(q.size_approx(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(q.try_pop(), i);
  EXPECT_FALSE(q.try_pop().has_value());
}

TEST(MpmcQueue, WrapsAroundManyTimes) {
  BoundedMpmcQueue<int> q(3);
  for (int round = 0; round < 1000; ++round) {
    ASSERT_TRUE(q.try_push(round));
    ASSERT_TRUE(q.try_push(-round));
    ASSERT_EQ(q.try_pop(), round);
    ASSERT_EQ(q.try_pop(), -round);
  }
}

TEST(MpmcQueue, ConcurrentProducersConsumersConserveItems) {
  constexpr int kProducers = 4;
  constexpr int kConsumers = 4;
  constexpr int kPerProducer = 100'000;
  BoundedMpmcQueue<std::uint64_t> q(64);
  std::atomic<std::uint64_t> popped_count{0};
  std::atomic<std::uint64_t> popped_sum{0};
  std::atomic<bool> producers_done{false};

  std::vector<std::thread> consumers;
  for (int c = 0; c < kConsumers; ++c) {
    consumers.emplace_back([&] {
      std::uint64_t count = 0, sum = 0;
      for (;;) {
        if (auto v = q.try_pop()) {
          ++count;
          sum += *v;
        } else if (producers_done.load()) {
          if (auto last = q.try_pop()) {
            ++count;
            sum += *last;
            continue;
          }
          break;
        } else {
          std::this_thread::yield();
        }
      }
      popped_count += count;
      popped_sum += sum;
    });
  }
  std::vector<std::thread> producers;
  for (int p = 0; p < kProducers; ++p) {
    producers.emplace_back([&, p] {
      for (int i = 0; i < kPerProducer; ++i) {
        const std::uint64_t v = static_cast<std::uint64_t>(p) * kPerProducer + i + 1;
        while (!q.try_push(v)) std::this_thread::yield();
      }
    });
  }
  for (auto& t : producers) t.join();
  producers_done = true;
  for (auto& t : consumers) t.join();

  const std::uint64_t n = static_cast<std::uint64_t>(kProducers) * kPerProducer;
  EXPECT_EQ(popped_count.load(), n);
  EXPECT_EQ(popped_sum.load(), n * (n + 1) / 2);
}

}  // namespace
}  // namespace blockprof
