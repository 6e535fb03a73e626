#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "blockprof/file_sink.hpp"
#include "blockprof/pipeline.hpp"
#include "blockprof/types.hpp"

namespace blockprof {

/// Test-and-test-and-set lock for the per-channel append step. Holders never
/// do I/O on buffered channels; waiters yield so a preempted holder can run.
class SpinLock {
 public:
  void lock() noexcept {
    while (flag_.test_and_set(std::memory_order_acquire)) {
      while (flag_.test(std::memory_order_relaxed)) std::this_thread::yield();
    }
  }
  bool try_lock() noexcept { return !flag_.test_and_set(std::memory_order_acquire); }
  void unlock() noexcept { flag_.clear(std::memory_order_release); }

 private:
  std::atomic_flag flag_;
};

/// Per-channel handler state. Everything except the atomics is guarded by
/// `lock`.
struct HandlerState {
  HandlerKind kind = HandlerKind::Null;
  std::uint32_t channel_id = 0;
  std::string name;

  SpinLock lock;
  std::atomic<bool> closed{false};

  std::shared_ptr<FileSink> sink;  // file-producing kinds
  Pipeline* pipeline = nullptr;    // buffered kinds
  BufferBlock* current = nullptr;  // filling block, buffered kinds
  std::uint64_t next_seq = 0;

  std::uint64_t logged = 0;
  std::uint64_t sealed_blocks = 0;
  std::uint64_t dropped = 0;

  std::atomic<std::uint64_t> closed_calls{0};
  std::atomic<bool> closed_reported{false};
};

void handleNull(const TimestampEntry& entry) noexcept;

/// One 12-byte record, one write(2). Failures are counted, never thrown.
void handleDirect(const TimestampEntry& entry, HandlerState& state) noexcept;

/// Appends to the filling block; seals and submits it when it reaches
/// capacity. The next block is acquired on the following append.
void handleBuffered(const TimestampEntry& entry, HandlerState& state) noexcept;

/// Routes by state.kind. Caller holds state.lock for non-Null kinds.
void dispatch(const TimestampEntry& entry, HandlerState& state) noexcept;

/// Seals a non-empty filling block, or returns an empty one to the pool.
void flushFillingBlock(HandlerState& state);

}  // namespace blockprof
