#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "blockprof/codecs.hpp"
#include "blockprof/file_sink.hpp"
#include "blockprof/mpmc_queue.hpp"
#include "blockprof/types.hpp"

namespace blockprof {

enum class PayloadState : std::uint8_t { Raw, Compressed };

/// Fixed-capacity run of entries for one channel; the unit handed between
/// the application, the compression workers and the writer. Exactly one
/// stage owns a block at any time.
class BufferBlock {
 public:
  explicit BufferBlock(std::uint32_t capacity);

  bool append(const TimestampEntry& entry) noexcept {
    entries_[count_++] = entry;
    return count_ == capacity_;
  }

  bool full() const noexcept { return count_ == capacity_; }
  bool empty() const noexcept { return count_ == 0; }
  std::uint32_t count() const noexcept { return count_; }
  std::uint32_t capacity() const noexcept { return capacity_; }
  std::span<const TimestampEntry> entries() const noexcept { return {entries_.get(), count_}; }

  /// Back to count=0, Raw payload. Keeps allocations for reuse.
  void reset() noexcept;

  std::uint64_t seq_no = 0;
  std::uint32_t channel_id = 0;
  PayloadState payload_state = PayloadState::Raw;
  CodecId codec = CodecId::Identity;
  std::vector<std::byte> payload;  // encoded (and compressed) bytes once Compressed

 private:
  std::uint32_t capacity_;
  std::uint32_t count_ = 0;
  std::unique_ptr<TimestampEntry[]> entries_;
};

struct PipelineConfig {
  std::uint32_t num_blocks = 32;
  std::uint32_t block_capacity = 1'000'000;
  std::uint32_t num_workers = 4;
  // Identity routes sealed blocks straight to the writer.
  CodecId codec = CodecId::Identity;
  int zstd_level = codecs::kDefaultZstdLevel;
  std::chrono::milliseconds drain_timeout{60'000};
};

/// Test seams. Both run on worker threads.
struct PipelineHooks {
  std::function<void(const BufferBlock&)> before_compress;
  std::function<void(CodecId, std::span<const std::byte>, std::vector<std::byte>&)> compressor;
};

struct ChannelWriteStats {
  std::uint64_t entries = 0;
  std::uint64_t frames = 0;
  std::uint64_t payload_bytes = 0;
  std::uint64_t write_failures = 0;
  std::vector<std::uint32_t> frame_entry_counts;  // in write order
};

struct DrainResult {
  bool ok = true;
  bool timed_out = false;
  std::uint64_t codec_fallbacks = 0;
  std::size_t free_blocks = 0;
  std::vector<std::string> errors;
};

/// Thrown by acquireEmpty once the pipeline stops accepting blocks.
class PipelineStopped : public std::runtime_error {
 public:
  PipelineStopped() : std::runtime_error("pipeline is drained") {}
};

/// Block pool + raw queue + compression workers + single writer. Shared by
/// all buffered channels of a profiler.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config, PipelineHooks hooks = {});
  ~Pipeline();

  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  /// Registers the file that receives frames for `channel_id`. Must happen
  /// before any block of that channel is submitted.
  void attachSink(std::uint32_t channel_id, std::shared_ptr<FileSink> sink);

  /// Takes an empty block from the free pool, waiting with bounded backoff
  /// while the pool is exhausted. Throws PipelineStopped after drain().
  BufferBlock* acquireEmpty();

  /// Returns an unused (count == 0) block to the pool.
  void releaseEmpty(BufferBlock* block);

  /// Hands a sealed block to the workers (compressed codecs) or directly to
  /// the writer (Identity). Throws std::logic_error for an empty block.
  void sealAndSubmit(BufferBlock* block);

  /// Waits for all queues to empty, stops workers and writer, syncs and
  /// closes the attached sinks. Callers must have submitted or released
  /// every block first. Idempotent.
  DrainResult drain();

  ChannelWriteStats channelStats(std::uint32_t channel_id) const;

  std::size_t freeBlocks() const noexcept { return free_.size_approx(); }
  std::uint32_t numBlocks() const noexcept { return config_.num_blocks; }
  const PipelineConfig& config() const noexcept { return config_; }
  bool usesWorkers() const noexcept { return config_.codec != CodecId::Identity; }

 private:
  struct ChannelSlot {
    std::shared_ptr<FileSink> sink;
    ChannelWriteStats stats;
  };

  void workerLoop();
  void writerLoop();
  void compressBlock(BufferBlock& block, std::vector<std::byte>& scratch);
  void writeFrame(BufferBlock& block, std::vector<std::byte>& frame);
  void recordError(std::string message);

  PipelineConfig config_;
  PipelineHooks hooks_;

  std::vector<std::unique_ptr<BufferBlock>> storage_;
  BoundedMpmcQueue<BufferBlock*> free_;
  BoundedMpmcQueue<BufferBlock*> raw_;
  BoundedMpmcQueue<BufferBlock*> write_;

  mutable std::mutex channels_mutex_;
  std::vector<ChannelSlot> channels_;

  std::atomic<bool> accepting_{true};
  std::atomic<bool> draining_{false};
  std::atomic<std::uint32_t> active_workers_{0};
  std::atomic<bool> abort_{false};
  std::atomic<bool> writer_exited_{false};
  std::atomic<std::uint64_t> codec_fallbacks_{0};

  std::mutex errors_mutex_;
  std::vector<std::string> errors_;

  std::vector<std::thread> workers_;
  std::thread writer_;
  std::mutex drain_mutex_;
  bool drained_ = false;
  DrainResult drain_result_;
};

}  // namespace blockprof
