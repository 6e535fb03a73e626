#include "blockprof/pipeline.hpp"

#include <algorithm>

#include "blockprof/logformat.hpp"

namespace blockprof {

namespace {

// Yield a few rounds, then sleep with exponential growth capped at 1 ms.
class Backoff {
 public:
  void pause() {
    if (spins_ < kYieldRounds) {
      ++spins_;
      std::this_thread::yield();
      return;
    }
    std::this_thread::sleep_for(sleep_);
    sleep_ = std::min(sleep_ * 2, kMaxSleep);
  }

  void reset() noexcept {
    spins_ = 0;
    sleep_ = kMinSleep;
  }

 private:
  static constexpr int kYieldRounds = 16;
  static constexpr std::chrono::microseconds kMinSleep{1};
  static constexpr std::chrono::microseconds kMaxSleep{1000};

  int spins_ = 0;
  std::chrono::microseconds sleep_ = kMinSleep;
};

// Queues are sized to the pool, so a pool block always has a slot. A failed
// push can only mean a transient race on the cell sequence; retry.
void pushInfallible(BoundedMpmcQueue<BufferBlock*>& queue, BufferBlock* block) {
  while (!queue.try_push(block)) std::this_thread::yield();
}

}  // namespace

BufferBlock::BufferBlock(std::uint32_t capacity)
    : capacity_(capacity), entries_(std::make_unique_for_overwrite<TimestampEntry[]>(capacity)) {}

void BufferBlock::reset() noexcept {
  count_ = 0;
  seq_no = 0;
  payload_state = PayloadState::Raw;
  codec = CodecId::Identity;
  payload.clear();
}

Pipeline::Pipeline(PipelineConfig config, PipelineHooks hooks)
    : config_(config),
      hooks_(std::move(hooks)),
      free_(std::max<std::uint32_t>(config.num_blocks, 1)),
      raw_(std::max<std::uint32_t>(config.num_blocks, 1)),
      write_(std::max<std::uint32_t>(config.num_blocks, 1)) {
  if (config_.num_blocks == 0) throw ConfigError("num_blocks must be positive");
  if (config_.block_capacity == 0) throw ConfigError("block_capacity must be positive");
  if (std::uint64_t{config_.block_capacity} * logformat::kEntryBytes > UINT32_MAX) {
    throw ConfigError("block_capacity too large for a 32-bit frame length");
  }
  if (usesWorkers() && config_.num_workers == 0) {
    throw ConfigError("num_compression_workers must be positive");
  }

  storage_.reserve(config_.num_blocks);
  for (std::uint32_t i = 0; i < config_.num_blocks; ++i) {
    storage_.push_back(std::make_unique<BufferBlock>(config_.block_capacity));
    pushInfallible(free_, storage_.back().get());
  }

  if (usesWorkers()) {
    active_workers_.store(config_.num_workers, std::memory_order_release);
    workers_.reserve(config_.num_workers);
    for (std::uint32_t i = 0; i < config_.num_workers; ++i) workers_.emplace_back([this] { workerLoop(); });
  }
  writer_ = std::thread([this] { writerLoop(); });
}

Pipeline::~Pipeline() { drain(); }

void Pipeline::attachSink(std::uint32_t channel_id, std::shared_ptr<FileSink> sink) {
  std::lock_guard lock(channels_mutex_);
  if (channels_.size() <= channel_id) channels_.resize(channel_id + 1);
  channels_[channel_id].sink = std::move(sink);
}

BufferBlock* Pipeline::acquireEmpty() {
  Backoff backoff;
  for (;;) {
    if (!accepting_.load(std::memory_order_acquire)) throw PipelineStopped();
    if (auto block = free_.try_pop()) return *block;
    backoff.pause();
  }
}

void Pipeline::releaseEmpty(BufferBlock* block) {
  block->reset();
  pushInfallible(free_, block);
}

void Pipeline::sealAndSubmit(BufferBlock* block) {
  if (block->empty()) throw std::logic_error("sealAndSubmit: empty block");
  block->payload_state = PayloadState::Raw;
  pushInfallible(usesWorkers() ? raw_ : write_, block);
}

void Pipeline::compressBlock(BufferBlock& block, std::vector<std::byte>& scratch) {
  if (hooks_.before_compress) hooks_.before_compress(block);
  scratch.clear();
  logformat::encodeEntries(block.entries(), scratch);
  try {
    if (hooks_.compressor) {
      hooks_.compressor(config_.codec, scratch, block.payload);
    } else {
      codecs::compressInto(config_.codec, scratch, block.payload, config_.zstd_level);
    }
    block.codec = config_.codec;
  } catch (const std::exception&) {
    // Keep the data: ship the block uncompressed.
    block.payload.assign(scratch.begin(), scratch.end());
    block.codec = CodecId::Identity;
    codec_fallbacks_.fetch_add(1, std::memory_order_relaxed);
  }
  block.payload_state = PayloadState::Compressed;
}

void Pipeline::workerLoop() {
  std::vector<std::byte> scratch;
  Backoff backoff;
  for (;;) {
    // Read the flag before popping: a failed pop after draining_ means the
    // raw queue is empty for good.
    const bool draining = draining_.load(std::memory_order_acquire);
    if (auto block = raw_.try_pop()) {
      compressBlock(**block, scratch);
      pushInfallible(write_, *block);
      backoff.reset();
      continue;
    }
    if (draining || abort_.load(std::memory_order_relaxed)) break;
    backoff.pause();
  }
  active_workers_.fetch_sub(1, std::memory_order_release);
}

void Pipeline::writeFrame(BufferBlock& block, std::vector<std::byte>& frame) {
  frame.clear();
  logformat::FrameHeader header{
      .seq_no = block.seq_no,
      .entry_count = block.count(),
      .codec = CodecId::Identity,
      .uncompressed_len = static_cast<std::uint32_t>(block.count() * logformat::kEntryBytes),
      .payload_len = 0,
  };
  if (block.payload_state == PayloadState::Raw) {
    header.payload_len = header.uncompressed_len;
    logformat::appendFrameHeader(header, frame);
    logformat::encodeEntries(block.entries(), frame);
  } else {
    header.codec = block.codec;
    header.payload_len = static_cast<std::uint32_t>(block.payload.size());
    logformat::appendFrameHeader(header, frame);
    frame.insert(frame.end(), block.payload.begin(), block.payload.end());
  }

  std::shared_ptr<FileSink> sink;
  {
    std::lock_guard lock(channels_mutex_);
    if (block.channel_id < channels_.size()) sink = channels_[block.channel_id].sink;
  }
  const bool written = sink && sink->write(frame);
  if (!written) {
    recordError("channel " + std::to_string(block.channel_id) + ": frame seq " +
                std::to_string(block.seq_no) + " not written: " +
                (sink ? sink->lastError() : std::string("no sink attached")));
  }

  std::lock_guard lock(channels_mutex_);
  if (channels_.size() <= block.channel_id) channels_.resize(block.channel_id + 1);
  auto& stats = channels_[block.channel_id].stats;
  if (written) {
    stats.entries += block.count();
    stats.frames += 1;
    stats.payload_bytes += header.payload_len;
    stats.frame_entry_counts.push_back(block.count());
  } else {
    stats.write_failures += 1;
  }
}

void Pipeline::writerLoop() {
  std::vector<std::byte> frame;
  Backoff backoff;
  for (;;) {
    const bool finished = draining_.load(std::memory_order_acquire) &&
                          active_workers_.load(std::memory_order_acquire) == 0;
    if (auto block = write_.try_pop()) {
      writeFrame(**block, frame);
      (*block)->reset();
      pushInfallible(free_, *block);
      backoff.reset();
      continue;
    }
    if (finished || abort_.load(std::memory_order_relaxed)) break;
    backoff.pause();
  }

  std::vector<std::shared_ptr<FileSink>> sinks;
  {
    std::lock_guard lock(channels_mutex_);
    for (const auto& slot : channels_) {
      if (slot.sink) sinks.push_back(slot.sink);
    }
  }
  for (const auto& sink : sinks) {
    if (!sink->sync() || !sink->close()) {
      recordError("closing " + sink->path().string() + ": " + sink->lastError());
    }
  }
  writer_exited_.store(true, std::memory_order_release);
}

void Pipeline::recordError(std::string message) {
  std::lock_guard lock(errors_mutex_);
  errors_.push_back(std::move(message));
}

DrainResult Pipeline::drain() {
  std::lock_guard guard(drain_mutex_);
  if (drained_) return drain_result_;

  accepting_.store(false, std::memory_order_release);
  draining_.store(true, std::memory_order_release);

  DrainResult result;
  const auto deadline = std::chrono::steady_clock::now() + config_.drain_timeout;
  while (!writer_exited_.load(std::memory_order_acquire)) {
    if (std::chrono::steady_clock::now() >= deadline) {
      abort_.store(true, std::memory_order_relaxed);
      result.timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::microseconds(200));
  }
  for (auto& w : workers_) w.join();
  if (writer_.joinable()) writer_.join();

  result.free_blocks = free_.size_approx();
  result.codec_fallbacks = codec_fallbacks_.load();
  {
    std::lock_guard lock(errors_mutex_);
    result.errors = errors_;
  }
  if (result.free_blocks != config_.num_blocks) {
    const std::size_t missing = config_.num_blocks - result.free_blocks;
    result.errors.push_back(std::to_string(missing) + " of " + std::to_string(config_.num_blocks) +
                            " blocks not returned to the pool (raw queue " +
                            std::to_string(raw_.size_approx()) + ", write queue " +
                            std::to_string(write_.size_approx()) + ")");
  }
  if (result.timed_out) {
    result.errors.push_back("drain timed out after " + std::to_string(config_.drain_timeout.count()) +
                            " ms; entries in unwritten blocks are lost");
  }
  result.ok = result.errors.empty();

  drain_result_ = result;
  drained_ = true;
  return drain_result_;
}

ChannelWriteStats Pipeline::channelStats(std::uint32_t channel_id) const {
  std::lock_guard lock(channels_mutex_);
  if (channel_id >= channels_.size()) return {};
  return channels_[channel_id].stats;
}

}  // namespace blockprof
