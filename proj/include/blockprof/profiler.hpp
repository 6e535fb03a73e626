#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blockprof/clock.hpp"
#include "blockprof/handlers.hpp"
#include "blockprof/pipeline.hpp"
#include "blockprof/types.hpp"

namespace blockprof {

/// Environment variable that overrides ProfilerConfig::output_dir.
inline constexpr const char* kOutputDirEnv = "BLOCKPROF_OUT";

struct ProfilerConfig {
  HandlerKind handler = HandlerKind::BufferedZstd;
  std::uint32_t num_blocks = 32;
  std::uint32_t block_capacity = 1'000'000;
  std::uint32_t num_compression_workers = 4;
  std::filesystem::path output_dir = ".";
  // Opened eagerly by the Profiler constructor, in order.
  std::vector<std::string> channel_names;
  int zstd_level = codecs::kDefaultZstdLevel;
  std::chrono::milliseconds drain_timeout{60'000};

  /// Throws ConfigError on a violated invariant.
  void validate() const;
};

struct ChannelFlushStats {
  std::string name;
  std::uint32_t channel_id = 0;
  std::filesystem::path path;  // empty for Null
  std::uint64_t entries_logged = 0;
  std::uint64_t entries_written = 0;
  std::uint64_t frames = 0;
  std::vector<std::uint32_t> frame_entry_counts;
  std::uint64_t bytes_written = 0;  // header included
  std::uint64_t write_ops = 0;      // data write(2) calls, header excluded
  std::uint64_t dropped = 0;
  std::uint64_t closed_handle_calls = 0;
};

struct FlushReport {
  bool ok = true;
  bool timed_out = false;
  HandlerKind handler = HandlerKind::Null;
  std::vector<ChannelFlushStats> channels;
  std::uint64_t codec_fallbacks = 0;
  std::size_t free_blocks = 0;
  std::size_t num_blocks = 0;
  std::vector<std::string> errors;

  const ChannelFlushStats* channel(std::string_view name) const noexcept;
};

class Profiler;

/// Cheap copyable reference to an open channel. Stays safe to use after the
/// profiler shuts down; logging then becomes a counted no-op.
class ChannelHandle {
 public:
  ChannelHandle() = default;

  std::uint32_t id() const noexcept { return state_->channel_id; }
  const std::string& name() const noexcept { return state_->name; }
  bool isOpen() const noexcept { return state_ && !state_->closed.load(std::memory_order_acquire); }
  std::uint64_t closedCalls() const noexcept { return state_ ? state_->closed_calls.load() : 0; }

 private:
  friend class Profiler;
  friend void logTS(const ChannelHandle&, std::int32_t) noexcept;
  explicit ChannelHandle(std::shared_ptr<HandlerState> state) : state_(std::move(state)) {}

  std::shared_ptr<HandlerState> state_;
};

/// Records one entry (current monotonic time, `tag`) on `handle`.
/// Callable from any thread; never throws.
void logTS(const ChannelHandle& handle, std::int32_t tag) noexcept;

/// Owns the channels and, for buffered handlers, the shared pipeline. One
/// trace file per channel: <output_dir>/<name>.cpf.
class Profiler {
 public:
  explicit Profiler(ProfilerConfig config, PipelineHooks hooks = {});
  ~Profiler();

  Profiler(const Profiler&) = delete;
  Profiler& operator=(const Profiler&) = delete;

  /// Channel ids are dense from 0 in open order.
  ChannelHandle openChannel(std::string_view name);
  std::optional<ChannelHandle> channel(std::string_view name) const;

  /// Seals partial blocks, drains the pipeline, closes every file.
  /// Idempotent: later calls return the first report.
  FlushReport shutdown();

  const ProfilerConfig& config() const noexcept { return config_; }
  std::filesystem::path tracePath(std::string_view channel_name) const;
  /// Null for non-buffered handlers.
  const Pipeline* pipeline() const noexcept { return pipeline_.get(); }

 private:
  ProfilerConfig config_;
  std::unique_ptr<Pipeline> pipeline_;
  std::vector<std::shared_ptr<HandlerState>> channels_;
  std::mutex mutex_;
  std::optional<FlushReport> report_;
};

}  // namespace blockprof
