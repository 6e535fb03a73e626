#include "blockprof/profiler.hpp"

#include <cstdio>
#include <cstdlib>

#include "blockprof/logformat.hpp"

namespace blockprof {

namespace {

void noteClosed(HandlerState& state) noexcept {
  state.closed_calls.fetch_add(1, std::memory_order_relaxed);
  if (!state.closed_reported.exchange(true, std::memory_order_relaxed)) {
    std::fprintf(stderr, "blockprof: logTS on closed channel '%s' ignored\n", state.name.c_str());
  }
}

}  // namespace

void ProfilerConfig::validate() const {
  if (num_blocks == 0) throw ConfigError("num_blocks must be positive");
  if (block_capacity == 0) throw ConfigError("block_capacity must be at least 1");
  if (num_compression_workers == 0) throw ConfigError("num_compression_workers must be positive");
  if (num_blocks < num_compression_workers + 2) {
    throw ConfigError("num_blocks (" + std::to_string(num_blocks) +
                      ") must be at least num_compression_workers + 2 (" +
                      std::to_string(num_compression_workers + 2) + ")");
  }
}

const ChannelFlushStats* FlushReport::channel(std::string_view name) const noexcept {
  for (const auto& c : channels) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

void logTS(const ChannelHandle& handle, std::int32_t tag) noexcept {
  HandlerState* state = handle.state_.get();
  if (state == nullptr) return;
  if (state->kind == HandlerKind::Null) {
    if (state->closed.load(std::memory_order_relaxed)) {
      noteClosed(*state);
      return;
    }
    handleNull(TimestampEntry{state->channel_id, tag, now_ns()});
    return;
  }
  std::lock_guard guard(state->lock);
  if (state->closed.load(std::memory_order_relaxed)) {
    noteClosed(*state);
    return;
  }
  // Stamped inside the critical section so file order is timestamp order.
  dispatch(TimestampEntry{state->channel_id, tag, now_ns()}, *state);
}

Profiler::Profiler(ProfilerConfig config, PipelineHooks hooks) : config_(std::move(config)) {
  config_.validate();
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    config_.output_dir = env;
  }
  if (producesFile(config_.handler)) {
    std::error_code ec;
    std::filesystem::create_directories(config_.output_dir, ec);
    if (ec || !std::filesystem::is_directory(config_.output_dir)) {
      throw ConfigError("output directory " + config_.output_dir.string() + " is not usable" +
                        (ec ? ": " + ec.message() : std::string()));
    }
  }
  if (isBuffered(config_.handler)) {
    pipeline_ = std::make_unique<Pipeline>(
        PipelineConfig{
            .num_blocks = config_.num_blocks,
            .block_capacity = config_.block_capacity,
            .num_workers = config_.num_compression_workers,
            .codec = defaultCodec(config_.handler),
            .zstd_level = config_.zstd_level,
            .drain_timeout = config_.drain_timeout,
        },
        std::move(hooks));
  }
  for (const auto& name : config_.channel_names) openChannel(name);
}

Profiler::~Profiler() { shutdown(); }

std::filesystem::path Profiler::tracePath(std::string_view channel_name) const {
  return config_.output_dir / (std::string(channel_name) + ".cpf");
}

ChannelHandle Profiler::openChannel(std::string_view name) {
  std::lock_guard lock(mutex_);
  if (report_) throw ConfigError("profiler is shut down");
  if (name.empty()) throw ConfigError("channel name must be non-empty");
  if (name.find('/') != std::string_view::npos || name.find('\0') != std::string_view::npos) {
    throw ConfigError("channel name '" + std::string(name) + "' is not a valid file name");
  }
  for (const auto& c : channels_) {
    if (c->name == name) throw ConfigError("duplicate channel name '" + std::string(name) + "'");
  }

  auto state = std::make_shared<HandlerState>();
  state->kind = config_.handler;
  state->channel_id = static_cast<std::uint32_t>(channels_.size());
  state->name = std::string(name);

  if (producesFile(config_.handler)) {
    const logformat::TraceFileHeader header{
        .handler = config_.handler,
        .default_codec = defaultCodec(config_.handler),
        .block_capacity = isBuffered(config_.handler) ? config_.block_capacity : 0,
        .channel_name = state->name,
    };
    state->sink = FileSink::create(tracePath(name), logformat::encodeHeader(header));
  }
  if (pipeline_) {
    state->pipeline = pipeline_.get();
    pipeline_->attachSink(state->channel_id, state->sink);
  }
  channels_.push_back(state);
  return ChannelHandle(std::move(state));
}

std::optional<ChannelHandle> Profiler::channel(std::string_view name) const {
  for (const auto& c : channels_) {
    if (c->name == name) return ChannelHandle(c);
  }
  return std::nullopt;
}

FlushReport Profiler::shutdown() {
  std::lock_guard lock(mutex_);
  if (report_) return *report_;

  FlushReport report;
  report.handler = config_.handler;

  for (auto& state : channels_) {
    std::lock_guard guard(state->lock);
    state->closed.store(true, std::memory_order_release);
    if (state->pipeline != nullptr) flushFillingBlock(*state);
  }

  if (pipeline_) {
    DrainResult drained = pipeline_->drain();
    report.timed_out = drained.timed_out;
    report.codec_fallbacks = drained.codec_fallbacks;
    report.free_blocks = drained.free_blocks;
    report.num_blocks = pipeline_->numBlocks();
    report.errors = std::move(drained.errors);
  }

  for (auto& state : channels_) {
    ChannelFlushStats stats;
    stats.name = state->name;
    stats.channel_id = state->channel_id;
    stats.entries_logged = state->logged;
    stats.dropped = state->dropped;
    stats.closed_handle_calls = state->closed_calls.load();

    if (state->sink) {
      if (!isBuffered(state->kind)) {
        if (!state->sink->sync() || !state->sink->close()) {
          report.errors.push_back("closing " + state->sink->path().string() + ": " +
                                  state->sink->lastError());
        }
      }
      stats.path = state->sink->path();
      stats.bytes_written = state->sink->bytesWritten();
      stats.write_ops = state->sink->dataWriteCalls();
    }

    if (pipeline_) {
      ChannelWriteStats written = pipeline_->channelStats(state->channel_id);
      stats.entries_written = written.entries;
      stats.frames = written.frames;
      stats.frame_entry_counts = std::move(written.frame_entry_counts);
    } else if (state->kind == HandlerKind::DirectId) {
      stats.entries_written = state->logged - state->dropped;
      stats.frames = stats.entries_written > 0 ? 1 : 0;
      if (stats.entries_written > 0) stats.frame_entry_counts = {static_cast<std::uint32_t>(stats.entries_written)};
    }

    if (producesFile(state->kind) && stats.entries_written != stats.entries_logged) {
      report.errors.push_back("channel '" + stats.name + "': logged " +
                              std::to_string(stats.entries_logged) + " entries, wrote " +
                              std::to_string(stats.entries_written));
    }
    if (stats.dropped > 0) {
      report.errors.push_back("channel '" + stats.name + "': " + std::to_string(stats.dropped) +
                              " entries dropped");
    }
    report.channels.push_back(std::move(stats));
  }

  report.ok = report.errors.empty();
  report_ = report;
  return report;
}

}  // namespace blockprof
