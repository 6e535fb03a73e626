#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>

namespace blockprof {

/// Unbuffered append-only file: every write() is handed straight to the
/// kernel with write(2). Counts data write calls so tests can bound the
/// number of system calls a handler issues.
class FileSink {
 public:
  /// Creates (truncating) `path` and writes `header`. The header write is
  /// not counted in dataWriteCalls(). Throws ConfigError on failure.
  static std::unique_ptr<FileSink> create(const std::filesystem::path& path,
                                          std::span<const std::byte> header);

  ~FileSink();
  FileSink(const FileSink&) = delete;
  FileSink& operator=(const FileSink&) = delete;

  /// Writes all of `bytes`; one or more write(2) calls. Returns false and
  /// records the errno text on failure. Never throws.
  bool write(std::span<const std::byte> bytes) noexcept;

  bool sync() noexcept;
  bool close() noexcept;
  bool isOpen() const noexcept { return fd_ >= 0; }

  std::uint64_t dataWriteCalls() const noexcept { return write_calls_.load(std::memory_order_relaxed); }
  std::uint64_t bytesWritten() const noexcept { return bytes_.load(std::memory_order_relaxed); }
  std::uint64_t errors() const noexcept { return errors_.load(std::memory_order_relaxed); }
  const std::string& lastError() const noexcept { return last_error_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  FileSink(int fd, std::filesystem::path path) : fd_(fd), path_(std::move(path)) {}
  bool writeAll(std::span<const std::byte> bytes, bool count) noexcept;

  int fd_ = -1;
  std::filesystem::path path_;
  std::atomic<std::uint64_t> write_calls_{0};
  std::atomic<std::uint64_t> bytes_{0};
  std::atomic<std::uint64_t> errors_{0};
  std::string last_error_;
};

}  // namespace blockprof
