#include "blockprof/file_sink.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "blockprof/types.hpp"

namespace blockprof {

std::unique_ptr<FileSink> FileSink::create(const std::filesystem::path& path,
                                           std::span<const std::byte> header) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) {
    throw ConfigError("cannot create " + path.string() + ": " + std::strerror(errno));
  }
  std::unique_ptr<FileSink> sink(new FileSink(fd, path));
  if (!sink->writeAll(header, false)) {
    throw ConfigError("cannot write header to " + path.string() + ": " + sink->last_error_);
  }
  return sink;
}

FileSink::~FileSink() { close(); }

bool FileSink::write(std::span<const std::byte> bytes) noexcept { return writeAll(bytes, true); }

bool FileSink::writeAll(std::span<const std::byte> bytes, bool count) noexcept {
  if (fd_ < 0) {
    errors_.fetch_add(1, std::memory_order_relaxed);
    last_error_ = "write on closed sink";
    return false;
  }
  const std::byte* p = bytes.data();
  std::size_t left = bytes.size();
  while (left > 0) {
    if (count) write_calls_.fetch_add(1, std::memory_order_relaxed);
    const ssize_t n = ::write(fd_, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      errors_.fetch_add(1, std::memory_order_relaxed);
      last_error_ = std::strerror(errno);
      return false;
    }
    p += n;
    left -= static_cast<std::size_t>(n);
    bytes_.fetch_add(static_cast<std::uint64_t>(n), std::memory_order_relaxed);
  }
  return true;
}

bool FileSink::sync() noexcept {
  if (fd_ < 0) return true;
  if (::fsync(fd_) != 0) {
    errors_.fetch_add(1, std::memory_order_relaxed);
    last_error_ = std::strerror(errno);
    return false;
  }
  return true;
}

bool FileSink::close() noexcept {
  if (fd_ < 0) return true;
  const int rc = ::close(fd_);
  fd_ = -1;
  if (rc != 0) {
    errors_.fetch_add(1, std::memory_order_relaxed);
    last_error_ = std::strerror(errno);
    return false;
  }
  return true;
}

}  // namespace blockprof
