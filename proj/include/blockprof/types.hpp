#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace blockprof {

/// One logged event. channel_id is implicit on disk (one file per channel).
struct TimestampEntry {
  std::uint32_t channel_id = 0;
  std::int32_t tag = 0;
  std::uint64_t timestamp_ns = 0;

  friend bool operator==(const TimestampEntry&, const TimestampEntry&) = default;
};

/// Per-entry dispatch strategy. Numeric values are written into trace file
/// headers and must stay stable.
enum class HandlerKind : std::uint8_t {
  Null = 0,
  DirectId = 1,
  BufferedId = 2,
  BufferedZstd = 3,
  BufferedRealtime = 4,
};

/// Block codec identifier, stored verbatim in every frame header.
enum class CodecId : std::uint8_t {
  Identity = 0,
  Zstd = 1,
  Realtime = 2,
};

constexpr bool isBuffered(HandlerKind kind) noexcept {
  return kind == HandlerKind::BufferedId || kind == HandlerKind::BufferedZstd ||
         kind == HandlerKind::BufferedRealtime;
}

constexpr bool producesFile(HandlerKind kind) noexcept { return kind != HandlerKind::Null; }

constexpr CodecId defaultCodec(HandlerKind kind) noexcept {
  switch (kind) {
    case HandlerKind::BufferedZstd:
      return CodecId::Zstd;
    case HandlerKind::BufferedRealtime:
      return CodecId::Realtime;
    default:
      return CodecId::Identity;
  }
}

std::string_view toString(HandlerKind kind) noexcept;
std::string_view toString(CodecId codec) noexcept;

// Accepts the labels produced by toString ("null", "direct-id", ...).
std::optional<HandlerKind> parseHandlerKind(std::string_view label) noexcept;
std::optional<HandlerKind> handlerKindFromByte(std::uint8_t value) noexcept;
std::optional<CodecId> codecFromByte(std::uint8_t value) noexcept;

/// Invalid configuration: bad values, unwritable output, duplicate channel.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace blockprof
