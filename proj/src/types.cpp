#include "blockprof/types.hpp"

#include <array>
#include <utility>

namespace blockprof {

namespace {

constexpr std::array<std::pair<HandlerKind, std::string_view>, 5> kHandlerLabels{{
    {HandlerKind::Null, "null"},
    {HandlerKind::DirectId, "direct-id"},
    {HandlerKind::BufferedId, "buffered-id"},
    {HandlerKind::BufferedZstd, "buffered-zstd"},
    {HandlerKind::BufferedRealtime, "buffered-realtime"},
}};

}  // namespace

std::string_view toString(HandlerKind kind) noexcept {
  for (const auto& [k, label] : kHandlerLabels) {
    if (k == kind) return label;
  }
  return "unknown";
}

std::string_view toString(CodecId codec) noexcept {
  switch (codec) {
    case CodecId::Identity:
      return "identity";
    case CodecId::Zstd:
      return "zstd";
    case CodecId::Realtime:
      return "realtime";
  }
  return "unknown";
}

std::optional<HandlerKind> parseHandlerKind(std::string_view label) noexcept {
  for (const auto& [k, l] : kHandlerLabels) {
    if (l == label) return k;
  }
  return std::nullopt;
}

std::optional<HandlerKind> handlerKindFromByte(std::uint8_t value) noexcept {
  if (value > static_cast<std::uint8_t>(HandlerKind::BufferedRealtime)) return std::nullopt;
  return static_cast<HandlerKind>(value);
}

std::optional<CodecId> codecFromByte(std::uint8_t value) noexcept {
  if (value > static_cast<std::uint8_t>(CodecId::Realtime)) return std::nullopt;
  return static_cast<CodecId>(value);
}

}  // namespace blockprof
