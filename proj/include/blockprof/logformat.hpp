#pragma once

// The .cpf trace file format. All integers are little-endian.
//
//   header : "CPF1" | version u16 | handler u8 | default_codec u8 |
//            block_capacity u32 | name_len u16 | name bytes
//   frame  : seq_no u64 | entry_count u32 | codec u8 |
//            uncompressed_len u32 | payload_len u32 | payload
//   entry  : timestamp_ns u64 | tag i32                       (12 bytes)
//
// Buffered handlers append frames in arrival order; the decoder restores
// seq_no order. DirectId files carry raw 12-byte records directly after the
// header and are read as one implicit frame sized by the file length.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockprof/types.hpp"

namespace blockprof::logformat {

inline constexpr std::size_t kEntryBytes = 12;
inline constexpr std::size_t kFrameHeaderBytes = 21;
inline constexpr std::size_t kFixedHeaderBytes = 14;
inline constexpr std::array<char, 4> kMagic{'C', 'P', 'F', '1'};
inline constexpr std::uint16_t kFormatVersion = 1;

/// Malformed trace data. offset() is the byte position in the file (or
/// input buffer) where parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset);
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

using EncodedEntry = std::array<std::byte, kEntryBytes>;

EncodedEntry encodeEntry(const TimestampEntry& entry) noexcept;
void encodeEntryTo(const TimestampEntry& entry, std::byte* out) noexcept;

/// Appends 12 * entries.size() bytes to `out`.
void encodeEntries(std::span<const TimestampEntry> entries, std::vector<std::byte>& out);

/// Exact inverse of encodeEntry. Throws FormatError unless bytes.size() == 12.
TimestampEntry decodeEntry(std::span<const std::byte> bytes, std::uint32_t channel_id = 0);

struct TraceFileHeader {
  HandlerKind handler = HandlerKind::BufferedId;
  CodecId default_codec = CodecId::Identity;
  std::uint32_t block_capacity = 0;
  std::string channel_name;

  std::size_t encodedSize() const noexcept { return kFixedHeaderBytes + channel_name.size(); }
};

std::vector<std::byte> encodeHeader(const TraceFileHeader& header);

/// Parses a header from the start of `bytes`.
TraceFileHeader decodeHeader(std::span<const std::byte> bytes);

struct FrameHeader {
  std::uint64_t seq_no = 0;
  std::uint32_t entry_count = 0;
  CodecId codec = CodecId::Identity;
  std::uint32_t uncompressed_len = 0;
  std::uint32_t payload_len = 0;
};

void appendFrameHeader(const FrameHeader& frame, std::vector<std::byte>& out);
FrameHeader decodeFrameHeader(std::span<const std::byte> bytes, std::uint64_t offset = 0);

struct FileReport {
  TraceFileHeader header;
  std::uint64_t frames = 0;
  std::uint64_t entries = 0;
  std::uint64_t raw_bytes = 0;   // 12 * entries
  std::uint64_t file_bytes = 0;  // on disk, header included
  std::uint64_t payload_bytes = 0;
  // Frames whose seq_no was lower than an earlier frame's in file order.
  std::uint64_t out_of_order_frames = 0;
  bool seq_complete = true;
};

struct DecodedTrace {
  std::vector<TimestampEntry> entries;
  FileReport report;
};

/// Decodes a whole trace file, reordering frames by seq_no. With
/// keep_entries=false only the report is filled (payloads are still
/// decompressed and checked). Throws FormatError on bad magic/version,
/// truncation, payload integrity failure, or a seq_no gap/duplicate.
DecodedTrace decodeFile(const std::filesystem::path& path, bool keep_entries = true);

struct VerifyCheck {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  FileReport file;
  bool ok() const noexcept;
};

/// Non-throwing structural and content checks used by `blockprof verify`:
/// header, frame structure and codec integrity, seq_no completeness and
/// timestamp monotonicity in decoded order.
VerifyReport verifyFile(const std::filesystem::path& path);

}  // namespace blockprof::logformat
