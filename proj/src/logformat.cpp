#include "blockprof/logformat.hpp"

#include <algorithm>
#include <fstream>
#include <optional>

#include "blockprof/codecs.hpp"

namespace blockprof::logformat {

namespace {

template <typename T>
void putLe(std::byte* out, T value) noexcept {
  using U = std::make_unsigned_t<T>;
  auto v = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out[i] = static_cast<std::byte>(v & 0xFFu);
    v = static_cast<U>(v >> 8);
  }
}

template <typename T>
void appendLe(std::vector<std::byte>& out, T value) {
  const std::size_t at = out.size();
  out.resize(at + sizeof(T));
  putLe(out.data() + at, value);
}

template <typename T>
T getLe(const std::byte* in) noexcept {
  using U = std::make_unsigned_t<T>;
  U v = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) {
    v = static_cast<U>((v << 8) | static_cast<U>(std::to_integer<std::uint8_t>(in[i])));
  }
  return static_cast<T>(v);
}

struct FrameInfo {
  std::uint64_t seq_no = 0;
  std::uint64_t offset = 0;
  std::uint32_t entry_count = 0;
  std::uint64_t first_ts = 0;
  std::uint64_t last_ts = 0;
  // Index within the frame of the first timestamp that decreases, if any.
  std::optional<std::uint32_t> first_decrease;
  std::vector<TimestampEntry> entries;
};

class FileReader {
 public:
  explicit FileReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw FormatError("cannot open " + path.string(), 0);
    std::error_code ec;
    size_ = std::filesystem::file_size(path, ec);
    if (ec) throw FormatError("cannot stat " + path.string() + ": " + ec.message(), 0);
  }

  void read(std::span<std::byte> out, const char* what) {
    if (size_ - offset_ < out.size()) {
      throw FormatError(std::string("truncated ") + what, offset_);
    }
    in_.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!in_) throw FormatError(std::string("read error in ") + what, offset_);
    offset_ += out.size();
  }

  std::uint64_t offset() const noexcept { return offset_; }
  std::uint64_t size() const noexcept { return size_; }
  std::uint64_t remaining() const noexcept { return size_ - offset_; }

 private:
  std::ifstream in_;
  std::uint64_t size_ = 0;
  std::uint64_t offset_ = 0;
};

TraceFileHeader readHeader(FileReader& reader) {
  std::vector<std::byte> buf(kFixedHeaderBytes);
  reader.read(buf, "header");
  const auto name_len = getLe<std::uint16_t>(buf.data() + 12);
  buf.resize(kFixedHeaderBytes + name_len);
  reader.read(std::span(buf).subspan(kFixedHeaderBytes), "channel name");
  return decodeHeader(buf);
}

void summarizeEntries(FrameInfo& frame, std::span<const TimestampEntry> entries) {
  if (entries.empty()) return;
  frame.first_ts = entries.front().timestamp_ns;
  frame.last_ts = entries.back().timestamp_ns;
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].timestamp_ns < entries[i - 1].timestamp_ns) {
      frame.first_decrease = static_cast<std::uint32_t>(i);
      break;
    }
  }
}

void decodePayload(std::span<const std::byte> raw, std::vector<TimestampEntry>& out) {
  out.resize(raw.size() / kEntryBytes);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = decodeEntry(raw.subspan(i * kEntryBytes, kEntryBytes));
  }
}

// DirectId: records follow the header up to end of file.
std::vector<FrameInfo> scanDirect(FileReader& reader, FileReport& report, bool keep_entries) {
  const std::uint64_t body = reader.remaining();
  if (body % kEntryBytes != 0) {
    throw FormatError("truncated record", reader.offset() + body / kEntryBytes * kEntryBytes);
  }
  std::vector<FrameInfo> frames;
  if (body == 0) return frames;

  FrameInfo frame;
  frame.offset = reader.offset();
  frame.entry_count = static_cast<std::uint32_t>(body / kEntryBytes);

  constexpr std::size_t kChunkEntries = 1 << 16;
  std::vector<std::byte> chunk;
  std::vector<TimestampEntry> decoded;
  std::uint64_t left = body / kEntryBytes;
  bool first = true;
  while (left > 0) {
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(left, kChunkEntries));
    chunk.resize(n * kEntryBytes);
    reader.read(chunk, "record");
    decodePayload(chunk, decoded);
    for (std::size_t i = 0; i < decoded.size(); ++i) {
      const auto ts = decoded[i].timestamp_ns;
      if (first) {
        frame.first_ts = ts;
        first = false;
      } else if (ts < frame.last_ts && !frame.first_decrease) {
        frame.first_decrease = static_cast<std::uint32_t>(frame.entry_count - left + i);
      }
      frame.last_ts = ts;
    }
    if (keep_entries) frame.entries.insert(frame.entries.end(), decoded.begin(), decoded.end());
    left -= n;
  }
  report.payload_bytes = body;
  frames.push_back(std::move(frame));
  return frames;
}

std::vector<FrameInfo> scanFrames(FileReader& reader, FileReport& report, bool keep_entries) {
  std::vector<FrameInfo> frames;
  std::vector<std::byte> header_buf(kFrameHeaderBytes);
  std::vector<std::byte> payload;
  std::vector<std::byte> raw;
  std::vector<TimestampEntry> decoded;
  std::optional<std::uint64_t> max_seq;

  while (reader.remaining() > 0) {
    const std::uint64_t at = reader.offset();
    reader.read(header_buf, "frame header");
    const FrameHeader fh = decodeFrameHeader(header_buf, at);
    payload.resize(fh.payload_len);
    reader.read(payload, "frame payload");
    try {
      codecs::decompressInto(fh.codec, payload, fh.uncompressed_len, raw);
    } catch (const codecs::CodecError& e) {
      throw FormatError(std::string("payload integrity failure: ") + e.what(), at);
    }
    FrameInfo frame;
    frame.seq_no = fh.seq_no;
    frame.offset = at;
    frame.entry_count = fh.entry_count;
    decodePayload(raw, decoded);
    summarizeEntries(frame, decoded);
    if (keep_entries) frame.entries = decoded;

    if (max_seq && fh.seq_no < *max_seq) ++report.out_of_order_frames;
    max_seq = std::max(max_seq.value_or(0), fh.seq_no);
    report.payload_bytes += fh.payload_len;
    frames.push_back(std::move(frame));
  }
  std::ranges::sort(frames, {}, &FrameInfo::seq_no);
  return frames;
}

struct Scan {
  FileReport report;
  std::vector<FrameInfo> frames;  // sorted by seq_no
};

Scan scanBody(FileReader& reader, TraceFileHeader header, bool keep_entries) {
  Scan scan;
  scan.report.header = std::move(header);
  scan.report.file_bytes = reader.size();
  scan.frames = scan.report.header.handler == HandlerKind::DirectId
                    ? scanDirect(reader, scan.report, keep_entries)
                    : scanFrames(reader, scan.report, keep_entries);
  scan.report.frames = scan.frames.size();
  for (const auto& f : scan.frames) scan.report.entries += f.entry_count;
  scan.report.raw_bytes = scan.report.entries * kEntryBytes;
  return scan;
}

// First seq_no problem in sorted frames, if any.
std::optional<FormatError> sequenceProblem(const std::vector<FrameInfo>& frames) {
  std::uint64_t expected = 0;
  for (const auto& f : frames) {
    if (f.seq_no < expected) {
      return FormatError("duplicate frame seq " + std::to_string(f.seq_no), f.offset);
    }
    if (f.seq_no > expected) {
      return FormatError("missing frame seq " + std::to_string(expected), f.offset);
    }
    ++expected;
  }
  return std::nullopt;
}

}  // namespace

FormatError::FormatError(const std::string& what, std::uint64_t offset)
    : std::runtime_error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}

void encodeEntryTo(const TimestampEntry& entry, std::byte* out) noexcept {
  putLe<std::uint64_t>(out, entry.timestamp_ns);
  putLe<std::int32_t>(out + 8, entry.tag);
}

EncodedEntry encodeEntry(const TimestampEntry& entry) noexcept {
  EncodedEntry bytes{};
  encodeEntryTo(entry, bytes.data());
  return bytes;
}

void encodeEntries(std::span<const TimestampEntry> entries, std::vector<std::byte>& out) {
  const std::size_t at = out.size();
  out.resize(at + entries.size() * kEntryBytes);
  std::byte* p = out.data() + at;
  for (const auto& e : entries) {
    encodeEntryTo(e, p);
    p += kEntryBytes;
  }
}

TimestampEntry decodeEntry(std::span<const std::byte> bytes, std::uint32_t channel_id) {
  if (bytes.size() != kEntryBytes) {
    throw FormatError("entry must be 12 bytes, got " + std::to_string(bytes.size()), bytes.size());
  }
  return TimestampEntry{
      .channel_id = channel_id,
      .tag = getLe<std::int32_t>(bytes.data() + 8),
      .timestamp_ns = getLe<std::uint64_t>(bytes.data()),
  };
}

std::vector<std::byte> encodeHeader(const TraceFileHeader& header) {
  if (header.channel_name.size() > 0xFFFF) throw ConfigError("channel name longer than 65535 bytes");
  std::vector<std::byte> out;
  out.reserve(header.encodedSize());
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  appendLe<std::uint16_t>(out, kFormatVersion);
  appendLe<std::uint8_t>(out, static_cast<std::uint8_t>(header.handler));
  appendLe<std::uint8_t>(out, static_cast<std::uint8_t>(header.default_codec));
  appendLe<std::uint32_t>(out, header.block_capacity);
  appendLe<std::uint16_t>(out, static_cast<std::uint16_t>(header.channel_name.size()));
  for (char c : header.channel_name) out.push_back(static_cast<std::byte>(c));
  return out;
}

TraceFileHeader decodeHeader(std::span<const std::byte> bytes) {
  if (bytes.size() < kMagic.size()) throw FormatError("truncated header", bytes.size());
  for (std::size_t i = 0; i < kMagic.size(); ++i) {
    if (bytes[i] != static_cast<std::byte>(kMagic[i])) throw FormatError("bad magic", 0);
  }
  if (bytes.size() < kFixedHeaderBytes) throw FormatError("truncated header", bytes.size());
  const auto version = getLe<std::uint16_t>(bytes.data() + 4);
  if (version != kFormatVersion) {
    throw FormatError("unsupported version " + std::to_string(version), 4);
  }
  const auto handler = handlerKindFromByte(getLe<std::uint8_t>(bytes.data() + 6));
  if (!handler) throw FormatError("unknown handler kind", 6);
  const auto codec = codecFromByte(getLe<std::uint8_t>(bytes.data() + 7));
  if (!codec) throw FormatError("unknown default codec", 7);

  TraceFileHeader header;
  header.handler = *handler;
  header.default_codec = *codec;
  header.block_capacity = getLe<std::uint32_t>(bytes.data() + 8);
  const auto name_len = getLe<std::uint16_t>(bytes.data() + 12);
  if (bytes.size() < kFixedHeaderBytes + name_len) {
    throw FormatError("truncated channel name", bytes.size());
  }
  const auto* name = reinterpret_cast<const char*>(bytes.data() + kFixedHeaderBytes);
  header.channel_name.assign(name, name_len);
  return header;
}

void appendFrameHeader(const FrameHeader& frame, std::vector<std::byte>& out) {
  appendLe<std::uint64_t>(out, frame.seq_no);
  appendLe<std::uint32_t>(out, frame.entry_count);
  appendLe<std::uint8_t>(out, static_cast<std::uint8_t>(frame.codec));
  appendLe<std::uint32_t>(out, frame.uncompressed_len);
  appendLe<std::uint32_t>(out, frame.payload_len);
}

FrameHeader decodeFrameHeader(std::span<const std::byte> bytes, std::uint64_t offset) {
  if (bytes.size() < kFrameHeaderBytes) throw FormatError("truncated frame header", offset);
  FrameHeader fh;
  fh.seq_no = getLe<std::uint64_t>(bytes.data());
  fh.entry_count = getLe<std::uint32_t>(bytes.data() + 8);
  const auto codec = codecFromByte(getLe<std::uint8_t>(bytes.data() + 12));
  if (!codec) throw FormatError("unknown codec id in frame", offset + 12);
  fh.codec = *codec;
  fh.uncompressed_len = getLe<std::uint32_t>(bytes.data() + 13);
  fh.payload_len = getLe<std::uint32_t>(bytes.data() + 17);
  if (fh.entry_count == 0) throw FormatError("empty frame", offset);
  if (static_cast<std::uint64_t>(fh.entry_count) * kEntryBytes != fh.uncompressed_len) {
    throw FormatError("uncompressed_len does not match entry_count", offset + 13);
  }
  return fh;
}

DecodedTrace decodeFile(const std::filesystem::path& path, bool keep_entries) {
  FileReader reader(path);
  Scan scan = scanBody(reader, readHeader(reader), keep_entries);
  if (auto problem = sequenceProblem(scan.frames)) throw *problem;

  DecodedTrace out;
  out.report = std::move(scan.report);
  if (keep_entries) {
    out.entries.reserve(out.report.entries);
    for (auto& f : scan.frames) {
      out.entries.insert(out.entries.end(), f.entries.begin(), f.entries.end());
    }
  }
  return out;
}

bool VerifyReport::ok() const noexcept {
  return std::ranges::all_of(checks, &VerifyCheck::passed);
}

VerifyReport verifyFile(const std::filesystem::path& path) {
  VerifyReport out;
  std::optional<FileReader> reader;
  TraceFileHeader header;
  try {
    reader.emplace(path);
    header = readHeader(*reader);
    out.checks.push_back({"header", true,
                          "magic CPF1, version 1, handler " + std::string(toString(header.handler)) +
                              ", channel '" + header.channel_name + "'"});
  } catch (const FormatError& e) {
    out.checks.push_back({"header", false, e.what()});
    return out;
  }

  Scan scan;
  try {
    scan = scanBody(*reader, header, false);
    out.checks.push_back({"frames", true,
                          std::to_string(scan.report.frames) + " frames, " +
                              std::to_string(scan.report.entries) +
                              " entries, codec payloads decompress to their declared length"});
  } catch (const FormatError& e) {
    out.checks.push_back({"frames", false, e.what()});
    return out;
  }
  out.file = scan.report;

  if (auto problem = sequenceProblem(scan.frames)) {
    out.file.seq_complete = false;
    out.checks.push_back({"seq_no", false, problem->what()});
  } else {
    out.checks.push_back({"seq_no", true,
                          "seq_no 0.." + std::to_string(scan.frames.empty() ? 0 : scan.frames.size() - 1) +
                              " complete"});
  }

  VerifyCheck mono{"monotonic", true, "timestamps non-decreasing in decoded order"};
  std::uint64_t index = 0;
  std::optional<std::uint64_t> prev_last;
  for (const auto& f : scan.frames) {
    if (f.first_decrease) {
      mono = {"monotonic", false,
              "timestamp decreases at entry " + std::to_string(index + *f.first_decrease) +
                  " (frame seq " + std::to_string(f.seq_no) + ")"};
      break;
    }
    if (prev_last && f.entry_count > 0 && f.first_ts < *prev_last) {
      mono = {"monotonic", false,
              "timestamp decreases at entry " + std::to_string(index) + " (start of frame seq " +
                  std::to_string(f.seq_no) + ")"};
      break;
    }
    if (f.entry_count > 0) prev_last = f.last_ts;
    index += f.entry_count;
  }
  out.checks.push_back(std::move(mono));
  return out;
}

}  // namespace blockprof::logformat
