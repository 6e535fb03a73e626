#include <gtest/gtest.h>

#include <array>
#include <limits>
#include <random>

#include "blockprof/codecs.hpp"
#include "blockprof/logformat.hpp"
#include "test_support.hpp"

namespace blockprof {
namespace {

using logformat::FormatError;
using testing::ByteWriter;
using testing::Rec;
using testing::TempDir;

std::array<std::uint8_t, 12> asU8(const logformat::EncodedEntry& e) {
  std::array<std::uint8_t, 12> out{};
  for (std::size_t i = 0; i < 12; ++i) out[i] = std::to_integer<std::uint8_t>(e[i]);
  return out;
}

// Independent oracle: byte i of the timestamp is (ts >> 8i) & 0xFF, the tag
// is its two's-complement 32-bit pattern.
std::array<std::uint8_t, 12> layoutOracle(std::uint64_t ts, std::int32_t tag) {
  std::array<std::uint8_t, 12> out{};
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>((ts >> (8 * i)) & 0xFF);
  const std::uint32_t bits = tag < 0 ? static_cast<std::uint32_t>(0x100000000ll + tag) : static_cast<std::uint32_t>(tag);
  for (int i = 0; i < 4; ++i) out[8 + i] = static_cast<std::uint8_t>((bits >> (8 * i)) & 0xFF);
  return out;
}

TEST(EncodeEntry, ZeroEntryIsTwelveZeroBytes) {
  EXPECT_EQ(asU8(logformat::encodeEntry({0, 0, 0})), (std::array<std::uint8_t, 12>{}));
}

TEST(EncodeEntry, OneOneLayout) {
  const std::array<std::uint8_t, 12> expected{1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0};
  EXPECT_EQ(layoutOracle(1, 1), expected);
  EXPECT_EQ(asU8(logformat::encodeEntry({0, 1, 1})), expected);
}

TEST(EncodeEntry, AllOnesForMinusOneAndMaxTimestamp) {
  std::array<std::uint8_t, 12> expected{};
  expected.fill(0xFF);
  const auto max_ts = std::numeric_limits<std::uint64_t>::max();
  EXPECT_EQ(layoutOracle(max_ts, -1), expected);
  EXPECT_EQ(asU8(logformat::encodeEntry({0, -1, max_ts})), expected);
}

TEST(EncodeEntry, MatchesLayoutOracleOnRandomEntries) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10'000; ++i) {
    const std::uint64_t ts = rng();
    const auto tag = static_cast<std::int32_t>(static_cast<std::uint32_t>(rng()));
    ASSERT_EQ(asU8(logformat::encodeEntry({0, tag, ts})), layoutOracle(ts, tag)) << ts << " " << tag;
  }
}

TEST(DecodeEntry, RoundTripsRandomEntries) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10'000; ++i) {
    const TimestampEntry e{0, static_cast<std::int32_t>(static_cast<std::uint32_t>(rng())), rng()};
    const auto bytes = logformat::encodeEntry(e);
    ASSERT_EQ(logformat::decodeEntry(bytes), e);
  }
}

TEST(DecodeEntry, TwelveZeroBytes) {
  const std::array<std::byte, 12> zeros{};
  EXPECT_EQ(logformat::decodeEntry(zeros), (TimestampEntry{0, 0, 0}));
}

TEST(DecodeEntry, ShortInputIsFormatError) {
  const std::array<std::byte, 11> eleven{};
  EXPECT_THROW(logformat::decodeEntry(eleven), FormatError);
}

TEST(Header, EncodesFieldByField) {
  ByteWriter expected;
  testing::putHeader(expected, 3, 1, 1'000'000, "ch_start");
  const auto got = logformat::encodeHeader({HandlerKind::BufferedZstd, CodecId::Zstd, 1'000'000, "ch_start"});
  EXPECT_EQ(got, expected.bytes());
  EXPECT_EQ(got.size(), 14u + 8u);

  const auto back = logformat::decodeHeader(got);
  EXPECT_EQ(back.handler, HandlerKind::BufferedZstd);
  EXPECT_EQ(back.default_codec, CodecId::Zstd);
  EXPECT_EQ(back.block_capacity, 1'000'000u);
  EXPECT_EQ(back.channel_name, "ch_start");
}

TEST(Header, RejectsBadMagicAndVersion) {
  ByteWriter bad_magic;
  bad_magic.str("CPF2").u16(1).u8(2).u8(0).u32(4).u16(0);
  try {
    logformat::decodeHeader(bad_magic.bytes());
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  ByteWriter bad_version;
  bad_version.str("CPF1").u16(2).u8(2).u8(0).u32(4).u16(0);
  try {
    logformat::decodeHeader(bad_version.bytes());
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
}

TEST(FrameHeader, TwentyOneBytesLittleEndian) {
  std::vector<std::byte> out;
  logformat::appendFrameHeader({7, 3, CodecId::Realtime, 36, 20}, out);
  ByteWriter expected;
  expected.u64(7).u32(3).u8(2).u32(36).u32(20);
  EXPECT_EQ(out, expected.bytes());
  EXPECT_EQ(out.size(), logformat::kFrameHeaderBytes);
}

TEST(FrameHeader, RejectsLengthMismatch) {
  ByteWriter w;
  w.u64(0).u32(3).u8(0).u32(35).u32(35);
  EXPECT_THROW(logformat::decodeFrameHeader(w.bytes()), FormatError);
}

TEST(DecodeFile, FiveEntriesInLoggingOrder) {
  TempDir dir;
  ByteWriter w;
  testing::putHeader(w, 2, 0, 8, "c");
  testing::putFrame(w, 0, {{10, 5}, {11, 4}, {12, 3}, {13, 2}, {14, 1}});
  testing::writeBytes(dir / "c.cpf", w.bytes());

  const auto trace = logformat::decodeFile(dir / "c.cpf");
  ASSERT_EQ(trace.entries.size(), 5u);
  EXPECT_EQ(testing::tagsOf(trace.entries), (std::vector<std::int32_t>{5, 4, 3, 2, 1}));
  EXPECT_EQ(trace.entries[4].timestamp_ns, 14u);
  EXPECT_EQ(trace.report.frames, 1u);
  EXPECT_EQ(trace.report.raw_bytes, 60u);
  EXPECT_TRUE(trace.report.seq_complete);
}

TEST(DecodeFile, ReordersFramesBySeqNo) {
  TempDir dir;
  ByteWriter w;
  testing::putHeader(w, 2, 0, 2, "c");
  testing::putFrame(w, 2, {{5, 5}, {6, 6}});
  testing::putFrame(w, 0, {{1, 1}, {2, 2}});
  testing::putFrame(w, 1, {{3, 3}, {4, 4}});
  testing::writeBytes(dir / "c.cpf", w.bytes());

  const auto trace = logformat::decodeFile(dir / "c.cpf");
  EXPECT_EQ(testing::tagsOf(trace.entries), (std::vector<std::int32_t>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(trace.report.out_of_order_frames, 2u);
}

TEST(DecodeFile, MixedCodecFramesDecode) {
  TempDir dir;
  const auto raw = testing::rawRecords({{100, 1}, {200, 2}, {300, 3}});
  const auto z = codecs::compress(CodecId::Zstd, raw);
  const auto lz = codecs::compress(CodecId::Realtime, raw);
  ByteWriter w;
  testing::putHeader(w, 3, 1, 3, "c");
  w.u64(1).u32(3).u8(1).u32(36).u32(static_cast<std::uint32_t>(z.size())).raw(z);
  w.u64(0).u32(3).u8(2).u32(36).u32(static_cast<std::uint32_t>(lz.size())).raw(lz);
  testing::writeBytes(dir / "c.cpf", w.bytes());

  const auto trace = logformat::decodeFile(dir / "c.cpf");
  EXPECT_EQ(trace.entries.size(), 6u);
  EXPECT_EQ(trace.report.payload_bytes, z.size() + lz.size());
}

TEST(DecodeFile, SeqGapReportsMissingFrameWithOffset) {
  TempDir dir;
  ByteWriter w;
  testing::putHeader(w, 2, 0, 1, "c");
  testing::putFrame(w, 0, {{1, 1}});
  const auto second_frame_offset = w.bytes().size();
  testing::putFrame(w, 2, {{3, 3}});
  testing::writeBytes(dir / "c.cpf", w.bytes());
  try {
    logformat::decodeFile(dir / "c.cpf");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("missing frame seq 1"), std::string::npos) << e.what();
    EXPECT_EQ(e.offset(), second_frame_offset);
  }
}

TEST(DecodeFile, DuplicateSeqIsError) {
  TempDir dir;
  ByteWriter w;
  testing::putHeader(w, 2, 0, 1, "c");
  testing::putFrame(w, 0, {{1, 1}});
  testing::putFrame(w, 0, {{2, 2}});
  testing::writeBytes(dir / "c.cpf", w.bytes());
  EXPECT_THROW(logformat::decodeFile(dir / "c.cpf"), FormatError);
}

TEST(DecodeFile, TruncatedPayloadReportsFrameOffset) {
  TempDir dir;
  ByteWriter w;
  testing::putHeader(w, 2, 0, 2, "c");
  testing::putFrame(w, 0, {{1, 1}, {2, 2}});
  auto bytes = w.bytes();
  bytes.resize(bytes.size() - 5);
  testing::writeBytes(dir / "c.cpf", bytes);
  try {
    logformat::decodeFile(dir / "c.cpf");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
    EXPECT_EQ(e.offset(), 15u + 21u);  // header (14 + "c") + frame header
  }
}

TEST(DecodeFile, CorruptCompressedPayloadIsIntegrityError) {
  TempDir dir;
  auto z = codecs::compress(CodecId::Zstd, testing::monotoneBlock(1000));
  z[z.size() / 2] ^= std::byte{0x5A};
  z[z.size() / 2 + 1] ^= std::byte{0xA5};
  ByteWriter w;
  testing::putHeader(w, 3, 1, 1000, "c");
  w.u64(0).u32(1000).u8(1).u32(12'000).u32(static_cast<std::uint32_t>(z.size())).raw(z);
  testing::writeBytes(dir / "c.cpf", w.bytes());
  try {
    logformat::decodeFile(dir / "c.cpf");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 15u);
  }
}

TEST(DecodeFile, DirectIdFileIsOneImplicitFrame) {
  TempDir dir;
  ByteWriter w;
  testing::putHeader(w, 1, 0, 0, "d");
  w.raw(testing::rawRecords({{1, 3}, {2, 2}, {3, 1}}));
  testing::writeBytes(dir / "d.cpf", w.bytes());
  const auto trace = logformat::decodeFile(dir / "d.cpf");
  EXPECT_EQ(testing::tagsOf(trace.entries), (std::vector<std::int32_t>{3, 2, 1}));
  EXPECT_EQ(trace.report.frames, 1u);

  auto truncated = w.bytes();
  truncated.pop_back();
  testing::writeBytes(dir / "t.cpf", truncated);
  try {
    logformat::decodeFile(dir / "t.cpf");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 15u + 24u);  // start of the partial third record
  }
}

TEST(DecodeFile, CountOnlyKeepsNoEntries) {
  TempDir dir;
  ByteWriter w;
  testing::putHeader(w, 2, 0, 2, "c");
  testing::putFrame(w, 0, {{1, 1}, {2, 2}});
  testing::writeBytes(dir / "c.cpf", w.bytes());
  const auto trace = logformat::decodeFile(dir / "c.cpf", false);
  EXPECT_TRUE(trace.entries.empty());
  EXPECT_EQ(trace.report.entries, 2u);
}

TEST(VerifyFile, HealthyFilePasses) {
  TempDir dir;
  ByteWriter w;
  testing::putHeader(w, 2, 0, 2, "c");
  testing::putFrame(w, 1, {{3, 1}, {4, 1}});
  testing::putFrame(w, 0, {{1, 1}, {2, 1}});
  testing::writeBytes(dir / "c.cpf", w.bytes());
  const auto report = logformat::verifyFile(dir / "c.cpf");
  EXPECT_TRUE(report.ok());
  EXPECT_EQ(report.checks.size(), 4u);
}

TEST(VerifyFile, GapFailsSeqCheck) {
  TempDir dir;
  ByteWriter w;
  testing::putHeader(w, 2, 0, 1, "c");
  testing::putFrame(w, 0, {{1, 1}});
  testing::putFrame(w, 2, {{2, 1}});
  testing::writeBytes(dir / "c.cpf", w.bytes());
  const auto report = logformat::verifyFile(dir / "c.cpf");
  EXPECT_FALSE(report.ok());
  EXPECT_FALSE(report.file.seq_complete);
  bool found = false;
  for (const auto& c : report.checks) {
    if (c.name == "seq_no") {
      found = true;
      EXPECT_FALSE(c.passed);
      EXPECT_NE(c.detail.find("missing frame"), std::string::npos);
    }
  }
  EXPECT_TRUE(found);
}

TEST(VerifyFile, NonMonotoneWithinAndAcrossFrames) {
  TempDir dir;
  {
    ByteWriter w;
    testing::putHeader(w, 2, 0, 3, "c");
    testing::putFrame(w, 0, {{5, 1}, {4, 1}, {6, 1}});
    testing::writeBytes(dir / "within.cpf", w.bytes());
  }
  {
    ByteWriter w;
    testing::putHeader(w, 2, 0, 2, "c");
    testing::putFrame(w, 0, {{5, 1}, {9, 1}});
    testing::putFrame(w, 1, {{8, 1}, {10, 1}});
    testing::writeBytes(dir / "across.cpf", w.bytes());
  }
  for (const char* name : {"within.cpf", "across.cpf"}) {
    const auto report = logformat::verifyFile(dir / name);
    EXPECT_FALSE(report.ok()) << name;
    EXPECT_FALSE(report.checks.back().passed) << name;
    EXPECT_EQ(report.checks.back().name, "monotonic");
  }
}

TEST(VerifyFile, BadMagicStopsAtHeader) {
  TempDir dir;
  ByteWriter w;
  w.str("NOPE").u16(1);
  testing::writeBytes(dir / "x.cpf", w.bytes());
  const auto report = logformat::verifyFile(dir / "x.cpf");
  ASSERT_EQ(report.checks.size(), 1u);
  EXPECT_EQ(report.checks[0].name, "header");
  EXPECT_FALSE(report.ok());
}

}  // namespace
}  // namespace blockprof
