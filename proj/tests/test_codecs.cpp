#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "blockprof/clock.hpp"
#include "blockprof/codecs.hpp"
#include "test_support.hpp"

namespace blockprof {
namespace {

using codecs::CodecError;

constexpr std::array<CodecId, 3> kCodecs{CodecId::Identity, CodecId::Zstd, CodecId::Realtime};

TEST(Codecs, IdentityReturnsInput) {
  std::mt19937_64 rng(1);
  const auto raw = testing::randomBytes(rng, 4096);
  EXPECT_EQ(codecs::compress(CodecId::Identity, raw), raw);
  EXPECT_EQ(codecs::decompress(CodecId::Identity, raw, raw.size()), raw);
}

TEST(Codecs, RoundTripRandomSizesAndContent) {
  std::mt19937_64 rng(2);
  for (auto codec : kCodecs) {
    for (int i = 0; i < 50; ++i) {
      const std::size_t n = 1 + rng() % 20'000;
      // Alternate incompressible and structured inputs.
      const auto raw = (i % 2 == 0) ? testing::randomBytes(rng, n) : testing::monotoneBlock(n / 12 + 1, rng());
      const auto packed = codecs::compress(codec, raw);
      ASSERT_EQ(codecs::decompress(codec, packed, raw.size()), raw) << toString(codec) << " n=" << n;
    }
  }
}

TEST(Codecs, SingleByteRoundTrip) {
  const std::vector<std::byte> one{std::byte{0x42}};
  for (auto codec : kCodecs) {
    EXPECT_EQ(codecs::decompress(codec, codecs::compress(codec, one), 1), one) << toString(codec);
  }
}

TEST(Codecs, EmptyInputRejected) {
  for (auto codec : kCodecs) EXPECT_THROW(codecs::compress(codec, {}), CodecError);
}

TEST(Codecs, ZstdAndRealtimeShrinkMonotoneRecords) {
  const auto raw = testing::monotoneBlock(100'000);
  for (auto codec : {CodecId::Zstd, CodecId::Realtime}) {
    EXPECT_LT(codecs::compress(codec, raw).size(), raw.size()) << toString(codec);
  }
}

TEST(Codecs, Deterministic) {
  const auto raw = testing::monotoneBlock(50'000, 9);
  for (auto codec : kCodecs) EXPECT_EQ(codecs::compress(codec, raw), codecs::compress(codec, raw));
}

TEST(Codecs, TruncatedInputIsIntegrityError) {
  const auto raw = testing::monotoneBlock(10'000);
  for (auto codec : kCodecs) {
    auto packed = codecs::compress(codec, raw);
    packed.resize(packed.size() - 7);
    EXPECT_THROW(codecs::decompress(codec, packed, raw.size()), CodecError) << toString(codec);
  }
}

TEST(Codecs, LengthMismatchIsIntegrityError) {
  const auto raw = testing::monotoneBlock(1'000);
  for (auto codec : kCodecs) {
    const auto packed = codecs::compress(codec, raw);
    EXPECT_THROW(codecs::decompress(codec, packed, raw.size() + 12), CodecError) << toString(codec);
    EXPECT_THROW(codecs::decompress(codec, packed, raw.size() - 12), CodecError) << toString(codec);
  }
}

TEST(Codecs, GarbageInputIsErrorNotOutput) {
  std::mt19937_64 rng(5);
  const auto junk = testing::randomBytes(rng, 512);
  EXPECT_THROW(codecs::decompress(CodecId::Zstd, junk, 4096), CodecError);
  EXPECT_THROW(codecs::decompress(CodecId::Realtime, junk, 4096), CodecError);
}

std::uint64_t bestCompressTime(CodecId codec, const std::vector<std::byte>& raw) {
  std::vector<std::byte> out;
  std::uint64_t best = UINT64_MAX;
  for (int i = 0; i < 3; ++i) {
    const auto start = now_ns();
    codecs::compressInto(codec, raw, out);
    best = std::min(best, now_ns() - start);
  }
  return best;
}

TEST(Codecs, RealtimeCompressesReferenceBlockFasterThanZstd) {
  const auto raw = testing::monotoneBlock(1'000'000);
  EXPECT_LT(bestCompressTime(CodecId::Realtime, raw), bestCompressTime(CodecId::Zstd, raw));
}

}  // namespace
}  // namespace blockprof
