#include <gtest/gtest.h>

#include <atomic>
#include <future>
#include <mutex>
#include <set>
#include <thread>

#include "blockprof/file_sink.hpp"
#include "blockprof/logformat.hpp"
#include "blockprof/pipeline.hpp"
#include "test_support.hpp"

namespace blockprof {
namespace {

using namespace std::chrono_literals;

std::shared_ptr<FileSink> makeSink(const std::filesystem::path& path, CodecId codec, std::uint32_t capacity) {
  const HandlerKind kind = codec == CodecId::Zstd       ? HandlerKind::BufferedZstd
                           : codec == CodecId::Realtime ? HandlerKind::BufferedRealtime
                                                        : HandlerKind::BufferedId;
  return FileSink::create(path, logformat::encodeHeader({kind, codec, capacity, path.stem().string()}));
}

// Fills `blocks` blocks of `per_block` entries on channel 0. Tags count up
// from 0 across blocks; seq_no follows submission order.
void submitBlocks(Pipeline& p, int blocks, std::uint32_t per_block) {
  std::int32_t tag = 0;
  for (int b = 0; b < blocks; ++b) {
    BufferBlock* block = p.acquireEmpty();
    block->seq_no = static_cast<std::uint64_t>(b);
    block->channel_id = 0;
    for (std::uint32_t i = 0; i < per_block; ++i) {
      block->append({0, tag, static_cast<std::uint64_t>(tag) + 1});
      ++tag;
    }
    p.sealAndSubmit(block);
  }
}

void expectCountingTags(const std::vector<TimestampEntry>& entries, std::size_t n) {
  ASSERT_EQ(entries.size(), n);
  for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(entries[i].tag, static_cast<std::int32_t>(i)) << i;
}

TEST(BufferBlock, AppendReportsFullAtCapacity) {
  BufferBlock b(3);
  EXPECT_TRUE(b.empty());
  EXPECT_FALSE(b.append({0, 1, 1}));
  EXPECT_FALSE(b.append({0, 2, 2}));
  EXPECT_TRUE(b.append({0, 3, 3}));
  EXPECT_TRUE(b.full());
  EXPECT_EQ(b.entries().size(), 3u);
  b.reset();
  EXPECT_TRUE(b.empty());
  EXPECT_EQ(b.payload_state, PayloadState::Raw);
}

TEST(Pipeline, RejectsBadConfig) {
  EXPECT_THROW(Pipeline({.num_blocks = 0}), ConfigError);
  EXPECT_THROW(Pipeline({.num_blocks = 2, .block_capacity = 0}), ConfigError);
  EXPECT_THROW(Pipeline({.num_blocks = 2, .block_capacity = 400'000'000}), ConfigError);
  EXPECT_THROW(Pipeline({.num_blocks = 2, .block_capacity = 4, .num_workers = 0, .codec = CodecId::Zstd}),
               ConfigError);
}

TEST(Pipeline, ThirtyTwoBlocksAcquireImmediatelyThe33rdWaits) {
  Pipeline p({.num_blocks = 32, .block_capacity = 16});
  std::vector<BufferBlock*> held;
  for (int i = 0; i < 32; ++i) held.push_back(p.acquireEmpty());
  EXPECT_EQ(p.freeBlocks(), 0u);
  EXPECT_EQ(std::set<BufferBlock*>(held.begin(), held.end()).size(), 32u);

  auto waiter = std::async(std::launch::async, [&] { return p.acquireEmpty(); });
  EXPECT_EQ(waiter.wait_for(100ms), std::future_status::timeout);
  p.releaseEmpty(held.back());
  ASSERT_EQ(waiter.wait_for(5s), std::future_status::ready);
  EXPECT_EQ(waiter.get(), held.back());

  for (auto* b : held) p.releaseEmpty(b);
  const auto result = p.drain();
  EXPECT_TRUE(result.ok);
  EXPECT_EQ(result.free_blocks, 32u);
}

TEST(Pipeline, AcquireAfterDrainThrows) {
  Pipeline p({.num_blocks = 4, .block_capacity = 4});
  p.drain();
  EXPECT_THROW(p.acquireEmpty(), PipelineStopped);
}

TEST(Pipeline, EmptyBlockSubmitIsLogicError) {
  Pipeline p({.num_blocks = 4, .block_capacity = 4});
  BufferBlock* b = p.acquireEmpty();
  EXPECT_THROW(p.sealAndSubmit(b), std::logic_error);
  p.releaseEmpty(b);
  EXPECT_TRUE(p.drain().ok);
}

TEST(Pipeline, DrainWithNothingLoggedIsCleanAndIdempotent) {
  testing::TempDir dir;
  Pipeline p({.num_blocks = 4, .block_capacity = 4, .num_workers = 2, .codec = CodecId::Zstd});
  p.attachSink(0, makeSink(dir / "c.cpf", CodecId::Zstd, 4));
  const auto first = p.drain();
  EXPECT_TRUE(first.ok);
  EXPECT_EQ(first.free_blocks, 4u);
  EXPECT_EQ(p.channelStats(0).entries, 0u);
  EXPECT_EQ(p.drain().free_blocks, first.free_blocks);
  EXPECT_EQ(logformat::decodeFile(dir / "c.cpf").entries.size(), 0u);
}

TEST(Pipeline, IdentityBlocksNeverVisitAWorker) {
  testing::TempDir dir;
  std::atomic<int> visits{0};
  Pipeline p({.num_blocks = 8, .block_capacity = 10, .codec = CodecId::Identity},
             {.before_compress = [&](const BufferBlock&) { ++visits; }});
  EXPECT_FALSE(p.usesWorkers());
  p.attachSink(0, makeSink(dir / "c.cpf", CodecId::Identity, 10));
  submitBlocks(p, 20, 10);
  EXPECT_TRUE(p.drain().ok);
  EXPECT_EQ(visits.load(), 0);
  const auto trace = logformat::decodeFile(dir / "c.cpf");
  expectCountingTags(trace.entries, 200);
  // header + 20 * (frame header + 12 * 10)
  EXPECT_EQ(std::filesystem::file_size(dir / "c.cpf"), 15u + 20u * (21u + 120u));
}

TEST(Pipeline, FourWorkersTwentyBlocksEachWrittenOnce) {
  for (CodecId codec : {CodecId::Zstd, CodecId::Realtime}) {
    testing::TempDir dir;
    std::mutex mu;
    std::multiset<std::uint64_t> compressed;
    Pipeline p({.num_blocks = 8, .block_capacity = 50, .num_workers = 4, .codec = codec},
               {.before_compress = [&](const BufferBlock& b) {
                 std::lock_guard lock(mu);
                 compressed.insert(b.seq_no);
               }});
    p.attachSink(0, makeSink(dir / "c.cpf", codec, 50));
    submitBlocks(p, 20, 50);
    const auto result = p.drain();
    EXPECT_TRUE(result.ok);
    EXPECT_EQ(result.free_blocks, 8u);

    ASSERT_EQ(compressed.size(), 20u);
    for (std::uint64_t s = 0; s < 20; ++s) EXPECT_EQ(compressed.count(s), 1u) << s;
    const auto stats = p.channelStats(0);
    EXPECT_EQ(stats.frames, 20u);
    EXPECT_EQ(stats.entries, 1000u);
    const auto trace = logformat::decodeFile(dir / "c.cpf");
    EXPECT_EQ(trace.report.frames, 20u);
    EXPECT_TRUE(trace.report.seq_complete);
    expectCountingTags(trace.entries, 1000);
  }
}

TEST(Pipeline, ForcedOutOfOrderWritesDecodeInSeqOrder) {
  testing::TempDir dir;
  Pipeline p({.num_blocks = 8, .block_capacity = 5, .num_workers = 2, .codec = CodecId::Zstd},
             {.before_compress = [](const BufferBlock& b) {
               if (b.seq_no == 0) std::this_thread::sleep_for(150ms);
             }});
  p.attachSink(0, makeSink(dir / "c.cpf", CodecId::Zstd, 5));
  submitBlocks(p, 6, 5);
  EXPECT_TRUE(p.drain().ok);

  const auto trace = logformat::decodeFile(dir / "c.cpf");
  EXPECT_GT(trace.report.out_of_order_frames, 0u);
  expectCountingTags(trace.entries, 30);
}

TEST(Pipeline, CodecFailureFallsBackToIdentity) {
  testing::TempDir dir;
  Pipeline p({.num_blocks = 4, .block_capacity = 8, .num_workers = 2, .codec = CodecId::Zstd},
             {.compressor = [](CodecId, std::span<const std::byte>, std::vector<std::byte>&) {
               throw std::runtime_error("boom");
             }});
  p.attachSink(0, makeSink(dir / "c.cpf", CodecId::Zstd, 8));
  submitBlocks(p, 5, 8);
  const auto result = p.drain();
  EXPECT_TRUE(result.ok);
  EXPECT_EQ(result.codec_fallbacks, 5u);
  const auto trace = logformat::decodeFile(dir / "c.cpf");
  expectCountingTags(trace.entries, 40);
  EXPECT_EQ(trace.report.payload_bytes, 40u * 12u);
}

TEST(Pipeline, WriteFailureIsReportedAndBlocksStillRecycle) {
  Pipeline p({.num_blocks = 4, .block_capacity = 4});
  // No sink attached for channel 0: every frame fails to write.
  submitBlocks(p, 10, 4);
  const auto result = p.drain();
  EXPECT_FALSE(result.ok);
  EXPECT_EQ(result.free_blocks, 4u);
  EXPECT_EQ(p.channelStats(0).write_failures, 10u);
}

TEST(Pipeline, DrainTimeoutDoesNotHang) {
  Pipeline p({.num_blocks = 4,
              .block_capacity = 4,
              .num_workers = 1,
              .codec = CodecId::Zstd,
              .drain_timeout = 50ms},
             {.before_compress = [](const BufferBlock&) { std::this_thread::sleep_for(500ms); }});
  submitBlocks(p, 1, 4);
  const auto start = std::chrono::steady_clock::now();
  const auto result = p.drain();
  EXPECT_TRUE(result.timed_out);
  EXPECT_FALSE(result.ok);
  EXPECT_LT(std::chrono::steady_clock::now() - start, 5s);
}

}  // namespace
}  // namespace blockprof
