#include <gtest/gtest.h>

#include <stdlib.h>

#include <random>
#include <thread>

#include "blockprof/logformat.hpp"
#include "blockprof/profiler.hpp"
#include "test_support.hpp"

namespace blockprof {
namespace {

using namespace std::chrono_literals;

constexpr std::array<HandlerKind, 4> kFileHandlers{HandlerKind::DirectId, HandlerKind::BufferedId,
                                                   HandlerKind::BufferedZstd, HandlerKind::BufferedRealtime};

ProfilerConfig smallConfig(HandlerKind kind, const std::filesystem::path& dir, std::uint32_t capacity = 64) {
  ProfilerConfig c;
  c.handler = kind;
  c.output_dir = dir;
  c.num_blocks = 8;
  c.block_capacity = capacity;
  c.num_compression_workers = 2;
  return c;
}

bool waitForFreeBlocks(const Pipeline& p, std::size_t n) {
  const auto deadline = std::chrono::steady_clock::now() + 5s;
  while (std::chrono::steady_clock::now() < deadline) {
    if (p.freeBlocks() == n) return true;
    std::this_thread::sleep_for(1ms);
  }
  return false;
}

TEST(ProfilerConfig, BlocksMustCoverWorkersPlusTwo) {
  ProfilerConfig c;
  c.num_blocks = 5;
  c.num_compression_workers = 4;
  EXPECT_THROW(c.validate(), ConfigError);
  c.num_blocks = 6;
  EXPECT_NO_THROW(c.validate());
  c.block_capacity = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(OpenChannel, IdsAreDenseInOpenOrder) {
  testing::TempDir dir;
  Profiler p(smallConfig(HandlerKind::BufferedZstd, dir.path()));
  EXPECT_EQ(p.openChannel("ch_start").id(), 0u);
  EXPECT_EQ(p.openChannel("ch_end").id(), 1u);
  EXPECT_EQ(p.openChannel("third").id(), 2u);
  ASSERT_TRUE(p.channel("ch_end").has_value());
  EXPECT_EQ(p.channel("ch_end")->id(), 1u);
  EXPECT_FALSE(p.channel("missing").has_value());
}

TEST(OpenChannel, WritesValidHeaderImmediately) {
  testing::TempDir dir;
  Profiler p(smallConfig(HandlerKind::BufferedRealtime, dir.path(), 128));
  p.openChannel("ch_start");
  const auto bytes = testing::readBytes(dir / "ch_start.cpf");
  const auto header = logformat::decodeHeader(bytes);
  EXPECT_EQ(header.handler, HandlerKind::BufferedRealtime);
  EXPECT_EQ(header.default_codec, CodecId::Realtime);
  EXPECT_EQ(header.block_capacity, 128u);
  EXPECT_EQ(header.channel_name, "ch_start");
}

TEST(OpenChannel, UnwritableDirectoryIsConfigError) {
  testing::TempDir dir;
  testing::writeBytes(dir / "plain-file", {});
  // A directory below a regular file cannot exist, even for root.
  EXPECT_THROW(Profiler(smallConfig(HandlerKind::BufferedId, dir / "plain-file" / "sub")), ConfigError);
}

TEST(OpenChannel, DuplicateAndInvalidNamesRejected) {
  testing::TempDir dir;
  Profiler p(smallConfig(HandlerKind::DirectId, dir.path()));
  p.openChannel("a");
  EXPECT_THROW(p.openChannel("a"), ConfigError);
  EXPECT_THROW(p.openChannel(""), ConfigError);
  EXPECT_THROW(p.openChannel("x/y"), ConfigError);
  p.shutdown();
  EXPECT_THROW(p.openChannel("b"), ConfigError);
}

TEST(LogTS, NullHandlerTouchesNoFiles) {
  testing::TempDir dir;
  const auto out = dir / "never-created";
  Profiler p(smallConfig(HandlerKind::Null, out));
  auto h = p.openChannel("ch_start");
  for (int i = 0; i < 10'000; ++i) logTS(h, i);
  const auto report = p.shutdown();
  EXPECT_TRUE(report.ok);
  EXPECT_FALSE(std::filesystem::exists(out));
  ASSERT_EQ(report.channels.size(), 1u);
  EXPECT_EQ(report.channels[0].bytes_written, 0u);
  EXPECT_EQ(report.channels[0].entries_written, 0u);
  EXPECT_TRUE(report.channels[0].path.empty());
}

TEST(LogTS, DirectIdWritesTwelveBytesPerEntryOneWriteEach) {
  testing::TempDir dir;
  Profiler p(smallConfig(HandlerKind::DirectId, dir.path()));
  auto h = p.openChannel("d");
  const auto header_size = std::filesystem::file_size(dir / "d.cpf");
  EXPECT_EQ(header_size, logformat::kFixedHeaderBytes + 1);
  logTS(h, 10);
  EXPECT_EQ(std::filesystem::file_size(dir / "d.cpf"), header_size + 12);
  for (int i = 0; i < 999; ++i) logTS(h, i);
  const auto report = p.shutdown();
  EXPECT_TRUE(report.ok);
  EXPECT_EQ(std::filesystem::file_size(dir / "d.cpf"), header_size + 12 * 1000);
  EXPECT_EQ(report.channels[0].write_ops, 1000u);
  EXPECT_EQ(report.channels[0].entries_written, 1000u);

  const auto trace = logformat::decodeFile(dir / "d.cpf");
  ASSERT_EQ(trace.entries.size(), 1000u);
  EXPECT_EQ(trace.entries[0].tag, 10);
  for (int i = 0; i < 999; ++i) ASSERT_EQ(trace.entries[i + 1].tag, i);
}

TEST(LogTS, CapacityFourWithFourEntriesSealsOneBlock) {
  testing::TempDir dir;
  Profiler p(smallConfig(HandlerKind::BufferedId, dir.path(), 4));
  auto h = p.openChannel("c");
  for (int i = 0; i < 4; ++i) logTS(h, i);
  // Sealed and recycled by the writer; no filling block is held.
  EXPECT_TRUE(waitForFreeBlocks(*p.pipeline(), 8));
  EXPECT_EQ(p.pipeline()->channelStats(0).frames, 1u);
  const auto report = p.shutdown();
  EXPECT_EQ(report.channels[0].frame_entry_counts, (std::vector<std::uint32_t>{4}));
}

TEST(LogTS, CapacityFourWithFiveEntriesLeavesOneFilling) {
  testing::TempDir dir;
  Profiler p(smallConfig(HandlerKind::BufferedId, dir.path(), 4));
  auto h = p.openChannel("c");
  for (int i = 0; i < 5; ++i) logTS(h, i);
  EXPECT_TRUE(waitForFreeBlocks(*p.pipeline(), 7));
  EXPECT_EQ(p.pipeline()->channelStats(0).frames, 1u);
  const auto report = p.shutdown();
  EXPECT_EQ(report.channels[0].frame_entry_counts, (std::vector<std::uint32_t>{4, 1}));
  EXPECT_EQ(report.free_blocks, 8u);
}

TEST(Shutdown, PartialBlockIsFlushed) {
  testing::TempDir dir;
  auto config = smallConfig(HandlerKind::BufferedId, dir.path());
  config.block_capacity = 1'000'000;
  Profiler p(config);
  auto h = p.openChannel("c");
  logTS(h, 7);
  logTS(h, 8);
  logTS(h, 9);
  p.shutdown();
  const auto trace = logformat::decodeFile(dir / "c.cpf");
  EXPECT_EQ(testing::tagsOf(trace.entries), (std::vector<std::int32_t>{7, 8, 9}));
}

TEST(Shutdown, OneAndAHalfMillionEntriesGiveTwoFrames) {
  testing::TempDir dir;
  auto config = smallConfig(HandlerKind::BufferedId, dir.path());
  config.block_capacity = 1'000'000;
  Profiler p(config);
  auto h = p.openChannel("c");
  for (int i = 0; i < 1'500'000; ++i) logTS(h, i);
  const auto report = p.shutdown();
  EXPECT_TRUE(report.ok);
  EXPECT_EQ(report.channels[0].frames, 2u);
  EXPECT_EQ(report.channels[0].frame_entry_counts, (std::vector<std::uint32_t>{1'000'000, 500'000}));
  EXPECT_EQ(logformat::decodeFile(dir / "c.cpf", false).report.entries, 1'500'000u);
}

TEST(Shutdown, SecondCallReturnsSameReport) {
  testing::TempDir dir;
  Profiler p(smallConfig(HandlerKind::BufferedZstd, dir.path()));
  auto h = p.openChannel("c");
  for (int i = 0; i < 100; ++i) logTS(h, i);
  const auto first = p.shutdown();
  const auto size = std::filesystem::file_size(dir / "c.cpf");
  const auto second = p.shutdown();
  EXPECT_EQ(first.channels[0].entries_written, second.channels[0].entries_written);
  EXPECT_EQ(first.channels[0].bytes_written, second.channels[0].bytes_written);
  EXPECT_EQ(first.ok, second.ok);
  EXPECT_EQ(std::filesystem::file_size(dir / "c.cpf"), size);
}

TEST(Shutdown, EmptyChannelsReportZero) {
  for (auto kind : kFileHandlers) {
    testing::TempDir dir;
    Profiler p(smallConfig(kind, dir.path()));
    p.openChannel("c");
    const auto report = p.shutdown();
    EXPECT_TRUE(report.ok) << toString(kind);
    EXPECT_EQ(report.channels[0].entries_written, 0u);
    EXPECT_EQ(logformat::decodeFile(dir / "c.cpf").entries.size(), 0u);
  }
}

TEST(LogTS, ClosedHandleIsCountedNoOp) {
  testing::TempDir dir;
  Profiler p(smallConfig(HandlerKind::BufferedId, dir.path()));
  auto h = p.openChannel("c");
  logTS(h, 1);
  p.shutdown();
  EXPECT_FALSE(h.isOpen());
  const auto size = std::filesystem::file_size(dir / "c.cpf");
  for (int i = 0; i < 5; ++i) logTS(h, 2);
  EXPECT_EQ(h.closedCalls(), 5u);
  EXPECT_EQ(std::filesystem::file_size(dir / "c.cpf"), size);
}

TEST(LogTS, DefaultHandleIsHarmless) {
  ChannelHandle h;
  EXPECT_FALSE(h.isOpen());
  logTS(h, 1);
  EXPECT_EQ(h.closedCalls(), 0u);
}

TEST(Profiler, OutputDirEnvironmentOverride) {
  testing::TempDir dir;
  const auto target = dir / "from-env";
  ::setenv(kOutputDirEnv, target.c_str(), 1);
  {
    Profiler p(smallConfig(HandlerKind::BufferedId, dir / "from-config"));
    p.openChannel("c");
    p.shutdown();
  }
  ::unsetenv(kOutputDirEnv);
  EXPECT_TRUE(std::filesystem::exists(target / "c.cpf"));
  EXPECT_FALSE(std::filesystem::exists(dir / "from-config"));
}

TEST(Handlers, AllFileHandlersProduceIdenticalTagSequences) {
  std::vector<std::int32_t> tags(5'000);
  std::mt19937 rng(42);
  for (auto& t : tags) t = static_cast<std::int32_t>(rng());

  std::vector<std::vector<std::int32_t>> decoded;
  for (auto kind : kFileHandlers) {
    testing::TempDir dir;
    Profiler p(smallConfig(kind, dir.path(), 97));
    auto a = p.openChannel("a");
    auto b = p.openChannel("b");
    for (auto t : tags) {
      logTS(a, t);
      logTS(b, -t);
    }
    EXPECT_TRUE(p.shutdown().ok) << toString(kind);
    decoded.push_back(testing::tagsOf(logformat::decodeFile(dir / "a.cpf").entries));
    auto negated = testing::tagsOf(logformat::decodeFile(dir / "b.cpf").entries);
    for (auto& t : negated) t = -t;
    EXPECT_EQ(negated, tags) << toString(kind);
  }
  for (const auto& seq : decoded) EXPECT_EQ(seq, tags);
}

TEST(Handlers, ConcurrentProducersConserveEntriesAndPerThreadOrder) {
  constexpr int kThreads = 4;
  constexpr int kPerThread = 50'000;
  for (auto kind : kFileHandlers) {
    if (kind == HandlerKind::DirectId) continue;  // covered at lower volume below
    testing::TempDir dir;
    Profiler p(smallConfig(kind, dir.path(), 64));
    auto h = p.openChannel("c");
    std::vector<std::thread> threads;
    for (int t = 0; t < kThreads; ++t) {
      threads.emplace_back([&h, t] {
        for (int i = 0; i < kPerThread; ++i) logTS(h, t * kPerThread + i);
      });
    }
    for (auto& th : threads) th.join();
    const auto report = p.shutdown();
    EXPECT_TRUE(report.ok) << toString(kind);
    EXPECT_EQ(report.free_blocks, 8u);

    const auto trace = logformat::decodeFile(dir / "c.cpf");
    ASSERT_EQ(trace.entries.size(), static_cast<std::size_t>(kThreads * kPerThread));
    std::array<std::int32_t, kThreads> last;
    last.fill(-1);
    std::uint64_t prev_ts = 0;
    for (const auto& e : trace.entries) {
      const int t = e.tag / kPerThread;
      ASSERT_GT(e.tag, last[t]);
      last[t] = e.tag;
      ASSERT_GE(e.timestamp_ns, prev_ts);
      prev_ts = e.timestamp_ns;
    }
    for (int t = 0; t < kThreads; ++t) EXPECT_EQ(last[t], t * kPerThread + kPerThread - 1);
  }
}

TEST(Handlers, ConcurrentDirectIdConservesEntries) {
  testing::TempDir dir;
  Profiler p(smallConfig(HandlerKind::DirectId, dir.path()));
  auto h = p.openChannel("c");
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&h, t] {
      for (int i = 0; i < 2'000; ++i) logTS(h, t * 2'000 + i);
    });
  }
  for (auto& th : threads) th.join();
  const auto report = p.shutdown();
  EXPECT_EQ(report.channels[0].write_ops, 8'000u);
  EXPECT_EQ(logformat::decodeFile(dir / "c.cpf").entries.size(), 8'000u);
}

TEST(Handlers, BufferedWriteOpsBoundedByBlockCount) {
  for (std::uint32_t capacity : {1u, 7u, 64u, 1000u}) {
    for (std::uint64_t n : {0ull, 1ull, 999ull, 10'000ull}) {
      testing::TempDir dir;
      Profiler p(smallConfig(HandlerKind::BufferedId, dir.path(), capacity));
      auto h = p.openChannel("c");
      for (std::uint64_t i = 0; i < n; ++i) logTS(h, static_cast<std::int32_t>(i));
      const auto report = p.shutdown();
      const std::uint64_t bound = (n + capacity - 1) / capacity + 1;
      EXPECT_LE(report.channels[0].write_ops, bound) << "C=" << capacity << " N=" << n;
      EXPECT_EQ(report.channels[0].entries_written, n);
    }
  }
}

}  // namespace
}  // namespace blockprof
