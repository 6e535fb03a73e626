#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "blockprof/bench.hpp"
#include "blockprof/kv_file.hpp"
#include "blockprof/logformat.hpp"
#include "test_support.hpp"

namespace blockprof {
namespace {

using bench::Configuration;

struct RecordingProbe {
  std::vector<std::string>* events;
  void start(std::int32_t d) noexcept { events->push_back("start" + std::to_string(d)); }
  void end(std::int32_t d) noexcept { events->push_back("end" + std::to_string(d)); }
};

struct CountingLeaf {
  int* calls;
  std::uint64_t operator()(std::uint64_t) const {
    ++*calls;
    return 42;
  }
};

struct ThrowingLeaf {
  std::uint64_t operator()(std::uint64_t) const { throw std::runtime_error("leaf failed"); }
};

TEST(Workload, DepthTenTagsDescendOnBothChannels) {
  std::vector<std::string> events;
  int leaf_calls = 0;
  bench::Workload<RecordingProbe, CountingLeaf> w(RecordingProbe{&events}, CountingLeaf{&leaf_calls});
  EXPECT_EQ(w.monitoredMethod(0, 10), 42u);
  EXPECT_EQ(leaf_calls, 1);
  ASSERT_EQ(events.size(), 20u);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(events[i], "start" + std::to_string(10 - i));
    EXPECT_EQ(events[10 + i], "end" + std::to_string(i + 1));
  }
}

TEST(Workload, DepthOneLogsOneStartOneEnd) {
  std::vector<std::string> events;
  bench::Workload<RecordingProbe> w(RecordingProbe{&events});
  w.monitoredMethod(0, 1);
  EXPECT_EQ(events, (std::vector<std::string>{"start1", "end1"}));
}

TEST(Workload, EndEntryLoggedWhenLeafThrows) {
  std::vector<std::string> events;
  bench::Workload<RecordingProbe, ThrowingLeaf> w(RecordingProbe{&events});
  EXPECT_THROW(w.monitoredMethod(0, 3), std::runtime_error);
  EXPECT_EQ(events, (std::vector<std::string>{"start3", "start2", "start1", "end1", "end2", "end3"}));
}

TEST(Workload, BusyWaitHonoursTime) {
  const bench::BusyWait wait;
  const std::uint64_t start = now_ns();
  const std::uint64_t last = wait(1'000'000);
  const std::uint64_t elapsed = now_ns() - start;
  EXPECT_GE(last - start, 1'000'000u);
  EXPECT_GE(elapsed, 1'000'000u);
  EXPECT_LT(elapsed, 1'500'000u);
}

TEST(Workload, ZeroTimeReturnsCurrentClock) {
  const std::uint64_t before = now_ns();
  const std::uint64_t got = bench::BusyWait{}(0);
  EXPECT_GE(got, before);
  EXPECT_LE(got, now_ns());
}

TEST(Configurations, LabelsRoundTrip) {
  for (auto c : bench::kAllConfigurations) EXPECT_EQ(bench::parseConfiguration(bench::label(c)), c);
  EXPECT_FALSE(bench::parseConfiguration("nonexistent").has_value());
  EXPECT_FALSE(bench::handlerFor(Configuration::Baseline).has_value());
  EXPECT_EQ(bench::handlerFor(Configuration::BufferedZstd), HandlerKind::BufferedZstd);
}

TEST(BenchConfig, DefaultsMatchReferenceProtocol) {
  const bench::BenchConfig c;
  EXPECT_EQ(c.iterations, 2'000'000u);
  EXPECT_EQ(c.depth, 10u);
  EXPECT_EQ(c.method_time_ns, 0u);
  EXPECT_EQ(c.repeats, 10u);
  EXPECT_EQ(c.memory_sample_stride, 1'000u);
  EXPECT_EQ(c.profiler.num_blocks, 32u);
  EXPECT_EQ(c.profiler.block_capacity, 1'000'000u);
  EXPECT_EQ(c.profiler.num_compression_workers, 4u);
}

bench::BenchConfig smallBench(Configuration configuration, std::uint64_t iterations) {
  bench::BenchConfig c;
  c.configuration = configuration;
  c.iterations = iterations;
  c.repeats = 1;
  c.memory_sample_stride = 10;
  c.profiler.block_capacity = 256;
  c.profiler.num_blocks = 8;
  c.profiler.num_compression_workers = 2;
  return c;
}

TEST(RunRepeat, BufferedIdHundredIterations) {
  testing::TempDir dir;
  auto config = smallBench(Configuration::BufferedId, 100);
  config.keep_traces = true;
  const auto outcome = bench::runRepeat(config, 0, dir.path());
  ASSERT_TRUE(outcome.valid) << outcome.failure;
  EXPECT_EQ(outcome.measurements.elapsed_ns.size(), 100u);
  for (auto v : outcome.measurements.elapsed_ns) EXPECT_GT(v, 0u);
  EXPECT_EQ(outcome.measurements.memory.size(), 10u);

  const auto traces = bench::traceDir(dir.path(), Configuration::BufferedId, 0);
  for (auto name : {bench::kStartChannel, bench::kEndChannel}) {
    const auto trace = logformat::decodeFile(traces / (std::string(name) + ".cpf"));
    ASSERT_EQ(trace.entries.size(), 1000u);
    for (std::size_t i = 0; i < 10; ++i) {
      const std::int32_t expected = name == bench::kStartChannel ? 10 - static_cast<std::int32_t>(i)
                                                                 : static_cast<std::int32_t>(i) + 1;
      EXPECT_EQ(trace.entries[i].tag, expected);
    }
  }
  const auto reread = readMeasurementSet(dir.path(), "buffered-id", 0);
  EXPECT_EQ(reread.elapsed_ns, outcome.measurements.elapsed_ns);
}

TEST(RunRepeat, TracesRemovedByDefault) {
  testing::TempDir dir;
  const auto outcome = bench::runRepeat(smallBench(Configuration::BufferedZstd, 50), 3, dir.path());
  ASSERT_TRUE(outcome.valid) << outcome.failure;
  EXPECT_FALSE(std::filesystem::exists(bench::traceDir(dir.path(), Configuration::BufferedZstd, 3)));
  EXPECT_TRUE(std::filesystem::exists(dir / "buffered-zstd-3.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "buffered-zstd-3.mem.csv"));
}

TEST(RunRepeat, BaselineWritesNoTraces) {
  testing::TempDir dir;
  const auto outcome = bench::runRepeat(smallBench(Configuration::Baseline, 200), 0, dir.path());
  EXPECT_TRUE(outcome.valid);
  EXPECT_FALSE(outcome.flush.has_value());
  EXPECT_FALSE(std::filesystem::exists(dir / "traces"));
  for (auto v : outcome.measurements.elapsed_ns) EXPECT_GT(v, 0u);
}

TEST(RunSuite, QuickInProcessSuiteWritesAllFiles) {
  testing::TempDir dir;
  bench::SuiteConfig suite;
  suite.base = smallBench(Configuration::Baseline, 300);
  suite.base.repeats = 2;
  suite.out_dir = dir.path();
  std::vector<std::string> log;
  suite.log = [&](const std::string& line) { log.push_back(line); };
  const auto result = bench::runSuite(suite);
  EXPECT_TRUE(result.ok());
  EXPECT_EQ(result.repeats_run, 12u);
  ASSERT_EQ(result.order.size(), 12u);
  EXPECT_EQ(result.order.front(), "baseline#0");
  EXPECT_EQ(result.order.back(), "buffered-realtime#1");
  EXPECT_EQ(log.size(), 12u);

  std::size_t csvs = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir.path())) {
    const auto name = entry.path().filename().string();
    if (name.ends_with(".csv") && !name.ends_with(".mem.csv")) ++csvs;
  }
  EXPECT_EQ(csvs, 12u);
  EXPECT_FALSE(std::filesystem::exists(dir / "traces"));

  const auto manifest = readKeyValueFile(dir / std::string(kManifestFile));
  auto value = [&](const std::string& key) {
    for (const auto& kv : manifest) {
      if (kv.key == key) return kv.value;
    }
    return std::string("<missing>");
  };
  EXPECT_NE(value("host.cpu_model"), "<missing>");
  EXPECT_NE(value("host.cores"), "<missing>");
  EXPECT_NE(value("host.clock_resolution_ns"), "<missing>");
  EXPECT_EQ(value("memory_sample_stride"), "10");
  EXPECT_EQ(value("repeat.direct-id.1"), "ok");
  EXPECT_EQ(value("failures"), "0");
  EXPECT_EQ(value("configurations"), "baseline,null,direct-id,buffered-id,buffered-zstd,buffered-realtime");
}

TEST(RunSuite, FailedRepeatIsRecordedAndSuiteContinues) {
  testing::TempDir dir;
  bench::SuiteConfig suite;
  suite.base = smallBench(Configuration::Baseline, 10);
  suite.base.repeats = 2;
  suite.configurations = {Configuration::Baseline, Configuration::Null};
  suite.out_dir = dir.path();
  suite.launcher = [](const bench::BenchConfig& c, std::uint32_t k, const std::filesystem::path& out) {
    if (c.configuration == Configuration::Baseline && k == 0) return bench::LaunchResult{false, "injected"};
    return bench::launchInProcess(c, k, out);
  };
  const auto result = bench::runSuite(suite);
  EXPECT_EQ(result.repeats_run, 4u);
  EXPECT_EQ(result.failures, 1u);
  const auto loaded = loadResults(dir.path());
  ASSERT_EQ(loaded.configurations.size(), 2u);
  EXPECT_EQ(loaded.configurations[0].repeats.size(), 1u);
  EXPECT_EQ(loaded.configurations[0].failures.size(), 1u);
  EXPECT_EQ(loaded.configurations[1].repeats.size(), 2u);
}

}  // namespace
}  // namespace blockprof
