#include <gtest/gtest.h>

#include "blockprof/cli_config.hpp"
#include "test_support.hpp"

namespace blockprof {
namespace {

using bench::Configuration;

TEST(KeyValues, ParsesCommentsBlanksAndWhitespace) {
  const auto lines = parseKeyValues("# comment\n\n  iterations = 500  \nrepeats=3\n");
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0].key, "iterations");
  EXPECT_EQ(lines[0].value, "500");
  EXPECT_EQ(lines[0].line, 3);
  EXPECT_EQ(lines[1].key, "repeats");
  EXPECT_EQ(lines[1].line, 4);
}

TEST(KeyValues, MissingEqualsIsError) {
  EXPECT_THROW(parseKeyValues("iterations 500\n"), ConfigError);
  EXPECT_THROW(parseKeyValues(" = 5\n"), ConfigError);
}

TEST(KeyValues, ListsRoundTrip) {
  EXPECT_EQ(splitList("a, b,c"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(joinList({"a", "b"}), "a,b");
}

TEST(KeyValues, FileRoundTrip) {
  testing::TempDir dir;
  writeKeyValueFile(dir / "m.txt", {{"a", "1"}, {"b", "two words"}});
  const auto back = readKeyValueFile(dir / "m.txt");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].value, "two words");
}

TEST(CliConfig, DefaultsMatchReferenceProtocol) {
  const CliConfig c;
  EXPECT_EQ(c.bench.iterations, 2'000'000u);
  EXPECT_EQ(c.bench.depth, 10u);
  EXPECT_EQ(c.bench.method_time_ns, 0u);
  EXPECT_EQ(c.bench.repeats, 10u);
  EXPECT_EQ(c.bench.profiler.num_blocks, 32u);
  EXPECT_EQ(c.bench.profiler.block_capacity, 1'000'000u);
  EXPECT_EQ(c.bench.profiler.num_compression_workers, 4u);
  EXPECT_EQ(c.configurations.size(), 6u);
}

TEST(CliConfig, AppliesEveryKey) {
  testing::TempDir dir;
  const std::string text =
      "iterations = 1234\n"
      "depth = 4\n"
      "method_time_ns = 50\n"
      "repeats = 3\n"
      "memory_sample_stride = 7\n"
      "configurations = baseline,buffered-zstd\n"
      "num_blocks = 12\n"
      "block_capacity = 4096\n"
      "num_compression_workers = 2\n"
      "zstd_level = 5\n"
      "drain_timeout_ms = 1500\n"
      "output_dir = out/here\n"
      "keep_traces = true\n";
  testing::writeBytes(dir / "c.conf",
                      std::span(reinterpret_cast<const std::byte*>(text.data()), text.size()));
  const auto c = loadCliConfig(dir / "c.conf");
  EXPECT_EQ(c.bench.iterations, 1234u);
  EXPECT_EQ(c.bench.depth, 4u);
  EXPECT_EQ(c.bench.method_time_ns, 50u);
  EXPECT_EQ(c.bench.repeats, 3u);
  EXPECT_EQ(c.bench.memory_sample_stride, 7u);
  EXPECT_EQ(c.configurations, (std::vector<Configuration>{Configuration::Baseline, Configuration::BufferedZstd}));
  EXPECT_EQ(c.bench.profiler.num_blocks, 12u);
  EXPECT_EQ(c.bench.profiler.block_capacity, 4096u);
  EXPECT_EQ(c.bench.profiler.num_compression_workers, 2u);
  EXPECT_EQ(c.bench.profiler.zstd_level, 5);
  EXPECT_EQ(c.bench.profiler.drain_timeout, std::chrono::milliseconds(1500));
  EXPECT_EQ(c.out_dir, std::filesystem::path("out/here"));
  EXPECT_TRUE(c.bench.keep_traces);
}

TEST(CliConfig, UnknownKeyNamesTheLine) {
  CliConfig c;
  try {
    applyConfig(c, parseKeyValues("iterations = 5\nbogus = 1\n"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
}

TEST(CliConfig, BadValuesRejected) {
  for (const char* text : {"iterations = 0\n", "iterations = -3\n", "depth = ten\n", "keep_traces = maybe\n",
                           "configurations = baseline,nonexistent\n", "num_blocks = 12x\n"}) {
    CliConfig c;
    EXPECT_THROW(applyConfig(c, parseKeyValues(text)), ConfigError) << text;
  }
}

TEST(CliConfig, ConfigurationListParsing) {
  EXPECT_EQ(parseConfigurationList("null,direct-id"),
            (std::vector<Configuration>{Configuration::Null, Configuration::DirectId}));
  EXPECT_THROW(parseConfigurationList("nonexistent"), ConfigError);
  EXPECT_THROW(parseConfigurationList(""), ConfigError);
}

}  // namespace
}  // namespace blockprof
