#include <gtest/gtest.h>

#include <stdio.h>
#include <sys/wait.h>

#include <sstream>

#include "blockprof/codecs.hpp"
#include "test_support.hpp"

namespace blockprof {
namespace {

struct Run {
  int exit_code;
  std::string output;  // stdout and stderr
};

Run runCli(const std::string& args) {
  const std::string cmd = std::string(BLOCKPROF_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return {-1, "popen failed"};
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = ::pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::filesystem::path fiveEntryFile(const testing::TempDir& dir) {
  testing::ByteWriter w;
  testing::putHeader(w, 2, 0, 3, "c");
  testing::putFrame(w, 1, {{400, 2}, {500, 1}});
  testing::putFrame(w, 0, {{100, 5}, {200, 4}, {300, 3}});
  testing::writeBytes(dir / "five.cpf", w.bytes());
  return dir / "five.cpf";
}

TEST(CliDecode, CsvHeaderPlusOneLinePerEntry) {
  testing::TempDir dir;
  const auto r = runCli("decode " + fiveEntryFile(dir).string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(lines(r.output), (std::vector<std::string>{"seq,timestamp_ns,tag", "0,100,5", "1,200,4", "2,300,3",
                                                       "3,400,2", "4,500,1"}));
  EXPECT_EQ(runCli("decode --csv " + (dir / "five.cpf").string()).output, r.output);
}

TEST(CliDecode, CountOnly) {
  testing::TempDir dir;
  const auto r = runCli("decode --count-only " + fiveEntryFile(dir).string());
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.output, "5\n");
}

TEST(CliDecode, CountOnlyOnCompressedFrames) {
  testing::TempDir dir;
  const auto raw = testing::monotoneBlock(20'000);
  const auto z = codecs::compress(CodecId::Zstd, raw);
  testing::ByteWriter w;
  testing::putHeader(w, 3, 1, 20'000, "z");
  for (std::uint64_t seq = 0; seq < 3; ++seq) {
    w.u64(seq).u32(20'000).u8(1).u32(240'000).u32(static_cast<std::uint32_t>(z.size())).raw(z);
  }
  testing::writeBytes(dir / "z.cpf", w.bytes());
  EXPECT_EQ(runCli("decode --count-only " + (dir / "z.cpf").string()).output, "60000\n");
}

TEST(CliDecode, TruncatedFileExitsOneWithOffset) {
  testing::TempDir dir;
  auto bytes = testing::readBytes(fiveEntryFile(dir));
  bytes.resize(bytes.size() - 4);
  testing::writeBytes(dir / "cut.cpf", bytes);
  const auto r = runCli("decode " + (dir / "cut.cpf").string());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("byte offset"), std::string::npos) << r.output;
}

TEST(CliDecode, MissingFileAndConflictingFlags) {
  EXPECT_EQ(runCli("decode /nonexistent/x.cpf").exit_code, 1);
  testing::TempDir dir;
  EXPECT_EQ(runCli("decode --csv --count-only " + fiveEntryFile(dir).string()).exit_code, 1);
}

TEST(CliVerify, HealthyFilePasses) {
  testing::TempDir dir;
  const auto r = runCli("verify " + fiveEntryFile(dir).string());
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(r.output.find("FAIL"), std::string::npos);
}

TEST(CliVerify, SeqGapFailsWithMissingFrame) {
  testing::TempDir dir;
  testing::ByteWriter w;
  testing::putHeader(w, 2, 0, 1, "c");
  testing::putFrame(w, 0, {{1, 1}});
  testing::putFrame(w, 2, {{3, 1}});
  testing::writeBytes(dir / "gap.cpf", w.bytes());
  const auto r = runCli("verify " + (dir / "gap.cpf").string());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("missing frame"), std::string::npos) << r.output;
}

TEST(CliVerify, NonMonotoneTimestampsWarnAndFail) {
  testing::TempDir dir;
  testing::ByteWriter w;
  testing::putHeader(w, 2, 0, 3, "c");
  testing::putFrame(w, 0, {{10, 1}, {5, 1}, {20, 1}});
  testing::writeBytes(dir / "nm.cpf", w.bytes());
  const auto r = runCli("verify " + (dir / "nm.cpf").string());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("warning"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("monoton"), std::string::npos) << r.output;
}

TEST(CliReport, EmptyDirectoryExitsOne) {
  testing::TempDir dir;
  EXPECT_EQ(runCli("report " + dir.path().string()).exit_code, 1);
}

TEST(CliBench, UnknownConfigurationExitsOne) {
  testing::TempDir dir;
  const auto r = runCli("bench run --configurations nonexistent --out " + dir.path().string());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("nonexistent"), std::string::npos);
}

TEST(CliBench, InvalidFlagValueExitsOne) {
  EXPECT_EQ(runCli("bench run --iterations -5").exit_code, 1);
  EXPECT_EQ(runCli("bench run --bogus").exit_code, 1);
}

TEST(CliBench, QuickRunThenReportInEveryFormat) {
  testing::TempDir dir;
  const auto out = dir / "results";
  const auto run = runCli("bench run --quick --out " + out.string());
  ASSERT_EQ(run.exit_code, 0) << run.output;

  // 6 configurations x 2 repeats.
  std::size_t csvs = 0;
  for (const auto& e : std::filesystem::directory_iterator(out)) {
    const auto name = e.path().filename().string();
    if (name.ends_with(".csv") && !name.ends_with(".mem.csv")) ++csvs;
  }
  EXPECT_EQ(csvs, 12u);
  EXPECT_TRUE(std::filesystem::exists(out / "manifest.txt"));

  const auto text = runCli("report " + out.string());
  EXPECT_EQ(text.exit_code, 0) << text.output;
  for (const char* label : {"baseline", "null", "direct-id", "buffered-id", "buffered-zstd", "buffered-realtime"}) {
    EXPECT_NE(text.output.find(label), std::string::npos) << label;
  }
  EXPECT_NE(text.output.find("direct-id / buffered-zstd = "), std::string::npos);

  const auto csv = runCli("report --format csv " + out.string());
  EXPECT_EQ(csv.exit_code, 0);
  const auto csv_lines = lines(csv.output);
  ASSERT_EQ(csv_lines.size(), 7u);
  EXPECT_EQ(csv_lines[0], "config,n,mean_ns,median_ns,q25_ns,q75_ns,min_ns,max_ns,stddev_ns,cv_pct,overhead_ns");
  EXPECT_TRUE(csv_lines[1].starts_with("baseline,1000,"));

  const auto plot = runCli("report --format plot " + out.string());
  EXPECT_EQ(plot.exit_code, 0);
  std::size_t data = 0;
  for (const auto& l : lines(plot.output)) {
    if (!l.empty() && l[0] != '#') ++data;
  }
  EXPECT_EQ(data, 6u);

  EXPECT_EQ(runCli("report --format svg " + out.string()).exit_code, 1);
}

TEST(CliBench, KeepTracesAreDecodable) {
  testing::TempDir dir;
  const auto out = dir / "r";
  const auto run = runCli("bench run --configurations buffered-realtime --iterations 50 --repeats 1 "
                          "--keep-traces --out " + out.string());
  ASSERT_EQ(run.exit_code, 0) << run.output;
  const auto trace = out / "traces" / "buffered-realtime-0" / "ch_start.cpf";
  EXPECT_EQ(runCli("decode --count-only " + trace.string()).output, "500\n");
  EXPECT_EQ(runCli("verify " + trace.string()).exit_code, 0);
}

TEST(CliBench, ConfigFileIsHonoured) {
  testing::TempDir dir;
  const std::string text = "iterations = 20\nrepeats = 1\nconfigurations = baseline,null\n";
  testing::writeBytes(dir / "c.conf", std::span(reinterpret_cast<const std::byte*>(text.data()), text.size()));
  const auto run = runCli("bench run --config " + (dir / "c.conf").string() + " --out " + (dir / "o").string());
  ASSERT_EQ(run.exit_code, 0) << run.output;
  EXPECT_TRUE(std::filesystem::exists(dir / "o" / "null-0.csv"));
  EXPECT_FALSE(std::filesystem::exists(dir / "o" / "direct-id-0.csv"));

  testing::writeBytes(dir / "bad.conf", std::span(reinterpret_cast<const std::byte*>("nope = 1\n"), 9));
  EXPECT_EQ(runCli("bench run --config " + (dir / "bad.conf").string()).exit_code, 1);
}

}  // namespace
}  // namespace blockprof
