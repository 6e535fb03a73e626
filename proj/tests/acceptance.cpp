// Acceptance suite: one [PASS]/[FAIL] line per criterion. Exit status is
// non-zero if any criterion fails.

#include <stdio.h>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "blockprof/bench.hpp"
#include "blockprof/codecs.hpp"
#include "blockprof/logformat.hpp"
#include "blockprof/profiler.hpp"
#include "blockprof/results.hpp"
#include "blockprof/stats.hpp"
#include "test_support.hpp"

namespace blockprof {
namespace {

using Clock = std::chrono::steady_clock;
using bench::Configuration;

// Pinned limits and tolerances.
constexpr double kConservationBudgetS = 30.0;
constexpr double kOverheadBudgetS = 600.0;
constexpr double kCodecBudgetS = 120.0;
constexpr double kMinDirectToBufferedRatio = 2.0;
constexpr double kStatsRelTolerance = 1e-9;
constexpr double kRatioTolerance = 1e-9;

constexpr std::array<Configuration, 4> kFileConfigurations{Configuration::DirectId, Configuration::BufferedId,
                                                           Configuration::BufferedZstd,
                                                           Configuration::BufferedRealtime};
constexpr std::array<HandlerKind, 3> kBufferedKinds{HandlerKind::BufferedId, HandlerKind::BufferedZstd,
                                                    HandlerKind::BufferedRealtime};

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail.clear();
    if (!detail.empty()) detail += "; ";
    pass = false;
    detail += why;
  }
  void note(const std::string& what) {
    if (!pass) return;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

double secondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double relErr(double got, double want) { return want == 0 ? std::abs(got) : std::abs(got - want) / std::abs(want); }

// Shared by criteria 1 and 2: decoded tags per configuration and channel.
std::map<std::string, std::vector<std::int32_t>> g_tag_sequences;

Outcome conservation(const std::filesystem::path& work) {
  Outcome out;
  const auto start = Clock::now();
  for (auto configuration : kFileConfigurations) {
    bench::BenchConfig config;
    config.configuration = configuration;
    config.iterations = 10'000;
    config.depth = 10;
    config.repeats = 1;
    config.keep_traces = true;
    const auto repeat = bench::runRepeat(config, 0, work);
    const std::string label(bench::label(configuration));
    if (!repeat.valid) out.fail(label + ": " + repeat.failure);
    for (auto channel : {bench::kStartChannel, bench::kEndChannel}) {
      const auto path = bench::traceDir(work, configuration, 0) / (std::string(channel) + ".cpf");
      try {
        const auto trace = logformat::decodeFile(path);
        if (trace.entries.size() != 100'000) {
          out.fail(label + "/" + std::string(channel) + " decoded " + std::to_string(trace.entries.size()));
        }
        if (!trace.report.seq_complete) out.fail(label + "/" + std::string(channel) + " seq incomplete");
        for (std::size_t i = 1; i < trace.entries.size(); ++i) {
          if (trace.entries[i].timestamp_ns < trace.entries[i - 1].timestamp_ns) {
            out.fail(label + "/" + std::string(channel) + " timestamp decreases at entry " + std::to_string(i));
            break;
          }
        }
        g_tag_sequences[label + "/" + std::string(channel)] = testing::tagsOf(trace.entries);
      } catch (const std::exception& e) {
        out.fail(label + "/" + std::string(channel) + ": " + e.what());
      }
    }
  }
  const double elapsed = secondsSince(start);
  if (elapsed >= kConservationBudgetS) out.fail("took " + fixed(elapsed) + " s");
  out.note("4 handlers x 2 channels x 100000 entries, " + fixed(elapsed) + " s");
  return out;
}

Outcome roundTripEquality() {
  Outcome out;
  for (auto channel : {bench::kStartChannel, bench::kEndChannel}) {
    const std::string ref_key = "direct-id/" + std::string(channel);
    if (!g_tag_sequences.contains(ref_key)) {
      out.fail("missing " + ref_key);
      continue;
    }
    const auto& ref = g_tag_sequences[ref_key];
    for (auto configuration : kFileConfigurations) {
      const std::string key = std::string(bench::label(configuration)) + "/" + std::string(channel);
      if (!g_tag_sequences.contains(key)) {
        out.fail("missing " + key);
      } else if (g_tag_sequences[key] != ref) {
        out.fail(key + " tag sequence differs from " + ref_key);
      }
    }
  }
  out.note("tag sequences identical across 4 handlers on both channels");
  return out;
}

int runCommand(const std::string& command, std::string& output) {
  FILE* pipe = ::popen((command + " 2>&1").c_str(), "r");
  if (pipe == nullptr) return -1;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) output.append(buf, n);
  const int status = ::pclose(pipe);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome overheadOrdering(const std::filesystem::path& work) {
  Outcome out;
  const auto start = Clock::now();
  const auto results = work / "overhead";
  std::string output;
  const int code = runCommand(std::string(BLOCKPROF_CLI_PATH) + " bench run --quick --iterations 200000 --repeats 3 --out " +
                                  results.string(),
                              output);
  if (code != 0) {
    out.fail("bench run exited " + std::to_string(code) + ": " + output.substr(0, 400));
    return out;
  }
  const auto c = stats::compare(loadResults(results));
  auto overhead = [&](std::string_view label) -> std::optional<double> {
    const auto i = c.find(label);
    if (!i) return std::nullopt;
    return c.rows[*i].mean_overhead_ns;
  };
  const auto null = overhead("null");
  const auto direct = overhead("direct-id");
  const auto id = overhead("buffered-id");
  const auto zstd = overhead("buffered-zstd");
  const auto rt = overhead("buffered-realtime");
  if (!null || !direct || !id || !zstd || !rt) {
    out.fail("missing configuration rows");
    return out;
  }
  if (!(*null < *id)) out.fail("null " + fixed(*null) + " ns >= buffered-id " + fixed(*id) + " ns");
  if (!(*null < *zstd)) out.fail("null " + fixed(*null) + " ns >= buffered-zstd " + fixed(*zstd) + " ns");
  double min_ratio = INFINITY;
  for (const auto& [name, value] : {std::pair{"buffered-id", *id}, {"buffered-zstd", *zstd}, {"buffered-realtime", *rt}}) {
    if (!(value < *direct)) out.fail(std::string(name) + " overhead not below direct-id");
    const double ratio = *direct / value;
    min_ratio = std::min(min_ratio, ratio);
    if (!(ratio >= kMinDirectToBufferedRatio)) out.fail("direct-id / " + std::string(name) + " = " + fixed(ratio));
  }
  const double elapsed = secondsSince(start);
  if (elapsed >= kOverheadBudgetS) out.fail("took " + fixed(elapsed) + " s");
  out.note("overhead ns: null " + fixed(*null, 1) + ", buffered-id " + fixed(*id, 1) + ", buffered-zstd " +
           fixed(*zstd, 1) + ", buffered-realtime " + fixed(*rt, 1) + ", direct-id " + fixed(*direct, 1) +
           "; min direct/buffered " + fixed(min_ratio) + "x; " + fixed(elapsed, 1) + " s");
  return out;
}

ProfilerConfig smallProfiler(HandlerKind kind, const std::filesystem::path& dir, std::uint32_t capacity) {
  ProfilerConfig p;
  p.handler = kind;
  p.output_dir = dir;
  p.block_capacity = capacity;
  p.num_blocks = 8;
  p.num_compression_workers = 2;
  return p;
}

Outcome syscallBound(const std::filesystem::path& work) {
  Outcome out;
  std::size_t cases = 0;
  for (std::uint32_t capacity : {1u, 5u, 64u, 1000u}) {
    for (std::uint64_t n : {0ull, 1ull, 63ull, 64ull, 65ull, 5'000ull}) {
      const auto dir = work / ("syscall-" + std::to_string(capacity) + "-" + std::to_string(n));
      for (auto kind : {HandlerKind::BufferedId, HandlerKind::DirectId}) {
        Profiler p(smallProfiler(kind, dir / std::string(toString(kind)), capacity));
        auto h = p.openChannel("c");
        for (std::uint64_t i = 0; i < n; ++i) logTS(h, static_cast<std::int32_t>(i));
        const auto ops = p.shutdown().channels.at(0).write_ops;
        const std::uint64_t bound = (n + capacity - 1) / capacity + 1;
        if (kind == HandlerKind::BufferedId && ops > bound) {
          out.fail("buffered-id C=" + std::to_string(capacity) + " N=" + std::to_string(n) + ": " +
                   std::to_string(ops) + " writes > " + std::to_string(bound));
        }
        if (kind == HandlerKind::DirectId && ops != n) {
          out.fail("direct-id N=" + std::to_string(n) + ": " + std::to_string(ops) + " writes");
        }
        ++cases;
      }
    }
  }
  out.note(std::to_string(cases) + " (handler, C, N) cases");
  return out;
}

Outcome codecContracts() {
  Outcome out;
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  for (CodecId codec : {CodecId::Identity, CodecId::Zstd, CodecId::Realtime}) {
    std::size_t failures = 0;
    for (int i = 0; i < 1000; ++i) {
      const std::size_t n = 1 + rng() % 65'536;
      const auto raw = (i % 2 == 0) ? testing::randomBytes(rng, n) : testing::monotoneBlock(n / 12 + 1, rng());
      try {
        if (codecs::decompress(codec, codecs::compress(codec, raw), raw.size()) != raw) ++failures;
      } catch (const std::exception&) {
        ++failures;
      }
    }
    if (failures > 0) out.fail(std::string(toString(codec)) + ": " + std::to_string(failures) + " roundtrip failures");
  }
  const auto block = testing::monotoneBlock(1'000'000);
  const auto packed = codecs::compress(CodecId::Zstd, block);
  if (!(packed.size() < block.size())) out.fail("zstd output " + std::to_string(packed.size()) + " not below raw");
  const double elapsed = secondsSince(start);
  if (elapsed >= kCodecBudgetS) out.fail("took " + fixed(elapsed) + " s");
  out.note("3000 roundtrips ok; 1M-entry block " + std::to_string(block.size()) + " -> " +
           std::to_string(packed.size()) + " bytes; " + fixed(elapsed) + " s");
  return out;
}

Outcome pipelineStress(const std::filesystem::path& work) {
  Outcome out;
  constexpr int kProducers = 4;
  constexpr int kPerProducer = 250'000;
  const auto start = Clock::now();
  for (int run = 0; run < 20; ++run) {
    const auto dir = work / ("stress-" + std::to_string(run));
    ProfilerConfig config = smallProfiler(HandlerKind::BufferedZstd, dir, 64);
    config.num_blocks = 32;
    config.num_compression_workers = 4;
    Profiler p(config);
    auto h = p.openChannel("c");
    std::vector<std::thread> producers;
    for (int t = 0; t < kProducers; ++t) {
      producers.emplace_back([&h, t] {
        for (int i = 0; i < kPerProducer; ++i) logTS(h, t * kPerProducer + i);
      });
    }
    for (auto& t : producers) t.join();
    const auto report = p.shutdown();
    const auto logged = report.channels.at(0).entries_logged;
    const auto decoded = logformat::decodeFile(dir / "c.cpf", false).report.entries;
    if (logged != 1'000'000 || decoded != logged) {
      out.fail("run " + std::to_string(run) + ": logged " + std::to_string(logged) + ", decoded " +
               std::to_string(decoded));
    }
    if (report.free_blocks != 32) {
      out.fail("run " + std::to_string(run) + ": free pool " + std::to_string(report.free_blocks) + " after drain");
    }
    std::filesystem::remove_all(dir);
  }
  out.note("20 runs x 1000000 entries conserved, pool back to 32; " + fixed(secondsSince(start), 1) + " s");
  return out;
}

Outcome statisticsOracle() {
  Outcome out;
  std::mt19937_64 rng(99);
  std::lognormal_distribution<double> dist(7.5, 0.6);
  std::vector<double> values(1'000'000);
  for (auto& v : values) v = dist(rng);
  const auto s = stats::summarize(values);

  double sum = 0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double stddev = std::sqrt(ss / static_cast<double>(values.size()));
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  auto q = [&](double p) {
    const double h = (static_cast<double>(sorted.size()) - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = static_cast<std::size_t>(std::ceil(h));
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  double worst = 0;
  for (const auto& [got, want] : {std::pair{s.mean_ns, mean}, {s.stddev_ns, stddev}, {s.median_ns, q(0.5)},
                                  {s.q25_ns, q(0.25)}, {s.q75_ns, q(0.75)}, {s.min_ns, sorted.front()},
                                  {s.max_ns, sorted.back()}, {s.cv_percent, 100 * stddev / mean}}) {
    worst = std::max(worst, relErr(got, want));
  }
  if (!(worst <= kStatsRelTolerance)) out.fail("summary rel error " + std::to_string(worst));

  std::vector<std::vector<std::uint64_t>> repeats(10, std::vector<std::uint64_t>(2'000'000));
  for (auto& r : repeats) {
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = i + 1;
  }
  const auto selected = stats::selectSteadyState(repeats);
  if (selected.size() != 10'000'000) out.fail("selected " + std::to_string(selected.size()));
  repeats.clear();

  stats::Summary base, direct, zstd;
  base.label = "baseline";
  base.mean_ns = 0.5;
  direct.label = "direct-id";
  direct.mean_ns = 0.5 + 14.022;
  zstd.label = "buffered-zstd";
  zstd.mean_ns = 0.5 + 2.28;
  const auto c = stats::compare({base, direct, zstd});
  const double ratio = c.ratios[*c.find("direct-id")][*c.find("buffered-zstd")];
  if (!(std::abs(ratio - 6.15) <= kRatioTolerance)) out.fail("ratio " + fixed(ratio, 12));

  char err[32];
  std::snprintf(err, sizeof err, "%.2e", worst);
  out.note("max rel error " + std::string(err) + "; selected " + std::to_string(selected.size()) +
           "; ratio " + fixed(ratio, 4));
  return out;
}

Outcome shutdownFlush(const std::filesystem::path& work) {
  Outcome out;
  constexpr std::uint64_t C = 64;
  std::size_t cases = 0;
  for (auto kind : kBufferedKinds) {
    for (std::uint64_t k : {std::uint64_t{0}, std::uint64_t{1}, C - 1, C, C + 1, 3 * C + 7}) {
      const auto dir = work / ("flush-" + std::string(toString(kind)) + "-" + std::to_string(k));
      {
        Profiler p(smallProfiler(kind, dir, static_cast<std::uint32_t>(C)));
        auto h = p.openChannel("c");
        for (std::uint64_t i = 0; i < k; ++i) logTS(h, static_cast<std::int32_t>(i));
        p.shutdown();
      }
      try {
        const auto trace = logformat::decodeFile(dir / "c.cpf");
        bool in_order = trace.entries.size() == k;
        for (std::size_t i = 0; in_order && i < trace.entries.size(); ++i) {
          in_order = trace.entries[i].tag == static_cast<std::int32_t>(i);
        }
        if (!in_order) {
          out.fail(std::string(toString(kind)) + " k=" + std::to_string(k) + ": decoded " +
                   std::to_string(trace.entries.size()));
        }
      } catch (const std::exception& e) {
        out.fail(std::string(toString(kind)) + " k=" + std::to_string(k) + ": " + e.what());
      }
      ++cases;
    }
  }
  out.note(std::to_string(cases) + " (handler, k) cases with C=64");
  return out;
}

}  // namespace
}  // namespace blockprof

int main() {
  using namespace blockprof;
  testing::TempDir work;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 conservation", [&] { return conservation(work.path()); }},
      {"2 round-trip equality", [] { return roundTripEquality(); }},
      {"3 overhead ordering", [&] { return overheadOrdering(work.path()); }},
      {"4 syscall bound", [&] { return syscallBound(work.path()); }},
      {"5 codec contracts", [] { return codecContracts(); }},
      {"6 pipeline stress", [&] { return pipelineStress(work.path()); }},
      {"7 statistics oracle", [] { return statisticsOracle(); }},
      {"8 shutdown flush", [&] { return shutdownFlush(work.path()); }},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome.fail(std::string("exception: ") + e.what());
    }
    if (!outcome.pass) ++failed;
    std::printf("[%s] %s: %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(), outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
