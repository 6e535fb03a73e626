#pragma once

// Synthetic benchmark workload and runner. Each iteration calls
// monitoredMethod(time, depth), which brackets extractedMethod with a
// ch_start / ch_end entry and recurses `depth` levels before busy-waiting
// `time` ns at the bottom.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blockprof/clock.hpp"
#include "blockprof/profiler.hpp"
#include "blockprof/results.hpp"

namespace blockprof::bench {

/// Baseline runs the bare workload; the rest instrument it with a handler.
enum class Configuration : std::uint8_t {
  Baseline,
  Null,
  DirectId,
  BufferedId,
  BufferedZstd,
  BufferedRealtime,
};

inline constexpr std::array<Configuration, 6> kAllConfigurations{
    Configuration::Baseline,   Configuration::Null,         Configuration::DirectId,
    Configuration::BufferedId, Configuration::BufferedZstd, Configuration::BufferedRealtime,
};

std::string_view label(Configuration configuration) noexcept;
std::optional<Configuration> parseConfiguration(std::string_view label) noexcept;
std::optional<HandlerKind> handlerFor(Configuration configuration) noexcept;

inline constexpr std::string_view kStartChannel = "ch_start";
inline constexpr std::string_view kEndChannel = "ch_end";

struct BenchConfig {
  std::uint64_t iterations = 2'000'000;
  std::uint32_t depth = 10;
  std::uint64_t method_time_ns = 0;
  std::uint32_t repeats = 10;
  Configuration configuration = Configuration::Baseline;
  std::uint64_t memory_sample_stride = 1'000;
  // handler and output_dir are set per repeat.
  ProfilerConfig profiler;
  bool keep_traces = false;

  void validate() const;
};

struct NoProbe {
  void start(std::int32_t) noexcept {}
  void end(std::int32_t) noexcept {}
};

struct ChannelProbe {
  ChannelHandle start_channel;
  ChannelHandle end_channel;

  void start(std::int32_t depth) noexcept { logTS(start_channel, depth); }
  void end(std::int32_t depth) noexcept { logTS(end_channel, depth); }
};

/// Spins on the monotonic clock for `time_ns`; returns the last reading.
/// Reads the clock at least once even for time_ns == 0.
struct BusyWait {
  std::uint64_t operator()(std::uint64_t time_ns) const noexcept {
    const std::uint64_t exit_time = now_ns() + time_ns;
    std::uint64_t current;
    do {
      current = now_ns();
    } while (current < exit_time);
    return current;
  }
};

template <typename Probe, typename Leaf = BusyWait>
class Workload {
 public:
  explicit Workload(Probe probe = {}, Leaf leaf = {}) : probe_(std::move(probe)), leaf_(std::move(leaf)) {}

  /// The end entry is logged even when the leaf throws.
  [[gnu::noinline]] std::uint64_t monitoredMethod(std::uint64_t time_ns, std::int32_t depth) {
    probe_.start(depth);
    const EndGuard guard{probe_, depth};
    return extractedMethod(time_ns, depth);
  }

  [[gnu::noinline]] std::uint64_t extractedMethod(std::uint64_t time_ns, std::int32_t depth) {
    if (depth > 1) return monitoredMethod(time_ns, depth - 1);
    return leaf_(time_ns);
  }

  Probe& probe() noexcept { return probe_; }

 private:
  struct EndGuard {
    Probe& probe;
    std::int32_t depth;
    ~EndGuard() { probe.end(depth); }
  };

  Probe probe_;
  Leaf leaf_;
};

/// Resident set size of this process, from /proc/self/statm. 0 if unavailable.
std::uint64_t residentBytes() noexcept;

struct RepeatOutcome {
  MeasurementSet measurements;
  bool valid = true;
  std::string failure;
  std::optional<FlushReport> flush;  // instrumented configurations only
};

/// Runs one repeat with a fresh profiler writing under
/// <out_dir>/traces/<label>-<repeat>/, and writes the result files into
/// out_dir. Trace files are removed afterwards unless keep_traces is set.
RepeatOutcome runRepeat(const BenchConfig& config, std::uint32_t repeat, const std::filesystem::path& out_dir);

std::filesystem::path traceDir(const std::filesystem::path& out_dir, Configuration configuration,
                               std::uint32_t repeat);

struct LaunchResult {
  bool valid = true;
  std::string failure;
};

/// Executes one repeat of `config.configuration`. The default runs
/// in-process; the CLI substitutes one that spawns a fresh process.
using RepeatLauncher =
    std::function<LaunchResult(const BenchConfig& config, std::uint32_t repeat, const std::filesystem::path& out_dir)>;

LaunchResult launchInProcess(const BenchConfig& config, std::uint32_t repeat, const std::filesystem::path& out_dir);

struct HostInfo {
  std::string cpu_model;
  unsigned cores = 0;
  std::uint64_t clock_resolution_ns = 0;
};

HostInfo hostInfo();

struct SuiteConfig {
  BenchConfig base;
  std::vector<Configuration> configurations{kAllConfigurations.begin(), kAllConfigurations.end()};
  std::filesystem::path out_dir;
  RepeatLauncher launcher;                          // defaults to launchInProcess
  std::function<void(const std::string&)> log;      // progress lines, optional
  std::string launcher_label = "in-process";
};

struct SuiteResult {
  std::filesystem::path out_dir;
  std::vector<std::string> order;  // "<label>#<repeat>" in execution order
  std::size_t repeats_run = 0;
  std::size_t failures = 0;

  bool ok() const noexcept { return failures == 0; }
};

/// Runs every configuration `repeats` times in the listed order and writes
/// the manifest. A failed repeat is recorded and the suite continues.
SuiteResult runSuite(const SuiteConfig& suite);

}  // namespace blockprof::bench
