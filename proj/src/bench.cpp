#include "blockprof/bench.hpp"

#include <time.h>
#include <unistd.h>

#include <fstream>
#include <thread>

#include "blockprof/kv_file.hpp"

namespace blockprof::bench {

namespace {

constexpr std::array<std::pair<Configuration, std::string_view>, 6> kLabels{{
    {Configuration::Baseline, "baseline"},
    {Configuration::Null, "null"},
    {Configuration::DirectId, "direct-id"},
    {Configuration::BufferedId, "buffered-id"},
    {Configuration::BufferedZstd, "buffered-zstd"},
    {Configuration::BufferedRealtime, "buffered-realtime"},
}};

// Keeps the workload's return values observable.
volatile std::uint64_t g_workload_sink = 0;

template <typename Probe>
void timeIterations(Workload<Probe>& workload, const BenchConfig& config, MeasurementSet& set) {
  set.elapsed_ns.assign(config.iterations, 0);
  set.memory.clear();
  set.memory.reserve(config.iterations / config.memory_sample_stride + 1);
  const auto depth = static_cast<std::int32_t>(config.depth);
  std::uint64_t sink = 0;
  for (std::uint64_t i = 0; i < config.iterations; ++i) {
    const std::uint64_t start = now_ns();
    sink += workload.monitoredMethod(config.method_time_ns, depth);
    set.elapsed_ns[i] = now_ns() - start;
    if ((i + 1) % config.memory_sample_stride == 0) set.memory.push_back({i, residentBytes()});
  }
  g_workload_sink = sink;
}

}  // namespace

std::string_view label(Configuration configuration) noexcept {
  for (const auto& [c, l] : kLabels) {
    if (c == configuration) return l;
  }
  return "unknown";
}

std::optional<Configuration> parseConfiguration(std::string_view text) noexcept {
  for (const auto& [c, l] : kLabels) {
    if (l == text) return c;
  }
  return std::nullopt;
}

std::optional<HandlerKind> handlerFor(Configuration configuration) noexcept {
  switch (configuration) {
    case Configuration::Baseline:
      return std::nullopt;
    case Configuration::Null:
      return HandlerKind::Null;
    case Configuration::DirectId:
      return HandlerKind::DirectId;
    case Configuration::BufferedId:
      return HandlerKind::BufferedId;
    case Configuration::BufferedZstd:
      return HandlerKind::BufferedZstd;
    case Configuration::BufferedRealtime:
      return HandlerKind::BufferedRealtime;
  }
  return std::nullopt;
}

void BenchConfig::validate() const {
  if (iterations == 0) throw ConfigError("iterations must be positive");
  if (depth == 0) throw ConfigError("depth must be positive");
  if (depth > static_cast<std::uint32_t>(INT32_MAX)) throw ConfigError("depth exceeds 32-bit tag range");
  if (repeats == 0) throw ConfigError("repeats must be positive");
  if (memory_sample_stride == 0) throw ConfigError("memory_sample_stride must be positive");
  profiler.validate();
}

std::uint64_t residentBytes() noexcept {
  std::ifstream statm("/proc/self/statm");
  std::uint64_t size = 0;
  std::uint64_t resident = 0;
  if (!(statm >> size >> resident)) return 0;
  return resident * static_cast<std::uint64_t>(::sysconf(_SC_PAGESIZE));
}

std::filesystem::path traceDir(const std::filesystem::path& out_dir, Configuration configuration,
                               std::uint32_t repeat) {
  return out_dir / "traces" / (std::string(label(configuration)) + "-" + std::to_string(repeat));
}

RepeatOutcome runRepeat(const BenchConfig& config, std::uint32_t repeat, const std::filesystem::path& out_dir) {
  config.validate();
  RepeatOutcome outcome;
  outcome.measurements.label = std::string(label(config.configuration));
  outcome.measurements.repeat = repeat;

  const auto kind = handlerFor(config.configuration);
  if (!kind) {
    Workload<NoProbe> workload;
    timeIterations(workload, config, outcome.measurements);
  } else {
    ProfilerConfig pc = config.profiler;
    pc.handler = *kind;
    pc.output_dir = traceDir(out_dir, config.configuration, repeat);
    pc.channel_names.clear();
    Profiler profiler(pc);
    Workload<ChannelProbe> workload(
        ChannelProbe{profiler.openChannel(kStartChannel), profiler.openChannel(kEndChannel)});
    timeIterations(workload, config, outcome.measurements);
    FlushReport report = profiler.shutdown();

    const std::uint64_t expected = config.iterations * config.depth;
    if (!report.ok) {
      outcome.valid = false;
      outcome.failure = "flush failed: " + (report.errors.empty() ? std::string("unknown") : report.errors.front());
    }
    for (const auto& ch : report.channels) {
      if (producesFile(*kind) && ch.entries_written != expected && outcome.valid) {
        outcome.valid = false;
        outcome.failure = "channel " + ch.name + " wrote " + std::to_string(ch.entries_written) +
                          " entries, expected " + std::to_string(expected);
      }
    }
    if (!config.keep_traces) {
      std::error_code ec;
      for (const auto& ch : report.channels) {
        if (!ch.path.empty()) std::filesystem::remove(ch.path, ec);
      }
      std::filesystem::remove(pc.output_dir, ec);  // only if empty
    }
    outcome.flush = std::move(report);
  }

  std::filesystem::create_directories(out_dir);
  writeMeasurementSet(outcome.measurements, out_dir);
  return outcome;
}

LaunchResult launchInProcess(const BenchConfig& config, std::uint32_t repeat, const std::filesystem::path& out_dir) {
  try {
    RepeatOutcome outcome = runRepeat(config, repeat, out_dir);
    return {outcome.valid, outcome.failure};
  } catch (const std::exception& e) {
    return {false, e.what()};
  }
}

HostInfo hostInfo() {
  HostInfo info;
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.starts_with("model name")) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) info.cpu_model = line.substr(line.find_first_not_of(' ', colon + 1));
      break;
    }
  }
  if (info.cpu_model.empty()) info.cpu_model = "unknown";
  info.cores = std::thread::hardware_concurrency();
  timespec res{};
  if (::clock_getres(CLOCK_MONOTONIC, &res) == 0) {
    info.clock_resolution_ns = static_cast<std::uint64_t>(res.tv_sec) * 1'000'000'000ull +
                               static_cast<std::uint64_t>(res.tv_nsec);
  }
  return info;
}

SuiteResult runSuite(const SuiteConfig& suite) {
  suite.base.validate();
  if (suite.configurations.empty()) throw ConfigError("no configurations to run");
  std::filesystem::create_directories(suite.out_dir);

  const HostInfo host = hostInfo();
  std::vector<std::string> labels;
  for (auto c : suite.configurations) labels.emplace_back(label(c));

  std::vector<std::pair<std::string, std::string>> manifest{
      {"format", "blockprof-results-1"},
      {"host.cpu_model", host.cpu_model},
      {"host.cores", std::to_string(host.cores)},
      {"host.clock_resolution_ns", std::to_string(host.clock_resolution_ns)},
      {"iterations", std::to_string(suite.base.iterations)},
      {"depth", std::to_string(suite.base.depth)},
      {"method_time_ns", std::to_string(suite.base.method_time_ns)},
      {"repeats", std::to_string(suite.base.repeats)},
      {"memory_sample_stride", std::to_string(suite.base.memory_sample_stride)},
      {"num_blocks", std::to_string(suite.base.profiler.num_blocks)},
      {"block_capacity", std::to_string(suite.base.profiler.block_capacity)},
      {"num_compression_workers", std::to_string(suite.base.profiler.num_compression_workers)},
      {"zstd_level", std::to_string(suite.base.profiler.zstd_level)},
      {"stddev", "population"},
      {"selection", "second half of each repeat"},
      {"launcher", suite.launcher_label},
      {"configurations", joinList(labels)},
  };
  const auto manifest_path = suite.out_dir / kManifestFile;
  writeKeyValueFile(manifest_path, manifest);

  const RepeatLauncher launcher = suite.launcher ? suite.launcher : RepeatLauncher(launchInProcess);
  SuiteResult result;
  result.out_dir = suite.out_dir;
  for (auto configuration : suite.configurations) {
    BenchConfig config = suite.base;
    config.configuration = configuration;
    for (std::uint32_t k = 0; k < config.repeats; ++k) {
      const std::string name = std::string(label(configuration)) + "#" + std::to_string(k);
      if (suite.log) suite.log("running " + name);
      const LaunchResult launched = launcher(config, k, suite.out_dir);
      result.order.push_back(name);
      ++result.repeats_run;
      if (!launched.valid) {
        ++result.failures;
        if (suite.log) suite.log(name + " failed: " + launched.failure);
      }
      manifest.emplace_back("repeat." + std::string(label(configuration)) + "." + std::to_string(k),
                            launched.valid ? std::string("ok") : "failed: " + launched.failure);
      writeKeyValueFile(manifest_path, manifest);
    }
  }
  manifest.emplace_back("order", joinList(result.order));
  manifest.emplace_back("failures", std::to_string(result.failures));
  writeKeyValueFile(manifest_path, manifest);
  std::error_code ec;
  std::filesystem::remove(suite.out_dir / "traces", ec);  // only if empty
  return result;
}

}  // namespace blockprof::bench
