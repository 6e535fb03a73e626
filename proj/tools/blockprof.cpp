// blockprof: run the overhead benchmark, decode and verify trace files,
// and summarize benchmark results.
//
// Exit codes: 0 success, 1 usage/format error, 2 benchmark finished with
// failed repeats.

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "blockprof/bench.hpp"
#include "blockprof/cli_config.hpp"
#include "blockprof/logformat.hpp"
#include "blockprof/stats.hpp"

extern char** environ;

namespace {

using namespace blockprof;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitPartial = 2;

struct BenchFlags {
  std::string config_path;
  std::string configurations;
  std::optional<std::uint64_t> iterations;
  std::optional<std::uint32_t> depth;
  std::optional<std::uint32_t> repeats;
  std::optional<std::uint64_t> method_time_ns;
  std::string out;
  bool quick = false;
  bool keep_traces = false;
  bool in_process = false;
};

// Settings a child process needs to reproduce one repeat exactly.
struct RepeatFlags {
  std::string configuration;
  std::uint32_t repeat = 0;
  std::string out;
  std::uint64_t iterations = 0;
  std::uint32_t depth = 0;
  std::uint64_t method_time_ns = 0;
  std::uint64_t stride = 0;
  std::uint32_t num_blocks = 0;
  std::uint32_t block_capacity = 0;
  std::uint32_t workers = 0;
  int zstd_level = 0;
  std::int64_t drain_timeout_ms = 0;
  bool keep_traces = false;
};

std::string statusFileName(std::string_view label, std::uint32_t repeat) {
  return std::string(label) + "-" + std::to_string(repeat) + ".status";
}

// Re-executes this binary as `bench repeat` so every repeat starts in a
// fresh process.
bench::RepeatLauncher subprocessLauncher() {
  return [](const bench::BenchConfig& config, std::uint32_t repeat,
            const std::filesystem::path& out_dir) -> bench::LaunchResult {
    const std::string label(bench::label(config.configuration));
    std::vector<std::string> args{
        "/proc/self/exe",
        "bench",
        "repeat",
        "--configuration", label,
        "--repeat", std::to_string(repeat),
        "--out", out_dir.string(),
        "--iterations", std::to_string(config.iterations),
        "--depth", std::to_string(config.depth),
        "--time", std::to_string(config.method_time_ns),
        "--stride", std::to_string(config.memory_sample_stride),
        "--num-blocks", std::to_string(config.profiler.num_blocks),
        "--block-capacity", std::to_string(config.profiler.block_capacity),
        "--workers", std::to_string(config.profiler.num_compression_workers),
        "--zstd-level", std::to_string(config.profiler.zstd_level),
        "--drain-timeout-ms", std::to_string(config.profiler.drain_timeout.count()),
    };
    if (config.keep_traces) args.emplace_back("--keep-traces");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);

    std::fflush(nullptr);
    pid_t pid = 0;
    if (const int rc = ::posix_spawn(&pid, "/proc/self/exe", nullptr, nullptr, argv.data(), environ); rc != 0) {
      return {false, std::string("spawn failed: ") + std::strerror(rc)};
    }
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0) {
      if (errno != EINTR) return {false, "waitpid failed"};
    }

    bench::LaunchResult result;
    const auto status_path = out_dir / statusFileName(label, repeat);
    try {
      for (const auto& kv : readKeyValueFile(status_path)) {
        if (kv.key == "valid") result.valid = kv.value == "true";
        if (kv.key == "failure") result.failure = kv.value;
      }
      std::filesystem::remove(status_path);
    } catch (const std::exception&) {
      result = {false, "no status from child"};
    }
    if (!WIFEXITED(status) || (WEXITSTATUS(status) != 0 && WEXITSTATUS(status) != kExitPartial)) {
      result.valid = false;
      if (result.failure.empty()) result.failure = "child exited abnormally (status " + std::to_string(status) + ")";
    }
    return result;
  };
}

int cmdBenchRun(const BenchFlags& flags) {
  CliConfig config;
  try {
    if (!flags.config_path.empty()) config = loadCliConfig(flags.config_path);
    if (flags.quick) {
      config.bench.iterations = 1'000;
      config.bench.repeats = 2;
    }
    if (!flags.configurations.empty()) config.configurations = parseConfigurationList(flags.configurations);
    if (flags.iterations) config.bench.iterations = *flags.iterations;
    if (flags.depth) config.bench.depth = *flags.depth;
    if (flags.repeats) config.bench.repeats = *flags.repeats;
    if (flags.method_time_ns) config.bench.method_time_ns = *flags.method_time_ns;
    if (!flags.out.empty()) config.out_dir = flags.out;
    if (flags.keep_traces) config.bench.keep_traces = true;
    config.bench.validate();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }

  bench::SuiteConfig suite;
  suite.base = config.bench;
  suite.configurations = config.configurations;
  suite.out_dir = config.out_dir;
  suite.log = [](const std::string& line) { std::cerr << line << '\n'; };
  if (!flags.in_process) {
    suite.launcher = subprocessLauncher();
    suite.launcher_label = "process-per-repeat";
  }

  try {
    const auto result = bench::runSuite(suite);
    std::cout << result.repeats_run << " repeats, " << result.failures << " failed; results in "
              << result.out_dir.string() << '\n';
    return result.ok() ? kExitOk : kExitPartial;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}

int cmdBenchRepeat(const RepeatFlags& flags) {
  bench::BenchConfig config;
  const auto configuration = bench::parseConfiguration(flags.configuration);
  if (!configuration) {
    std::cerr << "error: unknown configuration '" << flags.configuration << "'\n";
    return kExitError;
  }
  config.configuration = *configuration;
  config.iterations = flags.iterations;
  config.depth = flags.depth;
  config.method_time_ns = flags.method_time_ns;
  config.memory_sample_stride = flags.stride;
  config.profiler.num_blocks = flags.num_blocks;
  config.profiler.block_capacity = flags.block_capacity;
  config.profiler.num_compression_workers = flags.workers;
  config.profiler.zstd_level = flags.zstd_level;
  config.profiler.drain_timeout = std::chrono::milliseconds(flags.drain_timeout_ms);
  config.keep_traces = flags.keep_traces;

  const std::filesystem::path out(flags.out);
  bench::LaunchResult result;
  try {
    std::filesystem::create_directories(out);
    result = bench::launchInProcess(config, flags.repeat, out);
  } catch (const std::exception& e) {
    result = {false, e.what()};
  }
  try {
    writeKeyValueFile(out / statusFileName(flags.configuration, flags.repeat),
                      {{"valid", result.valid ? "true" : "false"}, {"failure", result.failure}});
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  if (!result.valid) std::cerr << "repeat failed: " << result.failure << '\n';
  return result.valid ? kExitOk : kExitPartial;
}

int cmdDecode(const std::string& path, bool count_only) {
  try {
    const auto trace = logformat::decodeFile(path, !count_only);
    if (count_only) {
      std::cout << trace.report.entries << '\n';
      return kExitOk;
    }
    std::string out = "seq,timestamp_ns,tag\n";
    out.reserve(1 << 20);
    for (std::size_t i = 0; i < trace.entries.size(); ++i) {
      out += std::to_string(i);
      out += ',';
      out += std::to_string(trace.entries[i].timestamp_ns);
      out += ',';
      out += std::to_string(trace.entries[i].tag);
      out += '\n';
      if (out.size() > (1 << 20)) {
        std::fwrite(out.data(), 1, out.size(), stdout);
        out.clear();
      }
    }
    std::fwrite(out.data(), 1, out.size(), stdout);
    return kExitOk;
  } catch (const logformat::FormatError& e) {
    std::cerr << "error: " << path << ": " << e.what() << '\n';
    return kExitError;
  }
}

int cmdVerify(const std::string& path) {
  const auto report = logformat::verifyFile(path);
  std::cout << "verify " << path << '\n';
  for (const auto& check : report.checks) {
    std::cout << (check.passed ? "  [ok]   " : "  [FAIL] ") << check.name << ": " << check.detail << '\n';
    if (!check.passed && check.name == "monotonic") std::cerr << "warning: non-monotone timestamps: " << check.detail << '\n';
  }
  std::cout << (report.ok() ? "PASS" : "FAIL") << '\n';
  return report.ok() ? kExitOk : kExitError;
}

int cmdReport(const std::string& dir, const std::string& format) {
  try {
    const auto results = loadResults(dir);
    const auto comparison = stats::compare(results);
    if (format == "csv") {
      std::cout << stats::renderCsv(comparison);
    } else if (format == "plot") {
      std::cout << stats::renderPlotData(comparison);
    } else {
      std::cout << stats::renderText(comparison);
    }
    for (const auto& w : comparison.warnings) {
      if (format != "text") std::cerr << "warning: " << w << '\n';
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"blockprof: timestamp profiler overhead benchmark and trace tools"};
  app.require_subcommand(1);

  auto* bench_cmd = app.add_subcommand("bench", "Overhead benchmark");
  bench_cmd->require_subcommand(1);

  BenchFlags bench_flags;
  auto* run = bench_cmd->add_subcommand("run", "Run every configuration, each repeat in a fresh process");
  run->add_option("--config", bench_flags.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  run->add_option("--configurations", bench_flags.configurations,
                  "Comma list: baseline,null,direct-id,buffered-id,buffered-zstd,buffered-realtime");
  run->add_option("--iterations", bench_flags.iterations)->check(CLI::PositiveNumber);
  run->add_option("--depth", bench_flags.depth)->check(CLI::PositiveNumber);
  run->add_option("--repeats", bench_flags.repeats)->check(CLI::PositiveNumber);
  run->add_option("--time", bench_flags.method_time_ns, "Busy-wait ns in the innermost call");
  run->add_option("--out", bench_flags.out, "Results directory (default: results)");
  run->add_flag("--quick", bench_flags.quick, "1,000 iterations x 2 repeats");
  run->add_flag("--keep-traces", bench_flags.keep_traces, "Keep .cpf trace files of every repeat");
  run->add_flag("--in-process", bench_flags.in_process, "Run repeats in this process");

  RepeatFlags repeat_flags;
  auto* repeat = bench_cmd->add_subcommand("repeat", "Run a single repeat (used by bench run)");
  repeat->group("");
  repeat->add_option("--configuration", repeat_flags.configuration)->required();
  repeat->add_option("--repeat", repeat_flags.repeat)->required();
  repeat->add_option("--out", repeat_flags.out)->required();
  repeat->add_option("--iterations", repeat_flags.iterations)->required();
  repeat->add_option("--depth", repeat_flags.depth)->required();
  repeat->add_option("--time", repeat_flags.method_time_ns)->required();
  repeat->add_option("--stride", repeat_flags.stride)->required();
  repeat->add_option("--num-blocks", repeat_flags.num_blocks)->required();
  repeat->add_option("--block-capacity", repeat_flags.block_capacity)->required();
  repeat->add_option("--workers", repeat_flags.workers)->required();
  repeat->add_option("--zstd-level", repeat_flags.zstd_level)->required();
  repeat->add_option("--drain-timeout-ms", repeat_flags.drain_timeout_ms)->required();
  repeat->add_flag("--keep-traces", repeat_flags.keep_traces);

  std::string decode_path;
  bool decode_csv = false;
  bool decode_count = false;
  auto* decode = app.add_subcommand("decode", "Print a .cpf trace as CSV (seq,timestamp_ns,tag)");
  decode->add_option("path", decode_path)->required();
  auto* csv_flag = decode->add_flag("--csv", decode_csv, "CSV output (default)");
  decode->add_flag("--count-only", decode_count, "Print only the entry count")->excludes(csv_flag);

  std::string verify_path;
  auto* verify = app.add_subcommand("verify", "Check a .cpf trace for integrity and completeness");
  verify->add_option("path", verify_path)->required();

  std::string report_dir;
  std::string report_format = "text";
  auto* report = app.add_subcommand("report", "Summarize a results directory");
  report->add_option("results_dir", report_dir)->required();
  report->add_option("--format", report_format)->check(CLI::IsMember({"text", "csv", "plot"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  if (*run) return cmdBenchRun(bench_flags);
  if (*repeat) return cmdBenchRepeat(repeat_flags);
  if (*decode) return cmdDecode(decode_path, decode_count);
  if (*verify) return cmdVerify(verify_path);
  if (*report) return cmdReport(report_dir, report_format);
  return kExitError;
}
