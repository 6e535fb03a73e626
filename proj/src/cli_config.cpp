#include "blockprof/cli_config.hpp"

#include <charconv>
#include <limits>

namespace blockprof {

namespace {

template <typename T>
T parseNumber(const KeyValueLine& kv, T min = 0) {
  T value{};
  const auto* end = kv.value.data() + kv.value.size();
  const auto [ptr, ec] = std::from_chars(kv.value.data(), end, value);
  if (ec != std::errc{} || ptr != end || kv.value.empty() || value < min) {
    throw ConfigError("line " + std::to_string(kv.line) + ": invalid value '" + kv.value + "' for " + kv.key);
  }
  return value;
}

bool parseBool(const KeyValueLine& kv) {
  if (kv.value == "true" || kv.value == "1" || kv.value == "yes") return true;
  if (kv.value == "false" || kv.value == "0" || kv.value == "no") return false;
  throw ConfigError("line " + std::to_string(kv.line) + ": invalid boolean '" + kv.value + "' for " + kv.key);
}

}  // namespace

std::vector<bench::Configuration> parseConfigurationList(std::string_view text) {
  std::vector<bench::Configuration> out;
  for (const auto& item : splitList(text)) {
    const auto c = bench::parseConfiguration(item);
    if (!c) throw ConfigError("unknown configuration '" + item + "'");
    out.push_back(*c);
  }
  if (out.empty()) throw ConfigError("empty configuration list");
  return out;
}

void applyConfig(CliConfig& config, const std::vector<KeyValueLine>& lines) {
  auto& b = config.bench;
  auto& p = config.bench.profiler;
  for (const auto& kv : lines) {
    if (kv.key == "iterations") {
      b.iterations = parseNumber<std::uint64_t>(kv, 1);
    } else if (kv.key == "depth") {
      b.depth = parseNumber<std::uint32_t>(kv, 1);
    } else if (kv.key == "method_time_ns") {
      b.method_time_ns = parseNumber<std::uint64_t>(kv);
    } else if (kv.key == "repeats") {
      b.repeats = parseNumber<std::uint32_t>(kv, 1);
    } else if (kv.key == "memory_sample_stride") {
      b.memory_sample_stride = parseNumber<std::uint64_t>(kv, 1);
    } else if (kv.key == "configurations") {
      try {
        config.configurations = parseConfigurationList(kv.value);
      } catch (const ConfigError& e) {
        throw ConfigError("line " + std::to_string(kv.line) + ": " + e.what());
      }
    } else if (kv.key == "num_blocks") {
      p.num_blocks = parseNumber<std::uint32_t>(kv, 1);
    } else if (kv.key == "block_capacity") {
      p.block_capacity = parseNumber<std::uint32_t>(kv, 1);
    } else if (kv.key == "num_compression_workers") {
      p.num_compression_workers = parseNumber<std::uint32_t>(kv, 1);
    } else if (kv.key == "zstd_level") {
      p.zstd_level = parseNumber<int>(kv, std::numeric_limits<int>::min());
    } else if (kv.key == "drain_timeout_ms") {
      p.drain_timeout = std::chrono::milliseconds(parseNumber<std::int64_t>(kv, 1));
    } else if (kv.key == "output_dir") {
      if (kv.value.empty()) throw ConfigError("line " + std::to_string(kv.line) + ": empty output_dir");
      config.out_dir = kv.value;
    } else if (kv.key == "keep_traces") {
      b.keep_traces = parseBool(kv);
    } else {
      throw ConfigError("line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
    }
  }
}

CliConfig loadCliConfig(const std::filesystem::path& path) {
  CliConfig config;
  try {
    applyConfig(config, readKeyValueFile(path));
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.starts_with(path.string())) throw;
    throw ConfigError(path.string() + ": " + what);
  }
  return config;
}

}  // namespace blockprof
