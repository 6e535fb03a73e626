#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "blockprof/bench.hpp"
#include "blockprof/kv_file.hpp"

namespace blockprof {

/// Settings for `blockprof bench run`, defaulting to the reference protocol:
/// 32 blocks x 1,000,000 entries, 4 workers, 2,000,000 iterations, depth 10,
/// time 0, 10 repeats.
struct CliConfig {
  bench::BenchConfig bench;
  std::vector<bench::Configuration> configurations{bench::kAllConfigurations.begin(),
                                                   bench::kAllConfigurations.end()};
  std::filesystem::path out_dir = "results";
};

/// Recognised keys: iterations, depth, method_time_ns, repeats,
/// memory_sample_stride, configurations, num_blocks, block_capacity,
/// num_compression_workers, zstd_level, drain_timeout_ms, output_dir,
/// keep_traces. Anything else is a ConfigError naming the line.
void applyConfig(CliConfig& config, const std::vector<KeyValueLine>& lines);

CliConfig loadCliConfig(const std::filesystem::path& path);

/// Comma-separated configuration labels; ConfigError on an unknown label.
std::vector<bench::Configuration> parseConfigurationList(std::string_view text);

}  // namespace blockprof
