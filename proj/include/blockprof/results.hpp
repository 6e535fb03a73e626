#pragma once

// On-disk layout of a benchmark results directory:
//
//   manifest.txt            key=value run metadata and per-repeat status
//   <label>-<k>.csv         iteration,elapsed_ns
//   <label>-<k>.mem.csv     iteration,resident_bytes

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "blockprof/kv_file.hpp"

namespace blockprof {

inline constexpr std::string_view kManifestFile = "manifest.txt";

class ResultsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MemorySample {
  std::uint64_t iteration = 0;
  std::uint64_t resident_bytes = 0;
};

/// Timings of one benchmark repeat.
struct MeasurementSet {
  std::string label;
  std::uint32_t repeat = 0;
  std::vector<std::uint64_t> elapsed_ns;
  std::vector<MemorySample> memory;
};

std::string resultFileName(std::string_view label, std::uint32_t repeat);
std::string memoryFileName(std::string_view label, std::uint32_t repeat);

void writeMeasurementSet(const MeasurementSet& set, const std::filesystem::path& dir);
MeasurementSet readMeasurementSet(const std::filesystem::path& dir, std::string_view label,
                                  std::uint32_t repeat);

struct ConfigurationResults {
  std::string label;
  std::vector<MeasurementSet> repeats;  // valid repeats only
  std::vector<std::string> failures;
};

struct ResultsDirectory {
  std::filesystem::path path;
  std::vector<KeyValueLine> manifest;
  std::vector<ConfigurationResults> configurations;  // manifest order

  std::string manifestValue(std::string_view key) const;
};

/// Reads manifest.txt and every repeat it lists as ok. Throws ResultsError
/// when the manifest is missing or lists no configurations.
ResultsDirectory loadResults(const std::filesystem::path& dir);

}  // namespace blockprof
