#include "blockprof/results.hpp"

#include <charconv>
#include <fstream>

namespace blockprof {

namespace {

std::uint64_t parseU64(std::string_view text, const std::filesystem::path& file, int line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ResultsError(file.string() + ":" + std::to_string(line) + ": bad number '" +
                       std::string(text) + "'");
  }
  return v;
}

// Two-column CSV with a header line.
template <typename F>
void readPairs(const std::filesystem::path& file, F&& on_row) {
  std::ifstream in(file);
  if (!in) throw ResultsError("cannot read " + file.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ResultsError(file.string() + ":" + std::to_string(line_no) + ": expected 2 columns");
    on_row(parseU64(std::string_view(line).substr(0, comma), file, line_no),
           parseU64(std::string_view(line).substr(comma + 1), file, line_no));
  }
}

}  // namespace

std::string resultFileName(std::string_view label, std::uint32_t repeat) {
  return std::string(label) + "-" + std::to_string(repeat) + ".csv";
}

std::string memoryFileName(std::string_view label, std::uint32_t repeat) {
  return std::string(label) + "-" + std::to_string(repeat) + ".mem.csv";
}

void writeMeasurementSet(const MeasurementSet& set, const std::filesystem::path& dir) {
  {
    std::ofstream out(dir / resultFileName(set.label, set.repeat), std::ios::trunc);
    if (!out) throw ResultsError("cannot write results to " + dir.string());
    out << "iteration,elapsed_ns\n";
    for (std::size_t i = 0; i < set.elapsed_ns.size(); ++i) out << i << ',' << set.elapsed_ns[i] << '\n';
    if (!out) throw ResultsError("write failed in " + dir.string());
  }
  std::ofstream mem(dir / memoryFileName(set.label, set.repeat), std::ios::trunc);
  if (!mem) throw ResultsError("cannot write memory samples to " + dir.string());
  mem << "iteration,resident_bytes\n";
  for (const auto& s : set.memory) mem << s.iteration << ',' << s.resident_bytes << '\n';
  if (!mem) throw ResultsError("write failed in " + dir.string());
}

MeasurementSet readMeasurementSet(const std::filesystem::path& dir, std::string_view label,
                                  std::uint32_t repeat) {
  MeasurementSet set;
  set.label = std::string(label);
  set.repeat = repeat;
  readPairs(dir / resultFileName(label, repeat),
            [&](std::uint64_t, std::uint64_t elapsed) { set.elapsed_ns.push_back(elapsed); });
  const auto mem = dir / memoryFileName(label, repeat);
  if (std::filesystem::exists(mem)) {
    readPairs(mem, [&](std::uint64_t it, std::uint64_t bytes) { set.memory.push_back({it, bytes}); });
  }
  return set;
}

std::string ResultsDirectory::manifestValue(std::string_view key) const {
  for (const auto& kv : manifest) {
    if (kv.key == key) return kv.value;
  }
  return {};
}

ResultsDirectory loadResults(const std::filesystem::path& dir) {
  const auto manifest_path = dir / kManifestFile;
  if (!std::filesystem::is_regular_file(manifest_path)) {
    throw ResultsError("no " + std::string(kManifestFile) + " in " + dir.string());
  }
  ResultsDirectory results;
  results.path = dir;
  results.manifest = readKeyValueFile(manifest_path);

  const auto labels = splitList(results.manifestValue("configurations"));
  if (labels.empty()) throw ResultsError(manifest_path.string() + " lists no configurations");
  const std::string repeats_text = results.manifestValue("repeats");
  const std::uint64_t repeats = repeats_text.empty() ? 0 : parseU64(repeats_text, manifest_path, 0);

  for (const auto& label : labels) {
    ConfigurationResults config;
    config.label = label;
    for (std::uint32_t k = 0; k < repeats; ++k) {
      const std::string status = results.manifestValue("repeat." + label + "." + std::to_string(k));
      if (status != "ok") {
        config.failures.push_back("repeat " + std::to_string(k) + ": " +
                                  (status.empty() ? std::string("missing") : status));
        continue;
      }
      config.repeats.push_back(readMeasurementSet(dir, label, k));
    }
    results.configurations.push_back(std::move(config));
  }
  return results;
}

}  // namespace blockprof
