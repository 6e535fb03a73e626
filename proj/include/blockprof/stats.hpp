#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blockprof/results.hpp"

namespace blockprof::stats {

inline constexpr std::string_view kBaselineLabel = "baseline";
inline constexpr std::string_view kDirectLabel = "direct-id";

/// Population statistics of selected per-iteration times, in nanoseconds.
/// cv_percent = 100 * stddev / mean; quantiles use linear interpolation.
struct Summary {
  std::string label;
  std::uint64_t n_selected = 0;
  double mean_ns = 0;
  double median_ns = 0;
  double q25_ns = 0;
  double q75_ns = 0;
  double min_ns = 0;
  double max_ns = 0;
  double stddev_ns = 0;
  double cv_percent = 0;
  std::optional<double> mean_overhead_ns;  // mean - baseline mean
};

/// Warm-up discard: keeps the last ceil(n/2) values. Throws
/// std::invalid_argument on empty input.
std::vector<std::uint64_t> selectSteadyState(std::span<const std::uint64_t> repeat);

/// Per-repeat second halves, concatenated in repeat order.
std::vector<std::uint64_t> selectSteadyState(std::span<const std::vector<std::uint64_t>> repeats);

/// Linear interpolation between closest ranks on sorted data, p in [0, 1].
double quantileSorted(std::span<const double> sorted, double p);

/// Throws std::invalid_argument on empty input.
Summary summarize(std::span<const double> values, std::optional<double> baseline_mean = {},
                  std::string label = {});
Summary summarize(std::span<const std::uint64_t> values, std::optional<double> baseline_mean = {},
                  std::string label = {});

/// How many times faster `overhead` is than `reference_overhead`.
inline double speedupRatio(double reference_overhead, double overhead) noexcept {
  return reference_overhead / overhead;
}

struct Comparison {
  std::vector<Summary> rows;
  // ratios[i][j] = basis(i) / basis(j), basis = mean overhead (or mean
  // when there is no baseline). NaN when basis(j) is zero.
  std::vector<std::vector<double>> ratios;
  bool uses_overhead = false;
  // Largest per-repeat CV of resident memory samples, per row.
  std::vector<std::optional<double>> memory_cv_percent;
  std::vector<std::string> warnings;

  std::optional<std::size_t> find(std::string_view label) const noexcept;
};

/// Fills overheads from the row labelled "baseline" and computes the ratio
/// matrix. Throws std::invalid_argument with fewer than two rows.
Comparison compare(std::vector<Summary> rows);

/// Selection + summarize + compare over a loaded results directory.
Comparison compare(const ResultsDirectory& results);

std::string renderText(const Comparison& comparison);
/// config,n,mean_ns,median_ns,q25_ns,q75_ns,min_ns,max_ns,stddev_ns,cv_pct,overhead_ns
std::string renderCsv(const Comparison& comparison);
/// Whitespace-separated five-number summaries for gnuplot candlesticks.
std::string renderPlotData(const Comparison& comparison);

}  // namespace blockprof::stats
