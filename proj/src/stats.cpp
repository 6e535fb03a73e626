#include "blockprof/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace blockprof::stats {

namespace {

std::string fmt(double v, int precision = 3) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string pad(std::string s, std::size_t width, bool left = false) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return left ? s + fill : fill + s;
}

}  // namespace

std::vector<std::uint64_t> selectSteadyState(std::span<const std::uint64_t> repeat) {
  if (repeat.empty()) throw std::invalid_argument("selectSteadyState: empty measurements");
  const std::size_t keep = (repeat.size() + 1) / 2;
  return {repeat.end() - static_cast<std::ptrdiff_t>(keep), repeat.end()};
}

std::vector<std::uint64_t> selectSteadyState(std::span<const std::vector<std::uint64_t>> repeats) {
  if (repeats.empty()) throw std::invalid_argument("selectSteadyState: no repeats");
  std::vector<std::uint64_t> out;
  std::size_t total = 0;
  for (const auto& r : repeats) total += (r.size() + 1) / 2;
  out.reserve(total);
  for (const auto& r : repeats) {
    const auto half = selectSteadyState(std::span<const std::uint64_t>(r));
    out.insert(out.end(), half.begin(), half.end());
  }
  return out;
}

double quantileSorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Summary summarize(std::span<const double> values, std::optional<double> baseline_mean, std::string label) {
  if (values.empty()) throw std::invalid_argument("summarize: empty input");
  std::vector<double> sorted(values.begin(), values.end());
  std::ranges::sort(sorted);

  const auto n = static_cast<long double>(sorted.size());
  long double sum = 0;
  for (double v : sorted) sum += v;
  const long double mean = sum / n;
  long double ss = 0;
  for (double v : sorted) {
    const long double d = v - mean;
    ss += d * d;
  }

  Summary s;
  s.label = std::move(label);
  s.n_selected = sorted.size();
  s.mean_ns = static_cast<double>(mean);
  s.stddev_ns = static_cast<double>(std::sqrt(ss / n));
  s.cv_percent = s.mean_ns != 0 ? 100.0 * s.stddev_ns / s.mean_ns : 0.0;
  s.min_ns = sorted.front();
  s.max_ns = sorted.back();
  s.q25_ns = quantileSorted(sorted, 0.25);
  s.median_ns = quantileSorted(sorted, 0.5);
  s.q75_ns = quantileSorted(sorted, 0.75);
  if (baseline_mean) s.mean_overhead_ns = s.mean_ns - *baseline_mean;
  return s;
}

Summary summarize(std::span<const std::uint64_t> values, std::optional<double> baseline_mean,
                  std::string label) {
  std::vector<double> as_double(values.begin(), values.end());
  return summarize(std::span<const double>(as_double), baseline_mean, std::move(label));
}

std::optional<std::size_t> Comparison::find(std::string_view label) const noexcept {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].label == label) return i;
  }
  return std::nullopt;
}

Comparison compare(std::vector<Summary> rows) {
  if (rows.size() < 2) throw std::invalid_argument("compare needs at least two configurations");
  Comparison c;
  c.rows = std::move(rows);
  c.memory_cv_percent.assign(c.rows.size(), std::nullopt);

  const auto baseline = c.find(kBaselineLabel);
  if (baseline) {
    const double base_mean = c.rows[*baseline].mean_ns;
    for (auto& r : c.rows) r.mean_overhead_ns = r.mean_ns - base_mean;
    c.uses_overhead = true;
  } else {
    for (auto& r : c.rows) r.mean_overhead_ns.reset();
    c.warnings.push_back("no baseline configuration: overheads omitted, ratios use raw means");
  }

  const auto basis = [&](const Summary& s) {
    return c.uses_overhead ? *s.mean_overhead_ns : s.mean_ns;
  };
  c.ratios.assign(c.rows.size(), std::vector<double>(c.rows.size()));
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    for (std::size_t j = 0; j < c.rows.size(); ++j) {
      const double denom = basis(c.rows[j]);
      c.ratios[i][j] = denom == 0 ? std::numeric_limits<double>::quiet_NaN()
                                  : speedupRatio(basis(c.rows[i]), denom);
    }
  }
  return c;
}

Comparison compare(const ResultsDirectory& results) {
  std::vector<Summary> rows;
  std::vector<std::optional<double>> memory_cv;
  std::vector<std::string> warnings;
  for (const auto& config : results.configurations) {
    for (const auto& f : config.failures) warnings.push_back(config.label + " " + f);
    if (config.repeats.empty()) {
      warnings.push_back(config.label + ": no valid repeats, skipped");
      continue;
    }
    std::vector<std::vector<std::uint64_t>> elapsed;
    std::optional<double> max_cv;
    for (const auto& r : config.repeats) {
      elapsed.push_back(r.elapsed_ns);
      if (r.memory.size() >= 2) {
        std::vector<double> resident;
        for (const auto& m : r.memory) resident.push_back(static_cast<double>(m.resident_bytes));
        const double cv = summarize(std::span<const double>(resident)).cv_percent;
        max_cv = std::max(max_cv.value_or(cv), cv);
      }
    }
    rows.push_back(summarize(std::span<const std::uint64_t>(selectSteadyState(elapsed)), std::nullopt,
                             config.label));
    memory_cv.push_back(max_cv);
  }
  Comparison c = compare(std::move(rows));
  c.memory_cv_percent = std::move(memory_cv);
  c.warnings.insert(c.warnings.begin(), warnings.begin(), warnings.end());
  return c;
}

std::string renderText(const Comparison& c) {
  std::string out;
  out += "# per-iteration time in ns; second half of each repeat; population stddev\n";
  const std::vector<std::string> heads{"config", "n", "mean", "median", "q25", "q75", "min",
                                       "max", "stddev", "cv%", "overhead", "mem_cv_max%"};
  const std::vector<std::size_t> widths{18, 10, 11, 11, 11, 11, 11, 11, 11, 8, 11, 12};
  for (std::size_t i = 0; i < heads.size(); ++i) out += pad(heads[i], widths[i], i == 0);
  out += '\n';
  for (std::size_t r = 0; r < c.rows.size(); ++r) {
    const auto& s = c.rows[r];
    const std::vector<std::string> cells{
        s.label, std::to_string(s.n_selected), fmt(s.mean_ns), fmt(s.median_ns), fmt(s.q25_ns),
        fmt(s.q75_ns), fmt(s.min_ns), fmt(s.max_ns), fmt(s.stddev_ns), fmt(s.cv_percent, 2),
        s.mean_overhead_ns ? fmt(*s.mean_overhead_ns) : "-",
        c.memory_cv_percent.size() > r && c.memory_cv_percent[r] ? fmt(*c.memory_cv_percent[r], 2) : "-"};
    for (std::size_t i = 0; i < cells.size(); ++i) out += pad(cells[i], widths[i], i == 0);
    out += '\n';
  }

  out += "\n# speedup: ";
  out += c.uses_overhead ? "mean overhead" : "mean";
  out += " of row / column\n";
  out += pad("", 18, true);
  for (const auto& s : c.rows) out += pad(s.label, 18);
  out += '\n';
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    out += pad(c.rows[i].label, 18, true);
    for (std::size_t j = 0; j < c.rows.size(); ++j) out += pad(fmt(c.ratios[i][j], 2), 18);
    out += '\n';
  }

  if (const auto direct = c.find(kDirectLabel)) {
    for (std::size_t j = 0; j < c.rows.size(); ++j) {
      if (c.rows[j].label.starts_with("buffered")) {
        out += c.rows[*direct].label + " / " + c.rows[j].label + " = " + fmt(c.ratios[*direct][j], 2) + "x\n";
      }
    }
  }
  for (const auto& w : c.warnings) out += "warning: " + w + '\n';
  return out;
}

std::string renderCsv(const Comparison& c) {
  std::string out = "config,n,mean_ns,median_ns,q25_ns,q75_ns,min_ns,max_ns,stddev_ns,cv_pct,overhead_ns\n";
  for (const auto& s : c.rows) {
    out += s.label + ',' + std::to_string(s.n_selected) + ',' + fmt(s.mean_ns) + ',' + fmt(s.median_ns) +
           ',' + fmt(s.q25_ns) + ',' + fmt(s.q75_ns) + ',' + fmt(s.min_ns) + ',' + fmt(s.max_ns) + ',' +
           fmt(s.stddev_ns) + ',' + fmt(s.cv_percent, 4) + ',' +
           (s.mean_overhead_ns ? fmt(*s.mean_overhead_ns) : std::string()) + '\n';
  }
  return out;
}

std::string renderPlotData(const Comparison& c) {
  std::string out =
      "# index config min q25 median q75 max\n"
      "# gnuplot: plot 'f' using 1:4:3:7:6:xticlabels(2) with candlesticks whiskerbars, \\\n"
      "#          '' using 1:5:5:5:5 with candlesticks\n";
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    const auto& s = c.rows[i];
    out += std::to_string(i) + ' ' + s.label + ' ' + fmt(s.min_ns) + ' ' + fmt(s.q25_ns) + ' ' +
           fmt(s.median_ns) + ' ' + fmt(s.q75_ns) + ' ' + fmt(s.max_ns) + '\n';
  }
  return out;
}

}  // namespace blockprof::stats
