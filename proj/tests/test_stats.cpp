#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "blockprof/bench.hpp"
#include "blockprof/stats.hpp"
#include "test_support.hpp"

namespace blockprof {
namespace {

using stats::Summary;

double relErr(double got, double want) {
  if (want == 0) return std::abs(got);
  return std::abs(got - want) / std::abs(want);
}

// Naive re-computation: plain double sums, two-pass variance, closest-rank
// interpolation written out from the definition.
struct Naive {
  double mean, stddev, median, q25, q75, min, max;
};

double naiveQuantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Naive naive(const std::vector<double>& v) {
  double sum = 0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean,
          std::sqrt(ss / static_cast<double>(v.size())),
          naiveQuantile(v, 0.5),
          naiveQuantile(v, 0.25),
          naiveQuantile(v, 0.75),
          *std::min_element(v.begin(), v.end()),
          *std::max_element(v.begin(), v.end())};
}

Summary row(const std::string& label, double mean) {
  Summary s;
  s.label = label;
  s.mean_ns = mean;
  s.n_selected = 1;
  return s;
}

TEST(SelectSteadyState, KeepsSecondHalf) {
  const std::vector<std::uint64_t> four{1, 2, 3, 4};
  EXPECT_EQ(stats::selectSteadyState(four), (std::vector<std::uint64_t>{3, 4}));
  const std::vector<std::uint64_t> one{5};
  EXPECT_EQ(stats::selectSteadyState(one), (std::vector<std::uint64_t>{5}));
  const std::vector<std::uint64_t> five{1, 2, 3, 4, 5};
  EXPECT_EQ(stats::selectSteadyState(five), (std::vector<std::uint64_t>{3, 4, 5}));
  EXPECT_THROW(stats::selectSteadyState(std::vector<std::uint64_t>{}), std::invalid_argument);
}

TEST(SelectSteadyState, PerRepeatConcatenation) {
  const std::vector<std::vector<std::uint64_t>> repeats{{1, 2, 3, 4}, {10, 20, 30}};
  EXPECT_EQ(stats::selectSteadyState(repeats), (std::vector<std::uint64_t>{3, 4, 20, 30}));
  EXPECT_THROW(stats::selectSteadyState(std::vector<std::vector<std::uint64_t>>{}), std::invalid_argument);
}

TEST(SelectSteadyState, LengthContractOnRandomSizes) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 1 + rng() % 1000;
    std::vector<std::uint64_t> v(n, 1);
    EXPECT_EQ(stats::selectSteadyState(v).size(), (n + 1) / 2);
  }
}

TEST(Summarize, ConstantInput) {
  const std::vector<double> v{2, 2, 2};
  const auto s = stats::summarize(v);
  EXPECT_EQ(s.mean_ns, 2);
  EXPECT_EQ(s.stddev_ns, 0);
  EXPECT_EQ(s.cv_percent, 0);
}

TEST(Summarize, OneTwoThreeHandOracle) {
  const std::vector<double> v{1, 2, 3};
  const auto s = stats::summarize(v);
  EXPECT_DOUBLE_EQ(s.mean_ns, 2);
  EXPECT_DOUBLE_EQ(s.median_ns, 2);
  EXPECT_NEAR(s.stddev_ns, std::sqrt(2.0 / 3.0), 1e-12);
  EXPECT_NEAR(s.cv_percent, 40.824829046386, 1e-9);
  EXPECT_DOUBLE_EQ(s.q25_ns, 1.5);
  EXPECT_DOUBLE_EQ(s.q75_ns, 2.5);
}

TEST(Summarize, OverheadFromBaseline) {
  const std::vector<double> v{5, 5};
  EXPECT_DOUBLE_EQ(*stats::summarize(v, 2.0).mean_overhead_ns, 3.0);
  EXPECT_FALSE(stats::summarize(v).mean_overhead_ns.has_value());
}

TEST(Summarize, EmptyInputThrows) {
  EXPECT_THROW(stats::summarize(std::vector<double>{}), std::invalid_argument);
}

TEST(Summarize, MatchesNaiveOracle) {
  std::mt19937_64 rng(17);
  std::lognormal_distribution<double> dist(7.0, 0.5);
  for (std::size_t n : {1u, 2u, 7u, 1000u, 100'001u}) {
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    const auto s = stats::summarize(v);
    const auto o = naive(v);
    EXPECT_LT(relErr(s.mean_ns, o.mean), 1e-9) << n;
    EXPECT_LT(relErr(s.stddev_ns, o.stddev), 1e-9) << n;
    EXPECT_LT(relErr(s.median_ns, o.median), 1e-9) << n;
    EXPECT_LT(relErr(s.q25_ns, o.q25), 1e-9) << n;
    EXPECT_LT(relErr(s.q75_ns, o.q75), 1e-9) << n;
    EXPECT_EQ(s.min_ns, o.min);
    EXPECT_EQ(s.max_ns, o.max);
    EXPECT_LE(s.q25_ns, s.median_ns);
    EXPECT_LE(s.median_ns, s.q75_ns);
  }
}

TEST(Summarize, IntegerOverloadAgrees) {
  const std::vector<std::uint64_t> u{5, 1, 9, 3};
  const std::vector<double> d{5, 1, 9, 3};
  const auto a = stats::summarize(u);
  const auto b = stats::summarize(d);
  EXPECT_EQ(a.mean_ns, b.mean_ns);
  EXPECT_EQ(a.median_ns, b.median_ns);
  EXPECT_EQ(a.n_selected, 4u);
}

TEST(Summarize, CvIsScaleInvariant) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> dist(10, 1000);
  std::vector<double> v(10'000);
  for (auto& x : v) x = dist(rng);
  const double cv = stats::summarize(v).cv_percent;
  for (double k : {0.001, 3.0, 1e6}) {
    std::vector<double> scaled(v);
    for (auto& x : scaled) x *= k;
    EXPECT_LT(relErr(stats::summarize(scaled).cv_percent, cv), 1e-9) << k;
  }
}

TEST(Compare, DirectOverBufferedRatioFormula) {
  auto base = row("baseline", 1.0);
  auto direct = row("direct-id", 1.0 + 14.022);
  auto zstd = row("buffered-zstd", 1.0 + 2.28);
  const auto c = stats::compare({base, direct, zstd});
  ASSERT_TRUE(c.uses_overhead);
  const auto d = *c.find("direct-id");
  const auto z = *c.find("buffered-zstd");
  EXPECT_NEAR(*c.rows[d].mean_overhead_ns, 14.022, 1e-12);
  EXPECT_NEAR(c.ratios[d][z], 6.15, 1e-9);
  EXPECT_NEAR(stats::speedupRatio(14.022, 2.28), 6.15, 1e-12);
  EXPECT_NE(stats::renderText(c).find("direct-id / buffered-zstd = 6.15x"), std::string::npos);
}

TEST(Compare, IdenticalRowsGiveUnitRatios) {
  const auto c = stats::compare({row("a", 3.5), row("b", 3.5), row("c", 3.5)});
  EXPECT_FALSE(c.uses_overhead);
  EXPECT_FALSE(c.warnings.empty());
  ASSERT_EQ(c.ratios.size(), 3u);
  for (const auto& r : c.ratios) {
    ASSERT_EQ(r.size(), 3u);
    for (double x : r) EXPECT_DOUBLE_EQ(x, 1.0);
  }
}

TEST(Compare, ZeroDenominatorIsNaN) {
  const auto c = stats::compare({row("baseline", 5), row("null", 5), row("direct-id", 9)});
  EXPECT_TRUE(std::isnan(c.ratios[2][1]));
  EXPECT_DOUBLE_EQ(c.ratios[1][2], 0.0);
}

TEST(Compare, NeedsTwoRows) {
  EXPECT_THROW(stats::compare({row("a", 1)}), std::invalid_argument);
}

TEST(Render, CsvAndPlotShapes) {
  const auto c = stats::compare({row("baseline", 1), row("null", 2), row("direct-id", 10)});
  const auto csv = stats::renderCsv(c);
  EXPECT_TRUE(csv.starts_with("config,n,mean_ns,median_ns,q25_ns,q75_ns,min_ns,max_ns,stddev_ns,cv_pct,overhead_ns\n"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  const auto plot = stats::renderPlotData(c);
  std::size_t data_lines = 0;
  std::istringstream in(plot);
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    ++data_lines;
    std::istringstream fields(line);
    std::string idx, label;
    double v[5];
    fields >> idx >> label >> v[0] >> v[1] >> v[2] >> v[3] >> v[4];
    EXPECT_TRUE(fields) << line;
  }
  EXPECT_EQ(data_lines, 3u);
  const auto text = stats::renderText(c);
  EXPECT_NE(text.find("baseline"), std::string::npos);
  EXPECT_NE(text.find("direct-id"), std::string::npos);
}

TEST(Compare, ResultsDirectoryEndToEnd) {
  testing::TempDir dir;
  bench::SuiteConfig suite;
  suite.base.iterations = 400;
  suite.base.repeats = 2;
  suite.base.memory_sample_stride = 50;
  suite.base.profiler.block_capacity = 1000;
  suite.base.profiler.num_blocks = 8;
  suite.base.profiler.num_compression_workers = 2;
  suite.configurations = {bench::Configuration::Baseline, bench::Configuration::Null,
                          bench::Configuration::BufferedId};
  suite.out_dir = dir.path();
  ASSERT_TRUE(bench::runSuite(suite).ok());

  const auto results = loadResults(dir.path());
  const auto c = stats::compare(results);
  ASSERT_EQ(c.rows.size(), 3u);
  EXPECT_TRUE(c.uses_overhead);
  for (const auto& r : c.rows) EXPECT_EQ(r.n_selected, 400u);  // 2 repeats x 200
  ASSERT_EQ(c.memory_cv_percent.size(), 3u);
  EXPECT_TRUE(c.memory_cv_percent[0].has_value());
}

}  // namespace
}  // namespace blockprof
