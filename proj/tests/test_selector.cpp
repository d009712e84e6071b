#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "oracle.hpp"
#include "svdd/generators.hpp"
#include "svdd/selector.hpp"

using namespace svdd;

namespace {

Dataset collinear3() {
  Matrix x(3, 1);
  x << 0.0, 1.0, 2.0;
  return Dataset(x);
}

Curve sampled(double lo, double step, std::size_t n, const std::function<double(double)>& f) {
  Curve c;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lo + static_cast<double>(i) * step;
    c.xs.push_back(x);
    c.ys.push_back(f(x));
  }
  return c;
}

}  // namespace

TEST(Convergence, RuleAndIndex) {
  const ConvergenceParams conv{0.05, 3};
  EXPECT_TRUE(within_tolerance(1.0, 1.04, 0.05));
  EXPECT_TRUE(within_tolerance(2.0, 1.91, 0.05));
  EXPECT_FALSE(within_tolerance(1.0, 1.06, 0.05));
  EXPECT_FALSE(within_tolerance(std::nan(""), 1.0, 0.05));
  const std::vector<double> s{2.0, 1.0, 0.9, 0.88, 0.9, 0.89, 0.5};
  // hits at 3, 4, 5 (0.9 -> 0.88 -> 0.9 -> 0.89); 1.0 -> 0.9 is a 10% move
  EXPECT_EQ(convergence_index(s, conv), std::optional<std::size_t>{5});
  const std::vector<double> never{1.0, 2.0, 1.0, 2.0};
  EXPECT_FALSE(convergence_index(never, conv).has_value());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<double> gap{1.0, 1.0, nan, 1.0, 1.0, 1.0};
  EXPECT_FALSE(convergence_index(gap, conv).has_value());
  EXPECT_THROW(convergence_index(s, ConvergenceParams{0.0, 3}), InvalidArgument);
  EXPECT_THROW(convergence_index(s, ConvergenceParams{0.1, 0}), InvalidArgument);
}

TEST(FullPeak, StarWithinExpectedBand) {
  const auto d = gen_star(582, 1);
  const auto r = full_peak(d, SweepGrid(0.05, 10.0, 0.05), 0.001);
  ASSERT_TRUE(r.first_max_s.has_value());
  ASSERT_TRUE(r.band_crossing_s.has_value());
  EXPECT_GE(r.s_opt(), 0.6);
  EXPECT_LE(r.s_opt(), 1.3);
  EXPECT_GE(*r.first_max_s, 0.6);
  EXPECT_LE(*r.first_max_s, 1.3);
  EXPECT_EQ(r.oof.size(), 200u);
  EXPECT_EQ(r.first_diff.size(), 199u);
  EXPECT_EQ(r.second_diff.size(), 198u);
  for (std::size_t k = 0; k < r.oof.size(); ++k) EXPECT_EQ(r.oof.ys[k], -r.train.oof[k]);
}

TEST(FullPeak, BananaFortyKnotsPeak) {
  const auto d = gen_banana(267, 1);
  SmootherParams sp;
  sp.knots = 40;
  const auto r = full_peak(d, SweepGrid(0.05, 10.0, 0.05), 0.001, sp);
  ASSERT_TRUE(r.first_max_s.has_value());
  EXPECT_NEAR(*r.first_max_s, 0.65, 0.1);
}

TEST(FullPeak, GridTooShort) {
  const auto d = gen_star(60, 1);
  EXPECT_THROW(full_peak(d, SweepGrid(0.1, 0.5, 0.1), 0.01), InvalidArgument);
}

TEST(FullPeak, CriteriaAgreeOnSmoothCurves) {
  // Ascending curves with one inflection and curvature away from zero at the start.
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 1e-5);
  const std::vector<std::pair<std::function<double(double)>, double>> cases{
      {[](double s) { return -std::pow(s - 2.0, 3) / 3.0; }, 2.0},
      {[](double s) { return std::atan(2.0 * (s - 1.5)) + 4.0 * s; }, 1.5},
      {[](double s) { return -std::pow(s - 3.0, 3) + 0.2 * std::pow(s - 3.0, 5) / 5.0; }, 3.0}};
  for (const auto& [f, inflection] : cases) {
    const auto c = sampled(0.05, 0.05, 120, [&](double s) { return f(s) + noise(rng); });
    const auto r = peak_from_curve(c, SmootherParams{40, 3, 2, std::nullopt});
    ASSERT_TRUE(r.first_max_s && r.band_crossing_s);
    EXPECT_NEAR(*r.first_max_s, *r.band_crossing_s, 2 * 0.05 + 1e-9) << "inflection " << inflection;
    EXPECT_NEAR(*r.first_max_s, inflection, 2 * 0.05 + 1e-9);
  }
}

TEST(SamplingPeak, DegenerateFullSizeMatchesFullPeak) {
  const auto d = gen_star(200, 2);
  const SweepGrid g(0.05, 4.0, 0.05);
  const auto full = full_peak(d, g, 0.001);
  const auto trace = sampling_peak(d, SampleSchedule(200, 200, 1, 5), g, 0.001);
  ASSERT_EQ(trace.entries.size(), 1u);
  EXPECT_FALSE(trace.converged);
  ASSERT_TRUE(full.first_max_s.has_value());
  EXPECT_EQ(trace.final_s, *full.first_max_s);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_EQ(trace.entries[0].oof[k], full.train.oof[k]);
}

TEST(SamplingPeak, DeterministicAndThreadIndependent) {
  const auto d = gen_star(300, 3);
  const SweepGrid g(0.1, 3.0, 0.1);
  const SampleSchedule sch(30, 90, 30, 17);
  SamplingPeakOptions opt;
  const auto a = sampling_peak(d, sch, g, 0.001, opt);
  const auto b = sampling_peak(d, sch, g, 0.001, opt);
  opt.threads = 3;
  const auto c = sampling_peak(d, sch, g, 0.001, opt);
  ASSERT_EQ(a.entries.size(), b.entries.size());
  ASSERT_EQ(a.entries.size(), c.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    EXPECT_EQ(a.entries[i].oof, b.entries[i].oof);
    EXPECT_EQ(a.entries[i].oof, c.entries[i].oof);
    EXPECT_TRUE(a.entries[i].s_opt == c.entries[i].s_opt ||
                (std::isnan(a.entries[i].s_opt) && std::isnan(c.entries[i].s_opt)));
  }
  const SampleSchedule other(30, 90, 30, 18);
  EXPECT_NE(sampling_peak(d, other, g, 0.001).entries[0].oof, a.entries[0].oof);
}

TEST(SamplingPeak, TraceShapeAndConvergenceReplay) {
  const auto d = gen_star(582, 1);
  const SweepGrid g(0.05, 4.0, 0.05);
  SamplingPeakOptions opt;
  opt.conv = ConvergenceParams{0.05, 2};
  const auto trace = sampling_peak(d, SampleSchedule(60, 300, 30, 1), g, 0.001, opt);
  ASSERT_FALSE(trace.entries.empty());
  for (std::size_t i = 1; i < trace.entries.size(); ++i)
    EXPECT_GT(trace.entries[i].sample_size, trace.entries[i - 1].sample_size);
  for (const auto& e : trace.entries) {
    EXPECT_EQ(e.oof.size(), g.size());
    EXPECT_GT(e.seconds, 0.0);
  }
  const auto replay = convergence_index(trace.s_opts(), opt.conv);
  EXPECT_EQ(trace.converged, replay.has_value());
  if (trace.converged) {
    EXPECT_EQ(*replay, trace.entries.size() - 1);
    EXPECT_EQ(*trace.converged_at, trace.entries.back().sample_size);
    EXPECT_EQ(trace.final_s, trace.entries.back().s_opt);
  }
}

TEST(CvObjective, HandValues) {
  EXPECT_NEAR(cv_objective(collinear3(), 1.0), 0.1098, 1e-4);
  const double a = std::exp(-0.5);
  const double b = std::exp(-2.0);
  const double mean = (2 * a + b) / 3;
  const double var = (2 * (a - mean) * (a - mean) + (b - mean) * (b - mean)) / 3;
  EXPECT_NEAR(cv_objective(collinear3(), 1.0), var / (mean + 1e-6), 1e-14);
  Matrix two(2, 2);
  two << 0.0, 0.0, 1.0, 3.0;
  EXPECT_EQ(cv_objective(Dataset(two), 0.7), 0.0);
  EXPECT_LE(cv_objective(gen_star(100, 1), 1e6), 1e-6);
  Matrix one(1, 2);
  one << 1.0, 1.0;
  EXPECT_THROW(cv_objective(Dataset(one), 1.0), InvalidArgument);
}

TEST(DfnObjective, HandValues) {
  const double a = std::exp(-0.5);
  const double b = std::exp(-2.0);
  EXPECT_NEAR(dfn_objective(collinear3(), 1.0), 0.6283, 1e-4);
  EXPECT_NEAR(dfn_objective(collinear3(), 1.0), (2.0 / 3.0) * (3 * a) - (2.0 / 3.0) * (b + a + b), 1e-14);
  Matrix two(2, 2);
  two << 0.0, 0.0, 1.0, 3.0;
  EXPECT_EQ(dfn_objective(Dataset(two), 0.7), 0.0);
  EXPECT_LE(dfn_objective(gen_star(100, 1), 1e-4), 1e-12);
  Matrix one(1, 2);
  one << 1.0, 1.0;
  EXPECT_THROW(dfn_objective(Dataset(one), 1.0), InvalidArgument);
}

TEST(Objectives, MatchFullMatrixOracle) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    Matrix x(3 + t, 2);
    for (Index i = 0; i < x.rows(); ++i)
      for (Index j = 0; j < 2; ++j) x(i, j) = g(rng);
    const Dataset d(x);
    for (double s : {0.1, 0.5, 1.0, 3.0}) {
      EXPECT_NEAR(cv_objective(d, s), oracle::cv(d, s), 1e-12);
      EXPECT_NEAR(dfn_objective(d, s), oracle::dfn(d, s), 1e-12);
    }
  }
}

TEST(Objectives, RangeAndLimitsOnGeneratedData) {
  for (const auto& d : {gen_star(582, 1), gen_three_clusters(276, 1), gen_banana(267, 1)}) {
    const double diam = diameter(d);
    EXPECT_LE(cv_objective(d, 1e3 * diam), 1e-4);
    EXPECT_LE(dfn_objective(d, 1e3 * diam), 1e-4);
    double closest = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < d.rows(); ++i)
      for (Index j = i + 1; j < d.rows(); ++j)
        closest = std::min(closest, (d.points().row(i) - d.points().row(j)).norm());
    EXPECT_LE(cv_objective(d, 0.1 * closest), 1e-4);
    EXPECT_LE(dfn_objective(d, 0.1 * closest), 1e-4);
    for (double s = 0.05; s < 10; s *= 1.5) {
      EXPECT_GE(cv_objective(d, s), 0.0);
      const double v = dfn_objective(d, s);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 2.0);
    }
  }
}

TEST(Selectors, MatchExhaustiveSearch) {
  const SweepGrid g(0.1, 5.0, 0.1);
  const auto xs = g.values();
  const auto d = collinear3();
  EXPECT_EQ(cv_select(d, g), oracle::argmax(xs, [&](double s) { return oracle::cv(d, s); }));
  EXPECT_EQ(dfn_select(d, g), oracle::argmax(xs, [&](double s) { return oracle::dfn(d, s); }));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    Matrix x(12, 3);
    for (Index i = 0; i < x.rows(); ++i)
      for (Index j = 0; j < 3; ++j) x(i, j) = n01(rng);
    const Dataset r(x);
    EXPECT_EQ(cv_select(r, g), oracle::argmax(xs, [&](double s) { return oracle::cv(r, s); }));
    EXPECT_EQ(dfn_select(r, g), oracle::argmax(xs, [&](double s) { return oracle::dfn(r, s); }));
  }
}

TEST(Selectors, TiesKeepSmallestS) {
  // Two points: both objectives are identically zero, so every s ties.
  Matrix two(2, 1);
  two << 0.0, 1.0;
  const SweepGrid g(0.3, 2.0, 0.1);
  EXPECT_EQ(cv_select(Dataset(two), g), 0.3);
  EXPECT_EQ(dfn_select(Dataset(two), g), 0.3);
}

TEST(Selectors, RowPermutationInvariance) {
  const auto d = gen_banana(120, 6);
  std::vector<Index> perm(120);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937(6));
  const auto p = d.subset(perm);
  const SweepGrid g(0.05, 5.0, 0.05);
  EXPECT_EQ(cv_select(d, g), cv_select(p, g));
  EXPECT_EQ(dfn_select(d, g), dfn_select(p, g));
}

TEST(RandomizedSweep, DegenerateSingleDraw) {
  const auto d = gen_star(150, 2);
  RandomizedSweepConfig cfg;
  cfg.M = 1;
  cfg.schedule = SampleSchedule(150, 150, 1, 0);
  cfg.with_replacement = false;
  for (auto method : {SweepMethod::cv, SweepMethod::dfn}) {
    cfg.method = method;
    const auto st = randomized_sweep(d, cfg);
    ASSERT_EQ(st.size(), 1u);
    EXPECT_EQ(st[0].variance, 0.0);
    EXPECT_EQ(st[0].mean, select_with(method, d, cfg.s_grid));
  }
}

TEST(RandomizedSweep, StatisticsDeterminismAndThreads) {
  const auto d = gen_three_clusters(120, 3);
  RandomizedSweepConfig cfg;
  cfg.M = 6;
  cfg.schedule = SampleSchedule(20, 60, 20, 0);
  cfg.seed = 4;
  const auto a = randomized_sweep(d, cfg);
  cfg.threads = 4;
  const auto b = randomized_sweep(d, cfg);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].draws, b[i].draws);
    ASSERT_EQ(a[i].draws.size(), 6u);
    double mean = 0.0;
    for (double v : a[i].draws) mean += v;
    mean /= 6.0;
    double var = 0.0;
    for (double v : a[i].draws) var += (v - mean) * (v - mean);
    EXPECT_NEAR(a[i].mean, mean, 1e-12);
    EXPECT_NEAR(a[i].variance, var / 6.0, 1e-12);
  }
  cfg.M = 0;
  EXPECT_THROW(randomized_sweep(d, cfg), InvalidArgument);
  EXPECT_EQ(parse_sweep_method("dfn"), SweepMethod::dfn);
  EXPECT_THROW(parse_sweep_method("mean"), InvalidArgument);
}
