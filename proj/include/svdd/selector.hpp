#pragma once

// Bandwidth selection: full peak, sampling peak, coefficient of variation
// (CV) and distance to farthest neighbour (DFN), plus the randomized
// sample-size sweep used to compare selectors.
//
// The peak methods work on the ascending OOF curve, i.e. -oof, which is
// a'Ka - 1 at the optimum and grows with s.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "svdd/dataset.hpp"
#include "svdd/error.hpp"
#include "svdd/generators.hpp"
#include "svdd/kernel.hpp"
#include "svdd/parallel.hpp"
#include "svdd/pspline.hpp"
#include "svdd/random.hpp"
#include "svdd/sampling.hpp"
#include "svdd/solver.hpp"

namespace svdd {

struct ConvergenceParams {
  double eps_s = 0.05;
  std::size_t u = 3;

  void validate() const {
    if (!(eps_s > 0.0)) throw InvalidArgument("eps_s must be > 0");
    if (u < 1) throw InvalidArgument("u must be >= 1");
  }
};

// |s_i - s_{i-1}| <= eps_s |s_{i-1}|; a missing value (NaN) never satisfies it.
inline bool within_tolerance(double prev, double cur, double eps_s) {
  if (std::isnan(prev) || std::isnan(cur)) return false;
  return std::abs(cur - prev) <= eps_s * std::abs(prev);
}

// Position of the first entry that completes u consecutive rule hits.
inline std::optional<std::size_t> convergence_index(std::span<const double> s_opts,
                                                    const ConvergenceParams& conv) {
  conv.validate();
  std::size_t run = 0;
  for (std::size_t i = 1; i < s_opts.size(); ++i) {
    run = within_tolerance(s_opts[i - 1], s_opts[i], conv.eps_s) ? run + 1 : 0;
    if (run >= conv.u) return i;
  }
  return std::nullopt;
}

// Ascending curve (s, -oof) from a bandwidth sweep.
inline Curve ascending_oof(std::span<const double> s, std::span<const double> oof) {
  Curve c;
  c.xs.assign(s.begin(), s.end());
  c.ys.reserve(oof.size());
  for (double v : oof) c.ys.push_back(-v);
  return c;
}

// ---------------------------------------------------------------- full peak

struct FullPeakResult {
  TrainCurve train;
  Curve oof;           // ascending orientation
  Curve first_diff;
  Curve second_diff;
  SplineFit first_fit;
  SplineFit second_fit;
  std::optional<double> band_crossing_s;  // second-difference criterion
  std::optional<double> first_max_s;      // first-difference criterion

  // The second-difference answer when it exists, else the first-difference one.
  double s_opt() const {
    if (band_crossing_s) return *band_crossing_s;
    if (first_max_s) return *first_max_s;
    throw NoZeroCrossing("full peak found neither a band crossing nor a maximum; widen the s range");
  }
};

// Both peak criteria applied to an already computed ascending OOF curve.
inline FullPeakResult peak_from_curve(const Curve& ascending, const SmootherParams& smoother = {}) {
  ascending.validate(6);
  FullPeakResult out;
  out.oof = ascending;
  out.first_diff = first_difference(ascending);
  out.second_diff = second_difference(ascending);
  out.first_fit = fit_pspline(out.first_diff, smoother);
  out.second_fit = fit_pspline(out.second_diff, smoother);
  try {
    out.first_max_s = first_local_max(out.first_fit, out.first_diff.xs);
  } catch (const NoInteriorMaximum&) {
  }
  try {
    out.band_crossing_s = first_zero_crossing_of_band(out.second_fit, out.second_diff.xs);
  } catch (const NoZeroCrossing&) {
  }
  if (!out.first_max_s && !out.band_crossing_s)
    throw NoZeroCrossing("no band crossing and no first-difference maximum; widen the s range");
  return out;
}

inline FullPeakResult full_peak(const Dataset& data, const SweepGrid& grid, double f,
                                const SmootherParams& smoother = {}, const SolverSettings& solver = {},
                                unsigned threads = 1) {
  if (grid.size() < 6) throw InvalidArgument("full peak needs a grid of at least 6 points");
  auto train = train_curve(data, grid, f, solver, threads);
  auto out = peak_from_curve(ascending_oof(train.s, train.oof), smoother);
  out.train = std::move(train);
  return out;
}

// ------------------------------------------------------------ sampling peak

struct TraceEntry {
  std::size_t sample_size = 0;
  double s_opt = std::numeric_limits<double>::quiet_NaN();  // NaN: no interior maximum
  double seconds = 0.0;        // summed solve time over the s grid
  double wall_seconds = 0.0;
  std::size_t unconverged = 0;  // grid cells whose sampling trainer hit max_iters
  std::vector<double> oof;      // per grid s, dual objective (non-increasing)
};

struct SelectionTrace {
  std::vector<TraceEntry> entries;
  bool converged = false;
  std::optional<std::size_t> converged_at;  // sample size
  double final_s = std::numeric_limits<double>::quiet_NaN();

  std::vector<double> s_opts() const {
    std::vector<double> v;
    v.reserve(entries.size());
    for (const auto& e : entries) v.push_back(e.s_opt);
    return v;
  }
};

struct SamplingPeakOptions {
  ConvergenceParams conv;
  SmootherParams smoother;
  SolverSettings solver;
  std::size_t max_iters = 200;
  std::size_t stall_iters = 5;
  double r2_rel_tol = 0.01;
  unsigned threads = 1;
};

// OOF curve of sampling SVDD at one sample size. Every s on the grid replays
// the same RNG stream, derived from (seed, n_index), so the sampling noise is
// shared along the curve and its differences stay smooth. Results do not
// depend on the thread count.
inline TraceEntry sampling_row(const Dataset& data, std::size_t sample_size, std::size_t n_index,
                               const SweepGrid& grid, double f, std::uint64_t seed,
                               const SamplingPeakOptions& opt) {
  TraceEntry entry;
  entry.sample_size = sample_size;
  const std::size_t count = grid.size();
  entry.oof.resize(count);
  std::vector<double> secs(count, 0.0);
  std::vector<char> conv(count, 1);
  Stopwatch wall;
  parallel_for(count, opt.threads, [&](std::size_t k) {
    Stopwatch clock;
    SamplingTrainConfig cfg{sample_size, opt.max_iters, opt.stall_iters, opt.r2_rel_tol,
                            derive_seed(seed, {n_index})};
    try {
      const auto res = sample_train(data, grid[k], f, cfg, opt.solver);
      entry.oof[k] = res.model.oof;
      conv[k] = res.converged ? 1 : 0;
    } catch (const NonConvergence& e) {
      std::ostringstream msg;
      msg << e.what() << " [sample size " << sample_size << "]";
      throw NonConvergence(msg.str(), e.iterations(), e.violation(), e.objective());
    }
    secs[k] = clock.seconds();
  });
  entry.wall_seconds = wall.seconds();
  for (std::size_t k = 0; k < count; ++k) {
    entry.seconds += secs[k];
    entry.unconverged += conv[k] ? 0 : 1;
  }
  const auto grid_values = grid.values();
  const auto d1 = first_difference(ascending_oof(grid_values, entry.oof));
  const auto fit = fit_pspline(d1, opt.smoother);
  try {
    entry.s_opt = first_local_max(fit, d1.xs);
  } catch (const NoInteriorMaximum&) {
  }
  return entry;
}

// Walks the schedule, stopping once s_opt satisfies the eps_s rule for u
// consecutive sample sizes.
inline SelectionTrace sampling_peak(const Dataset& data, const SampleSchedule& schedule,
                                    const SweepGrid& grid, double f,
                                    const SamplingPeakOptions& opt = {}) {
  opt.conv.validate();
  schedule.validate_against(static_cast<std::size_t>(data.rows()));
  SelectionTrace trace;
  std::size_t run = 0;
  const auto sizes = schedule.sizes();
  for (std::size_t a = 0; a < sizes.size(); ++a) {
    trace.entries.push_back(sampling_row(data, sizes[a], a, grid, f, schedule.seed(), opt));
    if (a > 0) {
      const double prev = trace.entries[a - 1].s_opt;
      run = within_tolerance(prev, trace.entries[a].s_opt, opt.conv.eps_s) ? run + 1 : 0;
    }
    if (run >= opt.conv.u) {
      trace.converged = true;
      trace.converged_at = sizes[a];
      break;
    }
  }
  for (auto it = trace.entries.rbegin(); it != trace.entries.rend(); ++it)
    if (!std::isnan(it->s_opt)) {
      trace.final_s = it->s_opt;
      break;
    }
  return trace;
}

// ------------------------------------------------------------ CV and DFN

namespace detail {

inline void require_pairs(const Dataset& data) {
  if (data.rows() < 2) throw InvalidArgument("selector objective needs at least 2 points");
}

inline std::vector<double> pair_distances(const Dataset& data) {
  const Index n = data.rows();
  std::vector<double> d2;
  d2.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) d2.push_back(squared_distance(data.row(i), data.row(j)));
  return d2;
}

// Population mean and variance of exp(-d2 / 2s^2) over the pairs (Welford).
inline double cv_from_distances(std::span<const double> d2, double s) {
  const double gamma = 1.0 / (2.0 * s * s);
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t count = 0;
  for (double d : d2) {
    const double k = std::exp(-d * gamma);
    ++count;
    const double delta = k - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (k - mean);
  }
  const double var = m2 / static_cast<double>(count);
  return var / (mean + 1e-6);
}

// Per point: smallest squared distance to another point and largest to any.
struct NeighbourExtremes {
  std::vector<double> nearest;
  std::vector<double> farthest;
};

inline NeighbourExtremes neighbour_extremes(const Dataset& data) {
  const auto n = static_cast<std::size_t>(data.rows());
  NeighbourExtremes e{std::vector<double>(n, std::numeric_limits<double>::infinity()),
                      std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = squared_distance(data.row(static_cast<Index>(i)), data.row(static_cast<Index>(j)));
      e.nearest[i] = std::min(e.nearest[i], d);
      e.nearest[j] = std::min(e.nearest[j], d);
      e.farthest[i] = std::max(e.farthest[i], d);
      e.farthest[j] = std::max(e.farthest[j], d);
    }
  return e;
}

inline double dfn_from_extremes(const NeighbourExtremes& e, double s) {
  const double gamma = 1.0 / (2.0 * s * s);
  double near_sum = 0.0;
  double far_sum = 0.0;
  for (std::size_t i = 0; i < e.nearest.size(); ++i) {
    near_sum += std::exp(-e.nearest[i] * gamma);
    far_sum += std::exp(-e.farthest[i] * gamma);
  }
  return 2.0 * (near_sum - far_sum) / static_cast<double>(e.nearest.size());
}

// First index of the maximum (ties keep the smallest s).
template <typename Objective>
double grid_argmax(const SweepGrid& grid, Objective&& objective) {
  double best_s = grid[0];
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double v = objective(grid[k]);
    if (v > best) {
      best = v;
      best_s = grid[k];
    }
  }
  return best_s;
}

}  // namespace detail

// Var / (Mean + 1e-6) of the off-diagonal kernel entries, population variance.
inline double cv_objective(const Dataset& data, double s) {
  detail::require_pairs(data);
  check_bandwidth(s);
  return detail::cv_from_distances(detail::pair_distances(data), s);
}

inline double cv_select(const Dataset& data, const SweepGrid& grid) {
  detail::require_pairs(data);
  const auto d2 = detail::pair_distances(data);
  return detail::grid_argmax(grid, [&](double s) { return detail::cv_from_distances(d2, s); });
}

// (2/n) sum_i max_{j!=i} k(x_i, x_j) - (2/n) sum_i min_j k(x_i, x_j).
inline double dfn_objective(const Dataset& data, double s) {
  detail::require_pairs(data);
  check_bandwidth(s);
  return detail::dfn_from_extremes(detail::neighbour_extremes(data), s);
}

inline double dfn_select(const Dataset& data, const SweepGrid& grid) {
  detail::require_pairs(data);
  const auto e = detail::neighbour_extremes(data);
  return detail::grid_argmax(grid, [&](double s) { return detail::dfn_from_extremes(e, s); });
}

// ------------------------------------------------------- randomized sweep

enum class SweepMethod { cv, dfn };

inline std::string to_string(SweepMethod m) { return m == SweepMethod::cv ? "cv" : "dfn"; }

inline SweepMethod parse_sweep_method(const std::string& name) {
  if (name == "cv") return SweepMethod::cv;
  if (name == "dfn") return SweepMethod::dfn;
  throw InvalidArgument("unknown sweep method '" + name + "' (expected cv|dfn)");
}

struct RandomizedSweepConfig {
  std::size_t M = 1;
  SampleSchedule schedule{1, 1, 1};
  SweepMethod method = SweepMethod::cv;
  SweepGrid s_grid{0.05, 10.0, 0.05};
  std::uint64_t seed = 0;
  bool with_replacement = true;
  // Repeated rows of a with-replacement draw enter the objective once. A
  // duplicate pair has kernel value 1 at every s, which pins both objectives
  // away from zero as s -> 0 and drags the argmax to the grid start.
  bool collapse_duplicates = true;
  unsigned threads = 1;

  void validate(std::size_t total) const {
    if (M < 1) throw InvalidArgument("M must be >= 1");
    schedule.validate_against(total);
  }
};

struct SweepSizeStats {
  std::size_t sample_size = 0;
  double mean = 0.0;
  double variance = 0.0;  // population variance over the M draws
  std::vector<double> draws;
  double seconds = 0.0;
};

inline double select_with(SweepMethod method, const Dataset& data, const SweepGrid& grid) {
  return method == SweepMethod::cv ? cv_select(data, grid) : dfn_select(data, grid);
}

inline std::vector<SweepSizeStats> randomized_sweep(const Dataset& data, const RandomizedSweepConfig& cfg) {
  cfg.validate(static_cast<std::size_t>(data.rows()));
  const auto sizes = cfg.schedule.sizes();
  const std::size_t cells = sizes.size() * cfg.M;
  std::vector<double> s_opt(cells);
  std::vector<double> secs(cells);
  parallel_for(cells, cfg.threads, [&](std::size_t c) {
    Stopwatch clock;
    const std::size_t a = c / cfg.M;
    const std::size_t r = c % cfg.M;
    auto rng = make_rng(cfg.seed, {a, r});
    auto rows = cfg.with_replacement ? draw_indices(data.rows(), sizes[a], rng)
                                     : draw_indices_without_replacement(data.rows(), sizes[a], rng);
    if (cfg.collapse_duplicates) {
      std::sort(rows.begin(), rows.end());
      rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
      if (rows.size() < 2) {
        // A single distinct row has no off-diagonal entries; fall back to the raw draw.
        rows.assign(2, rows.front());
      }
    }
    s_opt[c] = select_with(cfg.method, data.subset(rows), cfg.s_grid);
    secs[c] = clock.seconds();
  });
  std::vector<SweepSizeStats> out(sizes.size());
  for (std::size_t a = 0; a < sizes.size(); ++a) {
    auto& st = out[a];
    st.sample_size = sizes[a];
    st.draws.assign(s_opt.begin() + static_cast<std::ptrdiff_t>(a * cfg.M),
                    s_opt.begin() + static_cast<std::ptrdiff_t>((a + 1) * cfg.M));
    for (double v : st.draws) st.mean += v;
    st.mean /= static_cast<double>(cfg.M);
    for (double v : st.draws) st.variance += (v - st.mean) * (v - st.mean);
    st.variance /= static_cast<double>(cfg.M);
    for (std::size_t r = 0; r < cfg.M; ++r) st.seconds += secs[a * cfg.M + r];
  }
  return out;
}

}  // namespace svdd
