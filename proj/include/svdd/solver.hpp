#pragma once

// Gaussian-kernel SVDD: dual QP solve, threshold, scoring and bandwidth sweeps.
//
// The dual being solved is
//
//   max_a  sum_i a_i K(x_i, x_i) - sum_ij a_i a_j K(x_i, x_j)
//   s.t.   sum_i a_i = 1,  0 <= a_i <= C,  C = 1 / (n f)
//
// by pairwise coordinate ascent (SMO with maximal-violating-pair selection).
// Internally the solver minimises F(a) = a'Ka - a'diag(K) and tracks
// G = grad F = 2Ka - 1; at an optimum every free a_i shares the same G_i.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "svdd/dataset.hpp"
#include "svdd/error.hpp"
#include "svdd/kernel.hpp"
#include "svdd/parallel.hpp"

namespace svdd {

struct SvddModel;

// Called once per trained model with the data it was trained on.
using ModelObserver = std::function<void(const Dataset&, const SvddModel&)>;

struct SolverSettings {
  double kkt_tol = 1e-6;
  // Iteration budget. 0 selects max(10 n, 1000) passes' worth (see max_iterations()).
  std::size_t max_passes = 0;
  Index dense_limit = KernelRows::default_dense_limit;
  std::size_t cache_bytes = KernelRows::default_cache_bytes;
  ModelObserver observer;
};

struct SvddConfig {
  double s = 1.0;
  double f = 0.001;
  SolverSettings solver;

  double penalty(Index n) const { return 1.0 / (static_cast<double>(n) * f); }

  // One pass is n pair updates.
  std::size_t max_iterations(Index n) const {
    const auto nn = static_cast<std::size_t>(n);
    const std::size_t passes = solver.max_passes ? solver.max_passes : std::max<std::size_t>(10 * nn, 1000);
    return passes * std::max<std::size_t>(nn, 1);
  }

  void validate() const {
    check_bandwidth(s);
    if (!(f > 0.0)) throw InvalidArgument("outlier fraction f must be > 0");
    if (f > 1.0) throw InfeasibleProblem("n*C = 1/f < 1: sum(alpha) = 1 is infeasible");
    if (!(solver.kkt_tol > 0.0)) throw InvalidArgument("kkt_tol must be > 0");
  }
};

struct SvddModel {
  Matrix sv_points;
  Vector alphas;
  std::vector<Index> sv_indices;     // rows of the training set
  std::vector<bool> sv_interior;     // alpha < C
  double s = 0.0;
  double f = 0.0;
  double C = 0.0;
  double r_squared = 0.0;
  double oof = 0.0;
  double alpha_k_alpha = 0.0;        // sum_ij a_i a_j K(sv_i, sv_j), the constant term of D^2
  Index nsv = 0;
  std::size_t iterations = 0;
  double max_violation = 0.0;

  Index dims() const noexcept { return sv_points.cols(); }
  std::span<const double> sv(Index i) const noexcept {
    return {sv_points.data() + i * sv_points.cols(), static_cast<std::size_t>(sv_points.cols())};
  }
};

struct ScoreResult {
  double distance_sq = 0.0;
  bool is_outlier = false;
};

// Threshold R^2 from the multipliers of a set of support vectors and their
// kernel values kij(a, b). Averages D^2 over every SV with alpha < C; when all
// SVs sit at C, falls back to the largest D^2 so no training SV scores outside.
// Optionally reports the quadratic term sum_ij a_i a_j K_ij.
template <typename KernelFn>
double compute_threshold(std::span<const double> alphas, KernelFn&& kij, double C,
                         double* quad_out = nullptr) {
  const auto n = alphas.size();
  if (n == 0) throw InvalidArgument("compute_threshold needs at least one support vector");
  std::vector<double> ka(n, 0.0);  // (K a)_k
  for (std::size_t a = 0; a < n; ++a) {
    ka[a] += alphas[a] * kij(a, a);
    for (std::size_t b = a + 1; b < n; ++b) {
      const double k = kij(a, b);
      ka[a] += alphas[b] * k;
      ka[b] += alphas[a] * k;
    }
  }
  double quad = 0.0;
  for (std::size_t a = 0; a < n; ++a) quad += alphas[a] * ka[a];
  if (quad_out) *quad_out = quad;

  double sum = 0.0;
  std::size_t count = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double d2 = kij(k, k) - 2.0 * ka[k] + quad;
    worst = std::max(worst, d2);
    if (alphas[k] < C) {
      sum += d2;
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : worst;
}

namespace detail {

// Initial gradient for a = 1/n everywhere: G_k = (2/n) sum_j K_kj - 1.
inline std::vector<double> uniform_gradient(KernelRows& kernel) {
  const Index n = kernel.size();
  std::vector<double> rowsum(static_cast<std::size_t>(n), 0.0);
  if (kernel.dense()) {
    for (Index i = 0; i < n; ++i) {
      const auto r = kernel.row(i);
      double acc = 0.0;
      for (double v : r) acc += v;
      rowsum[static_cast<std::size_t>(i)] = acc;
    }
  } else {
    for (Index i = 0; i < n; ++i) {
      rowsum[static_cast<std::size_t>(i)] += 1.0;
      for (Index j = i + 1; j < n; ++j) {
        const double k = kernel(i, j);
        rowsum[static_cast<std::size_t>(i)] += k;
        rowsum[static_cast<std::size_t>(j)] += k;
      }
    }
  }
  const double scale = 2.0 / static_cast<double>(n);
  for (auto& v : rowsum) v = v * scale - 1.0;
  return rowsum;
}

}  // namespace detail

// Solves the SVDD dual on `data`. Throws InfeasibleProblem when f > 1 and
// NonConvergence when the iteration budget runs out.
inline SvddModel solve_dual(const Dataset& data, const SvddConfig& config) {
  config.validate();
  const Index n = data.rows();
  const double C = config.penalty(n);
  const double tol = config.solver.kkt_tol;

  KernelRows kernel(data, config.s, config.solver.dense_limit, config.solver.cache_bytes);
  std::vector<double> alpha(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
  std::vector<double> grad = detail::uniform_gradient(kernel);

  const std::size_t budget = config.max_iterations(n);
  std::size_t iter = 0;
  double violation = 0.0;
  // Multipliers at or below the cut leave the problem; the rest is re-solved
  // so the stored model still meets the KKT tolerance.
  const double cut = tol * C;
  std::vector<bool> dropped(static_cast<std::size_t>(n), false);
  for (int round = 0;; ++round) {
    for (;;) {
      // i: smallest gradient among a_i < C; j: largest among a_j > 0. Lowest index wins ties.
      Index i = -1;
      Index j = -1;
      double g_min = std::numeric_limits<double>::infinity();
      double g_max = -std::numeric_limits<double>::infinity();
      for (Index k = 0; k < n; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        if (dropped[kk]) continue;
        const double g = grad[kk];
        if (alpha[kk] < C && g < g_min) {
          g_min = g;
          i = k;
        }
        if (alpha[kk] > 0.0 && g > g_max) {
          g_max = g;
          j = k;
        }
      }
      violation = (i < 0 || j < 0) ? 0.0 : g_max - g_min;
      if (violation < tol) break;
      if (iter >= budget) {
        double objective = 0.0;
        for (Index k = 0; k < n; ++k)
          objective += alpha[static_cast<std::size_t>(k)] * (grad[static_cast<std::size_t>(k)] + 1.0) / 2.0;
        std::ostringstream msg;
        msg << "SMO did not converge at s=" << config.s << " after " << iter
            << " iterations (max violation " << violation << ")";
        throw NonConvergence(msg.str(), iter, violation, 1.0 - objective);
      }
      ++iter;

      const auto [ki, kj] = kernel.rows(i, j);
      const auto ii = static_cast<std::size_t>(i);
      const auto jj = static_cast<std::size_t>(j);
      const double eta = std::max(ki[ii] + kj[jj] - 2.0 * ki[jj], 1e-12);
      double t = (grad[jj] - grad[ii]) / (2.0 * eta);
      const double t_max = std::min(C - alpha[ii], alpha[jj]);
      if (t >= t_max) {
        t = t_max;
        if (t == alpha[jj]) {
          alpha[jj] = 0.0;
          alpha[ii] += t;
        } else {
          alpha[ii] = C;
          alpha[jj] -= t;
        }
      } else {
        alpha[ii] += t;
        alpha[jj] -= t;
      }
      const double two_t = 2.0 * t;
      for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += two_t * (ki[k] - kj[k]);
    }
    double small_mass = 0.0;
    double free_sum = 0.0;
    for (double a : alpha) {
      if (a > 0.0 && a <= cut) small_mass += a;
      else if (a > cut && a < C) free_sum += a;
    }
    if (small_mass == 0.0 || free_sum == 0.0 || round == 8) break;
    for (std::size_t k = 0; k < alpha.size(); ++k)
      if (alpha[k] > 0.0 && alpha[k] <= cut) {
        alpha[k] = 0.0;
        dropped[k] = true;
      }
    const double grow = 1.0 + small_mass / free_sum;
    std::vector<Index> support;
    for (Index k = 0; k < n; ++k) {
      auto& a = alpha[static_cast<std::size_t>(k)];
      if (a > 0.0 && a < C) a = std::min(a * grow, C);
      if (a > 0.0) support.push_back(k);
    }
    for (Index k = 0; k < n; ++k) {
      if (dropped[static_cast<std::size_t>(k)]) continue;
      double acc = 0.0;
      for (Index l : support) acc += alpha[static_cast<std::size_t>(l)] * kernel(k, l);
      grad[static_cast<std::size_t>(k)] = 2.0 * acc - 1.0;
    }
  }

  // Objective from exact kernel entries over the non-zero multipliers.
  std::vector<Index> active;
  for (Index k = 0; k < n; ++k)
    if (alpha[static_cast<std::size_t>(k)] > 0.0) active.push_back(k);
  double quad_full = 0.0;
  for (std::size_t a = 0; a < active.size(); ++a) {
    const double aa = alpha[static_cast<std::size_t>(active[a])];
    quad_full += aa * aa;
    for (std::size_t b = a + 1; b < active.size(); ++b)
      quad_full += 2.0 * aa * alpha[static_cast<std::size_t>(active[b])] * kernel(active[a], active[b]);
  }

  SvddModel model;
  model.s = config.s;
  model.f = config.f;
  model.C = C;
  model.oof = 1.0 - quad_full;
  model.iterations = iter;
  model.max_violation = violation;

  // Leftovers only when the re-solve rounds ran out.
  double kept_sum = 0.0;
  double free_sum = 0.0;
  for (Index k : active) {
    const double a = alpha[static_cast<std::size_t>(k)];
    if (a > cut) {
      model.sv_indices.push_back(k);
      kept_sum += a;
      if (a < C) free_sum += a;
    }
  }
  if (model.sv_indices.empty()) {
    // Only possible for pathological tolerances; keep the largest multiplier.
    const auto best = std::max_element(alpha.begin(), alpha.end()) - alpha.begin();
    model.sv_indices.push_back(best);
    kept_sum = alpha[static_cast<std::size_t>(best)];
    free_sum = kept_sum < C ? kept_sum : 0.0;
  }
  const double deficit = 1.0 - kept_sum;
  const double free_scale = free_sum > 0.0 ? 1.0 + deficit / free_sum : 1.0;

  model.nsv = static_cast<Index>(model.sv_indices.size());
  model.sv_points.resize(model.nsv, data.cols());
  model.alphas.resize(model.nsv);
  model.sv_interior.resize(static_cast<std::size_t>(model.nsv));
  for (Index a = 0; a < model.nsv; ++a) {
    const Index k = model.sv_indices[static_cast<std::size_t>(a)];
    double v = alpha[static_cast<std::size_t>(k)];
    const bool interior = v < C;
    if (interior) v = std::min(v * free_scale, C);
    model.alphas[a] = v;
    model.sv_interior[static_cast<std::size_t>(a)] = interior;
    model.sv_points.row(a) = data.points().row(k);
  }

  const auto& idx = model.sv_indices;
  model.r_squared = compute_threshold(
      std::span<const double>(model.alphas.data(), static_cast<std::size_t>(model.nsv)),
      [&](std::size_t a, std::size_t b) { return kernel(idx[a], idx[b]); }, C, &model.alpha_k_alpha);

  if (config.solver.observer) config.solver.observer(data, model);
  return model;
}

inline ScoreResult score(const SvddModel& model, std::span<const double> z) {
  if (static_cast<Index>(z.size()) != model.dims())
    throw DimensionMismatch("scored point dimension does not match the model");
  const double gamma = 1.0 / (2.0 * model.s * model.s);
  double cross = 0.0;
  for (Index i = 0; i < model.nsv; ++i)
    cross += model.alphas[i] * std::exp(-squared_distance(model.sv(i), z) * gamma);
  const double d2 = 1.0 - 2.0 * cross + model.alpha_k_alpha;
  return {d2, d2 > model.r_squared};
}

// Per-row outlier flags for a whole dataset.
inline std::vector<ScoreResult> score_all(const SvddModel& model, const Dataset& data) {
  std::vector<ScoreResult> out;
  out.reserve(static_cast<std::size_t>(data.rows()));
  for (Index i = 0; i < data.rows(); ++i) out.push_back(score(model, data.row(i)));
  return out;
}

// OOF, NSV and solve time along a bandwidth grid.
struct TrainCurve {
  std::vector<double> s;
  std::vector<double> oof;
  std::vector<Index> nsv;
  std::vector<double> seconds;
};

// One full solve_dual per grid value; grid order is preserved for any thread count.
inline TrainCurve train_curve(const Dataset& data, const SweepGrid& grid, double f,
                              const SolverSettings& solver = {}, unsigned threads = 1) {
  const std::size_t count = grid.size();
  TrainCurve out{grid.values(), std::vector<double>(count), std::vector<Index>(count),
                 std::vector<double>(count)};
  parallel_for(count, threads, [&](std::size_t k) {
    Stopwatch clock;
    const auto model = solve_dual(data, SvddConfig{grid[k], f, solver});
    out.oof[k] = model.oof;
    out.nsv[k] = model.nsv;
    out.seconds[k] = clock.seconds();
  });
  return out;
}

}  // namespace svdd
