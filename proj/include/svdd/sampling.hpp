#pragma once

// Sampling SVDD: approximate training by repeated solves on small random
// samples merged with the current support vectors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "svdd/dataset.hpp"
#include "svdd/error.hpp"
#include "svdd/generators.hpp"
#include "svdd/random.hpp"
#include "svdd/solver.hpp"

namespace svdd {

struct SamplingTrainConfig {
  std::size_t sample_size = 0;
  std::size_t max_iters = 200;
  std::size_t stall_iters = 5;
  double r2_rel_tol = 0.01;
  std::uint64_t seed = 0;

  void validate() const {
    if (sample_size < 2) throw InvalidArgument("sample_size must be >= 2");
    if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
    if (stall_iters < 1) throw InvalidArgument("stall_iters must be >= 1");
    if (!(r2_rel_tol >= 0.0)) throw InvalidArgument("r2_rel_tol must be >= 0");
  }
};

struct SamplingResult {
  SvddModel model;  // sv_indices refer to rows of the full dataset
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> r2_trace;
};

// Each iteration draws sample_size rows with replacement, solves the SVDD on
// (sample U current SVs), and keeps the new SVs as the working set. Stops once
// R^2 has moved by at most r2_rel_tol (relative) for stall_iters consecutive
// iterations, or after max_iters with converged = false. A sample size of at
// least N trains once on the full dataset.
inline SamplingResult sample_train(const Dataset& data, double s, double f,
                                   const SamplingTrainConfig& cfg,
                                   const SolverSettings& solver = {}) {
  cfg.validate();
  const Index total = data.rows();
  const SvddConfig svdd_cfg{s, f, solver};
  SamplingResult out;

  if (static_cast<Index>(cfg.sample_size) >= total) {
    out.model = solve_dual(data, svdd_cfg);
    out.iterations = 1;
    out.converged = true;
    out.r2_trace.push_back(out.model.r_squared);
    return out;
  }

  auto rng = make_rng(cfg.seed, {0x5A});
  std::vector<Index> working;
  std::size_t stall = 0;
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    auto rows = draw_indices(total, cfg.sample_size, rng);
    rows.insert(rows.end(), working.begin(), working.end());
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());

    SvddModel model = solve_dual(data.subset(rows), svdd_cfg);
    for (auto& k : model.sv_indices) k = rows[static_cast<std::size_t>(k)];
    working = model.sv_indices;
    std::sort(working.begin(), working.end());

    const double r2 = model.r_squared;
    if (!out.r2_trace.empty()) {
      const double prev = out.r2_trace.back();
      const double scale = std::max(std::abs(prev), 1e-300);
      stall = std::abs(r2 - prev) <= cfg.r2_rel_tol * scale ? stall + 1 : 0;
    }
    out.r2_trace.push_back(r2);
    out.model = std::move(model);
    out.iterations = it + 1;
    if (stall >= cfg.stall_iters) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace svdd
