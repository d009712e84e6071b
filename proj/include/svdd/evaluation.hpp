#pragma once

// Scoring harness: confusion counts and F1, F1 along a bandwidth grid,
// 2-D grid scoring for boundary pictures, NSV curves, and CSV/SVG export.

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "svdd/dataset.hpp"
#include "svdd/error.hpp"
#include "svdd/parallel.hpp"
#include "svdd/pspline.hpp"
#include "svdd/selector.hpp"
#include "svdd/solver.hpp"

namespace svdd {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

// target & inside = TP, other & inside = FP, target & outside = FN,
// other & outside = TN. With inside_is_target = false the positive class is
// `other` and a positive prediction is `outside`.
inline ConfusionCounts confusion(std::span<const Label> truth, const std::vector<bool>& inside,
                                 bool inside_is_target = true) {
  if (truth.empty()) throw InvalidArgument("confusion needs at least one scored point");
  if (truth.size() != inside.size()) throw DimensionMismatch("truth and prediction lengths differ");
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool actual = (truth[i] == Label::target) == inside_is_target;
    const bool predicted = inside[i] == inside_is_target;
    if (actual && predicted) ++c.tp;
    else if (!actual && predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Degenerate denominators give 0.
inline F1Score f1(const ConfusionCounts& c) {
  F1Score out;
  if (c.tp == 0) return out;
  out.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  out.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

inline std::vector<bool> inside_flags(const SvddModel& model, const Dataset& data) {
  std::vector<bool> flags(static_cast<std::size_t>(data.rows()));
  for (Index i = 0; i < data.rows(); ++i) flags[static_cast<std::size_t>(i)] = !score(model, data.row(i)).is_outlier;
  return flags;
}

inline F1Score evaluate(const SvddModel& model, const Dataset& labelled, bool inside_is_target = true) {
  if (!labelled.has_labels()) throw InvalidArgument("scoring set has no labels");
  return f1(confusion(labelled.labels(), inside_flags(model, labelled), inside_is_target));
}

struct F1Curve {
  std::vector<double> s;
  std::vector<F1Score> scores;
  std::vector<Index> nsv;

  // Grid s with the largest F1; ties keep the smallest s.
  double best_s() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k)
      if (scores[k].f1 > scores[best].f1) best = k;
    return s.at(best);
  }
};

// Trains on `train` (its target rows when labelled) at every grid s and scores `scoring`.
inline F1Curve f1_sweep(const Dataset& train, const Dataset& scoring, const SweepGrid& grid, double f,
                        const SolverSettings& solver = {}, unsigned threads = 1,
                        bool inside_is_target = true) {
  if (!scoring.has_labels()) throw InvalidArgument("scoring set has no labels");
  const auto& labels = scoring.labels();
  const bool both = std::count(labels.begin(), labels.end(), Label::target) > 0 &&
                    std::count(labels.begin(), labels.end(), Label::other) > 0;
  if (!both) throw InvalidArgument("scoring set needs both target and other rows");
  if (train.cols() != scoring.cols()) throw DimensionMismatch("training and scoring sets differ in columns");
  const Dataset fit_on = train.has_labels() ? train.filter(Label::target) : train;

  const std::size_t count = grid.size();
  F1Curve out{grid.values(), std::vector<F1Score>(count), std::vector<Index>(count)};
  parallel_for(count, threads, [&](std::size_t k) {
    const auto model = solve_dual(fit_on, SvddConfig{grid[k], f, solver});
    out.scores[k] = evaluate(model, scoring, inside_is_target);
    out.nsv[k] = model.nsv;
  });
  return out;
}

// ------------------------------------------------------------- 2-D grids

struct Bounds {
  double xlo = 0.0;
  double xhi = 1.0;
  double ylo = 0.0;
  double yhi = 1.0;
};

// Bounding box of the first two columns, widened by 20% of its extent per side.
inline Bounds default_bounds(const Dataset& data) {
  if (data.cols() != 2) throw DimensionMismatch("2-D bounds need a 2-column dataset");
  const auto& p = data.points();
  Bounds b{p.col(0).minCoeff(), p.col(0).maxCoeff(), p.col(1).minCoeff(), p.col(1).maxCoeff()};
  const double wx = std::max(b.xhi - b.xlo, 1e-12);
  const double wy = std::max(b.yhi - b.ylo, 1e-12);
  b.xlo -= 0.2 * wx;
  b.xhi += 0.2 * wx;
  b.ylo -= 0.2 * wy;
  b.yhi += 0.2 * wy;
  return b;
}

struct FlagGrid {
  Bounds bounds;
  std::size_t resolution = 0;
  std::vector<char> inside;  // row-major: row = y index, column = x index

  double x(std::size_t col) const {
    return bounds.xlo + (static_cast<double>(col) + 0.5) * (bounds.xhi - bounds.xlo) / static_cast<double>(resolution);
  }
  double y(std::size_t row) const {
    return bounds.ylo + (static_cast<double>(row) + 0.5) * (bounds.yhi - bounds.ylo) / static_cast<double>(resolution);
  }
  bool at(std::size_t row, std::size_t col) const { return inside[row * resolution + col] != 0; }
  std::size_t inside_count() const {
    return static_cast<std::size_t>(std::count(inside.begin(), inside.end(), char{1}));
  }
};

inline FlagGrid grid_score_2d(const SvddModel& model, const Bounds& bounds, std::size_t resolution = 200,
                              unsigned threads = 1) {
  if (model.dims() != 2) throw DimensionMismatch("grid scoring needs a 2-D model");
  if (resolution < 2) throw InvalidArgument("grid resolution must be >= 2");
  if (!(bounds.xhi > bounds.xlo) || !(bounds.yhi > bounds.ylo)) throw InvalidArgument("empty grid bounds");
  FlagGrid g{bounds, resolution, std::vector<char>(resolution * resolution, 0)};
  parallel_for(resolution, threads, [&](std::size_t row) {
    for (std::size_t col = 0; col < resolution; ++col) {
      const double z[2] = {g.x(col), g.y(row)};
      g.inside[row * resolution + col] = score(model, z).is_outlier ? 0 : 1;
    }
  });
  return g;
}

inline Curve nsv_curve(const Dataset& data, const SweepGrid& grid, double f, const SolverSettings& solver = {},
                       unsigned threads = 1) {
  const auto tc = train_curve(data, grid, f, solver, threads);
  Curve c{tc.s, {}};
  for (Index v : tc.nsv) c.ys.push_back(static_cast<double>(v));
  return c;
}

// ---------------------------------------------------------------- export

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

inline void write_grid_csv(std::ostream& out, const FlagGrid& g) {
  out << "x,y,flag\n";
  for (std::size_t r = 0; r < g.resolution; ++r)
    for (std::size_t c = 0; c < g.resolution; ++c)
      out << detail::format_double(g.x(c)) << ',' << detail::format_double(g.y(r)) << ','
          << (g.at(r, c) ? 1 : 0) << '\n';
}

// Two-colour heatmap, one rect per horizontal run of equal cells; optional
// training points drawn on top.
inline void write_grid_svg(std::ostream& out, const FlagGrid& g, const Dataset* points = nullptr,
                           std::size_t pixels = 400) {
  const double cell = static_cast<double>(pixels) / static_cast<double>(g.resolution);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << pixels << "\" height=\"" << pixels
      << "\" shape-rendering=\"crispEdges\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#f4f4f4\"/>\n";
  for (std::size_t r = 0; r < g.resolution; ++r) {
    const double top = static_cast<double>(g.resolution - 1 - r) * cell;  // y grows upwards
    std::size_t c = 0;
    while (c < g.resolution) {
      std::size_t e = c;
      while (e < g.resolution && g.at(r, e) == g.at(r, c)) ++e;
      if (g.at(r, c))
        out << "<rect x=\"" << static_cast<double>(c) * cell << "\" y=\"" << top << "\" width=\""
            << static_cast<double>(e - c) * cell << "\" height=\"" << cell << "\" fill=\"#4a7ab5\"/>\n";
      c = e;
    }
  }
  if (points && points->cols() == 2) {
    const auto& b = g.bounds;
    for (Index i = 0; i < points->rows(); ++i) {
      const double px = (points->points()(i, 0) - b.xlo) / (b.xhi - b.xlo) * static_cast<double>(pixels);
      const double py = (b.yhi - points->points()(i, 1)) / (b.yhi - b.ylo) * static_cast<double>(pixels);
      out << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"1.5\" fill=\"#c0392b\"/>\n";
    }
  }
  out << "</svg>\n";
}

// s, raw, smoothed, lower95, upper95; the smoothed columns are empty without a fit.
inline void write_curve_csv(std::ostream& out, const Curve& raw, const SplineFit* fit = nullptr) {
  out << "s,raw,smoothed,lower95,upper95\n";
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out << detail::format_double(raw.xs[i]) << ',' << detail::format_double(raw.ys[i]);
    if (fit) {
      const auto v = eval_spline(*fit, raw.xs[i]);
      out << ',' << detail::format_double(v.value) << ',' << detail::format_double(v.lower()) << ','
          << detail::format_double(v.upper());
    } else {
      out << ",,,";
    }
    out << '\n';
  }
}

inline void write_trace_csv(std::ostream& out, const SelectionTrace& trace) {
  out << "n_i,s_opt,seconds\n";
  for (const auto& e : trace.entries)
    out << e.sample_size << ',' << (std::isnan(e.s_opt) ? std::string() : detail::format_double(e.s_opt)) << ','
        << detail::format_double(e.seconds) << '\n';
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepSizeStats>& stats) {
  out << "n_i,mean,var,seconds\n";
  for (const auto& st : stats)
    out << st.sample_size << ',' << detail::format_double(st.mean) << ',' << detail::format_double(st.variance)
        << ',' << detail::format_double(st.seconds) << '\n';
}

}  // namespace svdd
