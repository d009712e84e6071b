#pragma once

// Difference quotients of sampled curves and P-spline smoothing
// (B-spline basis on equidistant knots with a difference penalty on the
// coefficients), with pointwise confidence bands and grid extremum search.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "svdd/dataset.hpp"
#include "svdd/error.hpp"

namespace svdd {

struct Curve {
  std::vector<double> xs;
  std::vector<double> ys;

  std::size_t size() const noexcept { return xs.size(); }

  void validate(std::size_t min_len = 2) const {
    if (xs.size() != ys.size()) throw InvalidArgument("curve xs and ys differ in length");
    if (xs.size() < min_len) {
      std::ostringstream msg;
      msg << "curve needs at least " << min_len << " points";
      throw InvalidArgument(msg.str());
    }
    for (std::size_t i = 1; i < xs.size(); ++i)
      if (!(xs[i] > xs[i - 1])) throw InvalidArgument("curve xs must be strictly increasing");
  }

  // Common step; throws unless spacing is uniform to 1e-9 relative.
  double uniform_step() const {
    const double h = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
    for (std::size_t i = 1; i < xs.size(); ++i)
      if (std::abs((xs[i] - xs[i - 1]) - h) > 1e-9 * h)
        throw InvalidArgument("curve grid is not uniformly spaced");
    return h;
  }
};

// dif(s_i) = (f(s_{i+1}) - f(s_i)) / ds, reported at s_i.
inline Curve first_difference(const Curve& c) {
  c.validate(2);
  const double h = c.uniform_step();
  Curve out;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    out.xs.push_back(c.xs[i]);
    out.ys.push_back((c.ys[i + 1] - c.ys[i]) / h);
  }
  return out;
}

// (f(s_{i+2}) - 2 f(s_{i+1}) + f(s_i)) / ds^2, reported at s_i.
inline Curve second_difference(const Curve& c) {
  c.validate(3);
  const double h = c.uniform_step();
  Curve out;
  for (std::size_t i = 0; i + 2 < c.size(); ++i) {
    out.xs.push_back(c.xs[i]);
    out.ys.push_back((c.ys[i + 2] - 2.0 * c.ys[i + 1] + c.ys[i]) / (h * h));
  }
  return out;
}

struct SmootherParams {
  std::size_t knots = 100;
  int degree = 3;
  int penalty_order = 2;
  std::optional<double> lambda;  // empty: choose by GCV over 10^-6 .. 10^6
};

struct SplineFit {
  std::size_t knots = 0;
  int degree = 3;
  int penalty_order = 2;
  double lambda = 0.0;
  Vector coefficients;
  double sigma2 = 0.0;
  double edf = 0.0;
  double gcv = 0.0;
  double rss = 0.0;
  double x_lo = 0.0;
  double x_hi = 0.0;
  // (B'B + lambda D'D)^-1 B'B (B'B + lambda D'D)^-1; times sigma2 gives Cov(c).
  Matrix covariance;

  double knot_spacing() const { return (x_hi - x_lo) / static_cast<double>(knots + 1); }
};

namespace detail {

// Non-zero cubic (or degree-p) B-spline values at x: basis functions
// first..first+degree, written to `out`. Returns `first`.
inline Index bspline_nonzero(double x, double x_lo, double h, std::size_t knots, int degree,
                             std::vector<double>& out) {
  const auto p = static_cast<std::size_t>(degree);
  auto j = static_cast<Index>(std::floor((x - x_lo) / h));
  j = std::clamp<Index>(j, 0, static_cast<Index>(knots));
  // Extended knot vector t_k = x_lo + (k - p) h; x lies in [t_mu, t_mu+1), mu = j + p.
  const auto t = [&](Index k) { return x_lo + static_cast<double>(k - static_cast<Index>(p)) * h; };
  const Index mu = j + static_cast<Index>(p);
  out.assign(p + 1, 0.0);
  std::vector<double> left(p + 1), right(p + 1);
  out[0] = 1.0;
  for (std::size_t r = 1; r <= p; ++r) {
    left[r] = x - t(mu + 1 - static_cast<Index>(r));
    right[r] = t(mu + static_cast<Index>(r)) - x;
    double saved = 0.0;
    for (std::size_t q = 0; q < r; ++q) {
      const double tmp = out[q] / (right[q + 1] + left[r - q]);
      out[q] = saved + right[q + 1] * tmp;
      saved = left[r - q] * tmp;
    }
    out[r] = saved;
  }
  return j;
}

inline Matrix difference_matrix(Index p, int order) {
  Matrix d = Matrix::Identity(p, p);
  for (int k = 0; k < order; ++k) {
    Matrix next(d.rows() - 1, p);
    for (Index r = 0; r + 1 < d.rows(); ++r) next.row(r) = d.row(r + 1) - d.row(r);
    d = std::move(next);
  }
  return d;
}

struct RawFit {
  Vector coef;
  Matrix a_inv;
  double edf = 0.0;
  double rss = 0.0;
};

inline RawFit solve_penalized(const Matrix& basis, const Matrix& btb, const Matrix& penalty,
                              const Vector& y, double lambda) {
  RawFit out;
  const Vector bty = basis.transpose() * y;
  const Index p = btb.rows();
  if (lambda > 0.0) {
    const Matrix a = btb + lambda * penalty;
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) throw SingularSystem("penalized normal equations are singular");
    out.a_inv = llt.solve(Matrix::Identity(p, p));
  } else {
    // Unpenalized: minimum-norm least squares through the pseudo-inverse.
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(btb);
    out.a_inv = cod.pseudoInverse();
  }
  out.coef = out.a_inv * bty;
  out.edf = (out.a_inv * btb).trace();
  out.rss = (y - basis * out.coef).squaredNorm();
  return out;
}

}  // namespace detail

// Penalized B-spline regression of curve.ys on curve.xs.
inline SplineFit fit_pspline(const Curve& curve, std::size_t knots, int degree = 3,
                             int penalty_order = 2, std::optional<double> lambda = std::nullopt) {
  curve.validate(2);
  if (degree < 1) throw InvalidArgument("spline degree must be >= 1");
  if (penalty_order < 1) throw InvalidArgument("penalty order must be >= 1");
  if (knots < static_cast<std::size_t>(penalty_order) + 1)
    throw InvalidArgument("knot count must exceed the penalty order");
  if (curve.size() <= static_cast<std::size_t>(degree) + 1)
    throw InvalidArgument("too few points for the spline degree");
  if (lambda && !(*lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");

  const auto n = static_cast<Index>(curve.size());
  const auto p = static_cast<Index>(knots) + degree + 1;
  const double x_lo = curve.xs.front();
  const double x_hi = curve.xs.back();
  const double h = (x_hi - x_lo) / static_cast<double>(knots + 1);

  Matrix basis = Matrix::Zero(n, p);
  std::vector<double> vals;
  for (Index i = 0; i < n; ++i) {
    const Index first = detail::bspline_nonzero(curve.xs[static_cast<std::size_t>(i)], x_lo, h, knots,
                                                degree, vals);
    for (std::size_t q = 0; q < vals.size(); ++q) basis(i, first + static_cast<Index>(q)) = vals[q];
  }
  const Matrix btb = basis.transpose() * basis;
  const Matrix d = detail::difference_matrix(p, penalty_order);
  const Matrix penalty = d.transpose() * d;
  const Vector y = Eigen::Map<const Vector>(curve.ys.data(), n);
  const double nd = static_cast<double>(n);

  const auto gcv_of = [&](const detail::RawFit& f) {
    const double dof = nd - f.edf;
    return dof > 1e-8 ? nd * f.rss / (dof * dof) : std::numeric_limits<double>::infinity();
  };

  double chosen = 0.0;
  detail::RawFit best;
  if (lambda) {
    chosen = *lambda;
    best = detail::solve_penalized(basis, btb, penalty, y, chosen);
  } else {
    double best_gcv = std::numeric_limits<double>::infinity();
    for (int k = -6; k <= 6; ++k) {
      const double lam = std::pow(10.0, k);
      auto f = detail::solve_penalized(basis, btb, penalty, y, lam);
      const double g = gcv_of(f);
      if (g < best_gcv) {
        best_gcv = g;
        chosen = lam;
        best = std::move(f);
      }
    }
    if (!std::isfinite(best_gcv)) throw SingularSystem("GCV undefined for every candidate lambda");
  }

  SplineFit fit;
  fit.knots = knots;
  fit.degree = degree;
  fit.penalty_order = penalty_order;
  fit.lambda = chosen;
  fit.coefficients = best.coef;
  fit.edf = best.edf;
  fit.rss = best.rss;
  fit.gcv = gcv_of(best);
  const double dof = nd - best.edf;
  fit.sigma2 = (dof > 1e-8 && best.rss > 0.0) ? best.rss / dof : 0.0;
  fit.x_lo = x_lo;
  fit.x_hi = x_hi;
  fit.covariance = best.a_inv * btb * best.a_inv;
  return fit;
}

inline SplineFit fit_pspline(const Curve& curve, const SmootherParams& params) {
  return fit_pspline(curve, params.knots, params.degree, params.penalty_order, params.lambda);
}

struct SplineValue {
  double value = 0.0;
  double se = 0.0;
  double lower() const { return value - 1.96 * se; }
  double upper() const { return value + 1.96 * se; }
};

inline SplineValue eval_spline(const SplineFit& fit, double x) {
  const double slack = 1e-9 * (fit.x_hi - fit.x_lo);
  if (x < fit.x_lo - slack || x > fit.x_hi + slack) {
    std::ostringstream msg;
    msg << "x=" << x << " outside fitted range [" << fit.x_lo << ", " << fit.x_hi << "]";
    throw InvalidArgument(msg.str());
  }
  x = std::clamp(x, fit.x_lo, fit.x_hi);
  std::vector<double> vals;
  const Index first =
      detail::bspline_nonzero(x, fit.x_lo, fit.knot_spacing(), fit.knots, fit.degree, vals);
  const auto q = static_cast<Index>(vals.size());
  const Eigen::Map<const Vector> b(vals.data(), q);
  SplineValue out;
  out.value = b.dot(fit.coefficients.segment(first, q));
  const double var = fit.sigma2 * b.dot(fit.covariance.block(first, first, q, q) * b);
  out.se = std::sqrt(std::max(var, 0.0));
  return out;
}

inline std::vector<SplineValue> eval_spline(const SplineFit& fit, std::span<const double> xs) {
  std::vector<SplineValue> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(eval_spline(fit, x));
  return out;
}

// Indices of strict interior local maxima of `values`; a flat top counts once,
// at its leftmost point.
inline std::vector<std::size_t> local_maxima(std::span<const double> values) {
  std::vector<std::size_t> out;
  const std::size_t n = values.size();
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (!(values[k] > values[k - 1])) continue;
    std::size_t e = k;
    while (e + 1 < n && values[e + 1] == values[k]) ++e;
    if (e + 1 < n && values[e + 1] < values[k]) out.push_back(k);
    k = e;
  }
  return out;
}

// Smallest grid x where the spline has a local maximum.
inline double first_local_max(const SplineFit& fit, std::span<const double> xs) {
  std::vector<double> v;
  v.reserve(xs.size());
  for (double x : xs) v.push_back(eval_spline(fit, x).value);
  const auto peaks = local_maxima(v);
  if (peaks.empty()) throw NoInteriorMaximum("no interior maximum on the grid; widen the s range");
  return xs[peaks.front()];
}

// Smallest grid x where the 95% band of the spline contains zero.
inline double first_zero_crossing_of_band(const SplineFit& fit, std::span<const double> xs) {
  for (double x : xs) {
    const auto v = eval_spline(fit, x);
    if (v.lower() <= 0.0 && 0.0 <= v.upper()) return x;
  }
  throw NoZeroCrossing("confidence band never contains zero on the grid; widen the s range");
}

// Penalized seminorm |D_d c|.
inline double penalty_norm(const SplineFit& fit) {
  const Matrix d = detail::difference_matrix(fit.coefficients.size(), fit.penalty_order);
  return (d * fit.coefficients).norm();
}

}  // namespace svdd
