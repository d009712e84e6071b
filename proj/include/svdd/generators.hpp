#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "svdd/dataset.hpp"
#include "svdd/error.hpp"
#include "svdd/random.hpp"

namespace svdd {

// Five-pointed star: outer radius 4, inner radius 2, centred at the origin,
// first tip pointing up.
struct StarShape {
  static constexpr double outer_radius = 4.0;
  static constexpr double inner_radius = 2.0;
  static constexpr std::size_t min_points = 50;

  static std::array<std::array<double, 2>, 10> vertices() {
    std::array<std::array<double, 2>, 10> v{};
    for (int k = 0; k < 10; ++k) {
      const double r = (k % 2 == 0) ? outer_radius : inner_radius;
      const double a = std::numbers::pi / 2.0 + k * std::numbers::pi / 5.0;
      v[static_cast<std::size_t>(k)] = {r * std::cos(a), r * std::sin(a)};
    }
    return v;
  }

  // Even-odd ray casting against the star polygon.
  static bool contains(double x, double y) {
    static const auto poly = vertices();
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
      const auto& a = poly[i];
      const auto& b = poly[j];
      if ((a[1] > y) != (b[1] > y)) {
        const double xc = (b[0] - a[0]) * (y - a[1]) / (b[1] - a[1]) + a[0];
        if (x < xc) inside = !inside;
      }
    }
    return inside;
  }
};

// Three isotropic Gaussian blobs, truncated at 4 sigma so membership is exact.
struct ThreeClusterShape {
  static constexpr double sigma = 0.35;
  static constexpr double truncation = 4.0 * sigma;
  static constexpr std::size_t min_points = 30;
  static constexpr std::array<std::array<double, 2>, 3> centers{{{0.0, 0.0}, {4.0, 0.0}, {2.0, 3.5}}};

  static bool contains(double x, double y) {
    for (const auto& c : centers)
      if (std::hypot(x - c[0], y - c[1]) <= truncation) return true;
    return false;
  }
};

// Upper half annulus: theta in [0, pi], r in [2, 3].
struct BananaShape {
  static constexpr double r_inner = 2.0;
  static constexpr double r_outer = 3.0;
  static constexpr std::size_t min_points = 50;

  static bool contains(double x, double y) {
    const double r = std::hypot(x, y);
    return y >= 0.0 && r >= r_inner && r <= r_outer;
  }
};

enum class Shape { star, clusters3, banana };

inline std::string to_string(Shape s) {
  switch (s) {
    case Shape::star: return "star";
    case Shape::clusters3: return "clusters3";
    case Shape::banana: return "banana";
  }
  return "unknown";
}

inline Shape parse_shape(const std::string& name) {
  if (name == "star") return Shape::star;
  if (name == "clusters3") return Shape::clusters3;
  if (name == "banana") return Shape::banana;
  throw InvalidArgument("unknown shape '" + name + "' (expected star|clusters3|banana)");
}

inline bool inside_shape(Shape shape, std::span<const double> p) {
  if (p.size() != 2) throw DimensionMismatch("shape membership needs a 2-D point");
  switch (shape) {
    case Shape::star: return StarShape::contains(p[0], p[1]);
    case Shape::clusters3: return ThreeClusterShape::contains(p[0], p[1]);
    case Shape::banana: return BananaShape::contains(p[0], p[1]);
  }
  return false;
}

inline bool inside_star(std::span<const double> p) { return inside_shape(Shape::star, p); }

namespace detail {
inline Dataset points_2d(std::vector<double>&& xy) {
  const auto n = static_cast<Index>(xy.size() / 2);
  return Dataset(Eigen::Map<const Matrix>(xy.data(), n, 2), std::nullopt, {"x", "y"});
}
}  // namespace detail

// Rejection sampling from the bounding square against the star polygon.
inline Dataset gen_star(std::size_t n, std::uint64_t seed) {
  if (n < StarShape::min_points) throw InvalidArgument("gen_star needs n >= 50");
  auto rng = make_rng(seed, {0x5717});
  std::uniform_real_distribution<double> u(-StarShape::outer_radius, StarShape::outer_radius);
  std::vector<double> xy;
  xy.reserve(2 * n);
  while (xy.size() < 2 * n) {
    const double x = u(rng);
    const double y = u(rng);
    if (StarShape::contains(x, y)) {
      xy.push_back(x);
      xy.push_back(y);
    }
  }
  return detail::points_2d(std::move(xy));
}

// Points assigned round-robin to the three centres.
inline Dataset gen_three_clusters(std::size_t n, std::uint64_t seed) {
  if (n < ThreeClusterShape::min_points) throw InvalidArgument("gen_three_clusters needs n >= 30");
  auto rng = make_rng(seed, {0xC3});
  std::normal_distribution<double> g(0.0, ThreeClusterShape::sigma);
  std::vector<double> xy;
  xy.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = ThreeClusterShape::centers[i % 3];
    double dx = 0.0;
    double dy = 0.0;
    do {
      dx = g(rng);
      dy = g(rng);
    } while (std::hypot(dx, dy) > ThreeClusterShape::truncation);
    xy.push_back(c[0] + dx);
    xy.push_back(c[1] + dy);
  }
  return detail::points_2d(std::move(xy));
}

inline Dataset gen_banana(std::size_t n, std::uint64_t seed) {
  if (n < BananaShape::min_points) throw InvalidArgument("gen_banana needs n >= 50");
  auto rng = make_rng(seed, {0xBA4A4A});
  std::uniform_real_distribution<double> theta(0.0, std::numbers::pi);
  std::uniform_real_distribution<double> radius(BananaShape::r_inner, BananaShape::r_outer);
  std::vector<double> xy;
  xy.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = theta(rng);
    const double r = radius(rng);
    xy.push_back(r * std::cos(t));
    xy.push_back(r * std::sin(t));
  }
  return detail::points_2d(std::move(xy));
}

inline Dataset generate(Shape shape, std::size_t n, std::uint64_t seed) {
  switch (shape) {
    case Shape::star: return gen_star(n, seed);
    case Shape::clusters3: return gen_three_clusters(n, seed);
    case Shape::banana: return gen_banana(n, seed);
  }
  throw InvalidArgument("unknown shape");
}

// k row indices drawn uniformly with replacement.
inline std::vector<Index> draw_indices(Index n, std::size_t k, Rng& rng) {
  if (k == 0) throw InvalidArgument("sample size must be >= 1");
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::vector<Index> idx(k);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

// k distinct row indices (k <= n), in random order.
inline std::vector<Index> draw_indices_without_replacement(Index n, std::size_t k, Rng& rng) {
  if (k == 0) throw InvalidArgument("sample size must be >= 1");
  if (static_cast<Index>(k) > n) throw InvalidArgument("sample larger than dataset without replacement");
  std::vector<Index> all(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(k);
  return all;
}

inline Dataset draw_sample(const Dataset& data, std::size_t k, std::uint64_t seed) {
  auto rng = make_rng(seed, {0xD5});
  return data.subset(draw_indices(data.rows(), k, rng));
}

// Uniform points in an axis-aligned box, labelled target when `truth` holds.
template <typename Membership>
Dataset uniform_box(std::size_t n, double xlo, double xhi, double ylo, double yhi,
                    std::uint64_t seed, Membership truth) {
  if (n == 0) throw InvalidArgument("uniform_box needs n >= 1");
  auto rng = make_rng(seed, {0xB0C5});
  std::uniform_real_distribution<double> ux(xlo, xhi);
  std::uniform_real_distribution<double> uy(ylo, yhi);
  Matrix pts(static_cast<Index>(n), 2);
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::array<double, 2> p{ux(rng), uy(rng)};
    pts(static_cast<Index>(i), 0) = p[0];
    pts(static_cast<Index>(i), 1) = p[1];
    labels[i] = truth(std::span<const double>(p)) ? Label::target : Label::other;
  }
  return Dataset(std::move(pts), std::move(labels), {"x", "y"});
}

}  // namespace svdd
