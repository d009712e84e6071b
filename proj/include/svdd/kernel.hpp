#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "svdd/dataset.hpp"
#include "svdd/error.hpp"

namespace svdd {

// Sum of squared coordinate differences. Deliberately not |x|^2 + |y|^2 - 2xy,
// which cancels catastrophically for nearby points.
inline double squared_distance(std::span<const double> x, std::span<const double> y) {
  double d2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - y[k];
    d2 += d * d;
  }
  return d2;
}

inline void check_bandwidth(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("bandwidth s must be > 0");
}

// exp(-|x - y|^2 / (2 s^2))
inline double gaussian_kernel(std::span<const double> x, std::span<const double> y, double s) {
  if (x.size() != y.size()) throw DimensionMismatch("kernel arguments differ in dimension");
  check_bandwidth(s);
  return std::exp(-squared_distance(x, y) / (2.0 * s * s));
}

struct KernelMatrix {
  Matrix values;
  double bandwidth = 0.0;
};

// Upper triangle computed once per pair and mirrored, so symmetry is exact.
inline KernelMatrix kernel_matrix(const Dataset& data, double s) {
  check_bandwidth(s);
  const Index n = data.rows();
  const double gamma = 1.0 / (2.0 * s * s);
  Matrix k(n, n);
  for (Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    const auto xi = data.row(i);
    for (Index j = i + 1; j < n; ++j) {
      const double v = std::exp(-squared_distance(xi, data.row(j)) * gamma);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return {std::move(k), s};
}

// Row access to the kernel matrix of a training set. Small problems hold the
// full matrix; larger ones compute rows on demand behind an LRU cache.
class KernelRows {
 public:
  static constexpr Index default_dense_limit = 10000;
  static constexpr std::size_t default_cache_bytes = std::size_t{768} << 20;

  KernelRows(const Dataset& data, double s, Index dense_limit = default_dense_limit,
             std::size_t cache_bytes = default_cache_bytes)
      : data_(&data), s_(s), gamma_(1.0 / (2.0 * s * s)), n_(data.rows()) {
    check_bandwidth(s);
    if (n_ <= dense_limit) {
      dense_ = kernel_matrix(data, s).values;
      is_dense_ = true;
    } else {
      const std::size_t row_bytes = sizeof(double) * static_cast<std::size_t>(n_);
      capacity_ = std::max<std::size_t>(2, cache_bytes / row_bytes);
      slot_of_.assign(static_cast<std::size_t>(n_), -1);
    }
  }

  Index size() const noexcept { return n_; }
  double bandwidth() const noexcept { return s_; }
  bool dense() const noexcept { return is_dense_; }
  std::uint64_t rows_computed() const noexcept { return rows_computed_; }

  double operator()(Index i, Index j) const {
    if (is_dense_) return dense_(i, j);
    if (i == j) return 1.0;
    return std::exp(-squared_distance(data_->row(i), data_->row(j)) * gamma_);
  }

  // Row i. The span stays valid until the next call that may evict it.
  std::span<const double> row(Index i) { return fetch(i, -1); }

  // Rows i and j, both guaranteed resident while the pair is in use.
  std::pair<std::span<const double>, std::span<const double>> rows(Index i, Index j) {
    auto ri = fetch(i, j);
    auto rj = fetch(j, i);
    return {ri, rj};
  }

 private:
  std::span<const double> fetch(Index i, Index pinned) {
    const auto len = static_cast<std::size_t>(n_);
    if (is_dense_) return {dense_.data() + i * n_, len};
    ++clock_;
    auto& slot = slot_of_[static_cast<std::size_t>(i)];
    if (slot >= 0) {
      stamp_[static_cast<std::size_t>(slot)] = clock_;
      return {store_[static_cast<std::size_t>(slot)].data(), len};
    }
    std::size_t target;
    if (store_.size() < capacity_) {
      target = store_.size();
      store_.emplace_back(len);
      owner_.push_back(-1);
      stamp_.push_back(0);
    } else {
      target = 0;
      std::uint64_t oldest = UINT64_MAX;
      for (std::size_t k = 0; k < store_.size(); ++k) {
        if (owner_[k] == pinned) continue;
        if (stamp_[k] < oldest) {
          oldest = stamp_[k];
          target = k;
        }
      }
      slot_of_[static_cast<std::size_t>(owner_[target])] = -1;
    }
    auto& buf = store_[target];
    const auto xi = data_->row(i);
    for (Index j = 0; j < n_; ++j)
      buf[static_cast<std::size_t>(j)] = std::exp(-squared_distance(xi, data_->row(j)) * gamma_);
    buf[static_cast<std::size_t>(i)] = 1.0;
    ++rows_computed_;
    owner_[target] = i;
    stamp_[target] = clock_;
    slot = static_cast<std::int64_t>(target);
    return {buf.data(), len};
  }

  const Dataset* data_;
  double s_;
  double gamma_;
  Index n_;
  bool is_dense_ = false;
  Matrix dense_;
  std::size_t capacity_ = 0;
  std::vector<std::vector<double>> store_;
  std::vector<Index> owner_;
  std::vector<std::uint64_t> stamp_;
  std::vector<std::int64_t> slot_of_;
  std::uint64_t clock_ = 0;
  std::uint64_t rows_computed_ = 0;
};

}  // namespace svdd
