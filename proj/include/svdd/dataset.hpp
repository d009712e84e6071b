#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "svdd/error.hpp"

namespace svdd {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Label : std::uint8_t { target, other };

// n x m observation matrix with optional per-row labels and column names.
// Immutable once built; the constructor enforces n >= 1, m >= 1, finite
// entries and label length n.
class Dataset {
 public:
  explicit Dataset(Matrix points, std::optional<std::vector<Label>> labels = std::nullopt,
                   std::vector<std::string> names = {})
      : points_(std::move(points)), labels_(std::move(labels)), names_(std::move(names)) {
    if (points_.rows() < 1 || points_.cols() < 1)
      throw InvalidArgument("dataset must have at least one row and one column");
    if (!points_.allFinite()) throw InvalidArgument("dataset contains NaN or Inf");
    if (labels_ && static_cast<Index>(labels_->size()) != points_.rows())
      throw InvalidArgument("label count does not match row count");
    if (!names_.empty() && static_cast<Index>(names_.size()) != points_.cols())
      throw InvalidArgument("column name count does not match column count");
  }

  Index rows() const noexcept { return points_.rows(); }
  Index cols() const noexcept { return points_.cols(); }
  const Matrix& points() const noexcept { return points_; }

  std::span<const double> row(Index i) const noexcept {
    return {points_.data() + i * points_.cols(), static_cast<std::size_t>(points_.cols())};
  }

  bool has_labels() const noexcept { return labels_.has_value(); }
  const std::vector<Label>& labels() const {
    if (!labels_) throw InvalidArgument("dataset has no labels");
    return *labels_;
  }
  const std::vector<std::string>& names() const noexcept { return names_; }

  // Rows in the given order (duplicates allowed); labels and names follow.
  Dataset subset(std::span<const Index> indices) const {
    if (indices.empty()) throw InvalidArgument("subset needs at least one index");
    Matrix out(static_cast<Index>(indices.size()), cols());
    std::optional<std::vector<Label>> lab;
    if (labels_) lab.emplace();
    for (std::size_t k = 0; k < indices.size(); ++k) {
      const Index i = indices[k];
      if (i < 0 || i >= rows()) throw InvalidArgument("subset index out of range");
      out.row(static_cast<Index>(k)) = points_.row(i);
      if (lab) lab->push_back((*labels_)[static_cast<std::size_t>(i)]);
    }
    return Dataset(std::move(out), std::move(lab), names_);
  }

  // Rows whose label is `which`. Requires labels.
  Dataset filter(Label which) const {
    std::vector<Index> keep;
    const auto& lab = labels();
    for (Index i = 0; i < rows(); ++i)
      if (lab[static_cast<std::size_t>(i)] == which) keep.push_back(i);
    return subset(keep);
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.points_.rows() == b.points_.rows() && a.points_.cols() == b.points_.cols() &&
           a.points_ == b.points_ && a.labels_ == b.labels_;
  }

 private:
  Matrix points_;
  std::optional<std::vector<Label>> labels_;
  std::vector<std::string> names_;
};

// Evenly spaced bandwidth values s_min, s_min + ds, ..., <= s_max.
class SweepGrid {
 public:
  SweepGrid(double s_min, double s_max, double delta_s)
      : s_min_(s_min), s_max_(s_max), delta_s_(delta_s) {
    if (!(s_min > 0.0) || !(s_max > s_min) || !(delta_s > 0.0))
      throw InvalidArgument("sweep grid needs 0 < s_min < s_max and delta_s > 0");
    count_ = static_cast<std::size_t>(std::floor((s_max - s_min) / delta_s + 1e-9)) + 1;
    if (count_ < 4) throw InvalidArgument("sweep grid needs at least 4 points");
  }

  double s_min() const noexcept { return s_min_; }
  double s_max() const noexcept { return s_max_; }
  double delta_s() const noexcept { return delta_s_; }
  std::size_t size() const noexcept { return count_; }
  double operator[](std::size_t k) const noexcept {
    return s_min_ + static_cast<double>(k) * delta_s_;
  }

  std::vector<double> values() const {
    std::vector<double> v(count_);
    for (std::size_t k = 0; k < count_; ++k) v[k] = (*this)[k];
    return v;
  }

 private:
  double s_min_;
  double s_max_;
  double delta_s_;
  std::size_t count_ = 0;
};

// Increasing sample sizes n_min, n_min + dn, ..., <= n_max.
class SampleSchedule {
 public:
  SampleSchedule(std::size_t n_min, std::size_t n_max, std::size_t delta_n, std::uint64_t seed = 0)
      : n_min_(n_min), n_max_(n_max), delta_n_(delta_n), seed_(seed) {
    if (n_min == 0 || delta_n == 0 || n_max < n_min)
      throw InvalidArgument("schedule needs 1 <= n_min <= n_max and delta_n >= 1");
  }

  // Schedule expressed as fractions of a dataset of size total, e.g. 5%..100% by 1%.
  // Sizes are rounded to the nearest integer; n_max is clamped to total.
  static SampleSchedule from_fractions(std::size_t total, double lo, double hi, double step,
                                       std::uint64_t seed = 0) {
    if (total == 0 || !(lo > 0.0) || hi < lo || !(step > 0.0))
      throw InvalidArgument("invalid fractional schedule");
    const auto round = [&](double frac) {
      return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(frac * total)));
    };
    return SampleSchedule(round(lo), std::min(total, round(hi)), round(step), seed);
  }

  std::size_t n_min() const noexcept { return n_min_; }
  std::size_t n_max() const noexcept { return n_max_; }
  std::size_t delta_n() const noexcept { return delta_n_; }
  std::uint64_t seed() const noexcept { return seed_; }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> out;
    for (std::size_t n = n_min_; n <= n_max_; n += delta_n_) out.push_back(n);
    return out;
  }

  void validate_against(std::size_t total) const {
    if (n_max_ > total) throw InvalidArgument("schedule n_max exceeds dataset size");
  }

 private:
  std::size_t n_min_;
  std::size_t n_max_;
  std::size_t delta_n_;
  std::uint64_t seed_;
};

struct CsvOptions {
  std::optional<std::string> label_column;
  std::string target_value = "1";
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

// Comma-separated, header row first, '.' decimal point. A label column, when
// named, is mapped to Label::target where the cell equals options.target_value.
inline Dataset parse_csv(std::istream& in, const CsvOptions& options = {},
                         const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line).empty())
    throw ParseError(source + ": empty file", 1, 0);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  std::vector<std::string> header;
  for (auto cell : detail::split_commas(line)) header.emplace_back(cell);

  std::optional<std::size_t> label_idx;
  if (options.label_column) {
    const auto it = std::find(header.begin(), header.end(), *options.label_column);
    if (it == header.end())
      throw ParseError(source + ": label column '" + *options.label_column + "' not found", 1, 0);
    label_idx = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != label_idx) names.push_back(header[c]);
  if (names.empty()) throw ParseError(source + ": no numeric columns", 1, 0);

  std::vector<double> values;
  std::vector<Label> labels;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_commas(line);
    if (cells.size() != header.size()) {
      std::ostringstream msg;
      msg << source << ": row " << row_no << " has " << cells.size() << " columns, expected "
          << header.size();
      throw ParseError(msg.str(), row_no, 0);
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_idx) {
        labels.push_back(cells[c] == options.target_value ? Label::target : Label::other);
        continue;
      }
      const auto v = detail::parse_double(cells[c]);
      if (!v) {
        std::ostringstream msg;
        msg << source << ": non-numeric value '" << cells[c] << "' at row " << row_no
            << ", column " << (c + 1) << " (" << header[c] << ")";
        throw ParseError(msg.str(), row_no, c + 1);
      }
      values.push_back(*v);
    }
  }
  if (values.empty()) throw ParseError(source + ": no data rows", row_no, 0);

  const auto m = static_cast<Index>(names.size());
  const auto n = static_cast<Index>(values.size()) / m;
  Matrix points = Eigen::Map<const Matrix>(values.data(), n, m);
  std::optional<std::vector<Label>> lab;
  if (label_idx) lab = std::move(labels);
  return Dataset(std::move(points), std::move(lab), std::move(names));
}

inline Dataset load_csv(const std::string& path, const CsvOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_csv(in, options, path);
}

// Writes shortest round-trip representations, so load_csv(write_csv(d)) == d.
// Labels, when present, go to a trailing column as "1" (target) / "0" (other).
inline void write_csv(std::ostream& out, const Dataset& data,
                      const std::string& label_column = "label") {
  for (Index c = 0; c < data.cols(); ++c) {
    if (c) out << ',';
    if (!data.names().empty())
      out << data.names()[static_cast<std::size_t>(c)];
    else
      out << 'x' << (c + 1);
  }
  if (data.has_labels()) out << ',' << label_column;
  out << '\n';
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index c = 0; c < data.cols(); ++c) {
      if (c) out << ',';
      out << detail::format_double(data.points()(i, c));
    }
    if (data.has_labels())
      out << ',' << (data.labels()[static_cast<std::size_t>(i)] == Label::target ? '1' : '0');
    out << '\n';
  }
}

inline void write_csv(const std::string& path, const Dataset& data,
                      const std::string& label_column = "label") {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_csv(out, data, label_column);
  if (!out) throw IoError("write failed for '" + path + "'");
}

struct Standardization {
  Vector mean;
  Vector scale;

  Dataset apply(const Dataset& data) const {
    if (data.cols() != mean.size()) throw DimensionMismatch("standardization dimension mismatch");
    Matrix out = data.points();
    for (Index c = 0; c < out.cols(); ++c)
      out.col(c) = (out.col(c).array() - mean[c]) / scale[c];
    std::optional<std::vector<Label>> lab;
    if (data.has_labels()) lab = data.labels();
    return Dataset(std::move(out), std::move(lab), data.names());
  }
};

// Column-wise z-score fitted on `data`. Constant columns keep scale 1.
inline Standardization fit_standardization(const Dataset& data) {
  Standardization st{data.points().colwise().mean().transpose(), Vector::Ones(data.cols())};
  if (data.rows() > 1) {
    for (Index c = 0; c < data.cols(); ++c) {
      const double var = (data.points().col(c).array() - st.mean[c]).square().sum() /
                         static_cast<double>(data.rows() - 1);
      if (var > 0.0) st.scale[c] = std::sqrt(var);
    }
  }
  return st;
}

// Largest pairwise Euclidean distance.
inline double diameter(const Dataset& data) {
  double best = 0.0;
  const auto& x = data.points();
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = i + 1; j < x.rows(); ++j) best = std::max(best, (x.row(i) - x.row(j)).squaredNorm());
  return std::sqrt(best);
}

}  // namespace svdd
