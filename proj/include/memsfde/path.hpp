#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "memsfde/error.hpp"
#include "memsfde/grid.hpp"

namespace memsfde {

/// A price history on [anchor - window, anchor] sampled at grid resolution.
///
/// Non-owning: `values` points into the path or initial path it was cut from,
/// which must outlive the segment.
struct HistorySegment {
  double anchor = 0.0;
  double window = 0.0;
  double step = 0.0;
  std::span<const double> values;

  std::size_t size() const { return values.size(); }

  /// Sample at offset s in [-window, 0]; s must be grid-aligned.
  double at_offset(double s) const {
    const std::size_t back = whole_steps(-s, step, "segment offset");
    if (back >= values.size()) throw ValidationError("offset outside segment");
    return values[values.size() - 1 - back];
  }

  bool strictly_positive() const {
    for (double v : values) {
      if (!(v > 0.0)) return false;
    }
    return true;
  }
};

/// theta on [-L, 0], optionally extended by a constant theta(-L) on [-gap-L, -L].
class InitialPath {
 public:
  /// `values` are samples of theta on [-window, 0] with spacing `step`.
  InitialPath(double window, double step, std::vector<double> values)
      : window_(window), step_(step), extension_(0.0), values_(std::move(values)) {
    if (!(window > 0.0)) throw ValidationError("initial path window must be positive");
    const std::size_t n = whole_steps(window, step, "the initial path window");
    if (values_.size() != n + 1) {
      throw ValidationError("initial path needs " + std::to_string(n + 1) + " samples, got " +
                            std::to_string(values_.size()));
    }
    for (double v : values_) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw ValidationError("initial path samples must be strictly positive and finite");
      }
    }
  }

  static InitialPath constant(double window, double step, double level) {
    const std::size_t n = whole_steps(window, step, "the initial path window");
    return InitialPath(window, step, std::vector<double>(n + 1, level));
  }

  double window() const { return window_; }
  double step() const { return step_; }
  double extension() const { return extension_; }

  /// All samples, covering [-extension-window, 0].
  std::span<const double> values() const { return values_; }

  /// Samples of the unextended theta on [-window, 0].
  std::span<const double> base() const {
    const std::size_t n = whole_steps(window_, step_, "the initial path window");
    return std::span<const double>(values_).last(n + 1);
  }

  double front() const { return values_.front(); }
  double present() const { return values_.back(); }

  /// Value at offset u in [-extension-window, 0]; linear between nodes.
  double at(double u) const {
    const double start = -extension_ - window_;
    const double tol = kDivisibilityTol * step_;
    if (u < start - tol || u > tol) throw ValidationError("offset outside initial path");
    const double x = std::clamp((u - start) / step_, 0.0, static_cast<double>(values_.size() - 1));
    const auto i = static_cast<std::size_t>(std::floor(x));
    if (i + 1 >= values_.size()) return values_.back();
    const double w = x - static_cast<double>(i);
    return values_[i] + w * (values_[i + 1] - values_[i]);
  }

 private:
  friend InitialPath extend_initial(const InitialPath& theta, double gap);

  double window_;
  double step_;
  double extension_;
  std::vector<double> values_;
};

/// theta-hat: theta on [-L, 0] and the constant theta(-L) on [-gap-L, -L].
/// Any previous extension of `theta` is discarded first.
inline InitialPath extend_initial(const InitialPath& theta, double gap) {
  if (gap < 0.0 || !std::isfinite(gap)) throw ValidationError("extension gap must be >= 0");
  const std::size_t extra = whole_steps(gap, theta.step(), "the extension gap");
  const auto base = theta.base();
  std::vector<double> values;
  values.reserve(extra + base.size());
  values.insert(values.end(), extra, base.front());
  values.insert(values.end(), base.begin(), base.end());
  InitialPath out(theta.window(), theta.step(), std::vector<double>(base.begin(), base.end()));
  out.values_ = std::move(values);
  out.extension_ = static_cast<double>(extra) * theta.step();
  return out;
}

enum class Measure { physical, risk_neutral };

inline const char* to_string(Measure m) { return m == Measure::physical ? "P" : "Q"; }

/// A simulated trajectory on [-extension-L, T] with the Brownian increments
/// that drove it on [0, T].
struct PathRecord {
  TimeGrid grid;
  std::vector<double> prices;
  std::vector<double> increments;
  Measure measure = Measure::physical;
  double gap = 0.0;
  double window = 0.0;

  /// Index of the node at t = 0.
  std::size_t zero_index() const { return grid.index_of(0.0); }
  double horizon() const { return grid.end(); }
};

/// S_t: the samples of `path` on [t - window, t].
inline HistorySegment segment_at(const PathRecord& path, double t, double window) {
  const std::size_t end = path.grid.index_of(t);
  const std::size_t len = whole_steps(window, path.grid.step(), "the segment window");
  if (len > end) throw ValidationError("segment reaches before the start of the path");
  return HistorySegment{t, window, path.grid.step(),
                        std::span<const double>(path.prices).subspan(end - len, len + 1)};
}

/// Exact at nodes, linear in between.
inline double value_at(const PathRecord& path, double t) {
  if (!path.grid.contains(t)) throw ValidationError("time outside the path");
  const double x = std::clamp((t - path.grid.start()) / path.grid.step(), 0.0,
                              static_cast<double>(path.grid.count()));
  const double i = std::round(x);
  if (std::abs(x - i) <= kDivisibilityTol * std::max(1.0, x)) {
    return path.prices[static_cast<std::size_t>(i)];
  }
  const auto lo = static_cast<std::size_t>(std::floor(x));
  const double w = x - static_cast<double>(lo);
  return path.prices[lo] + w * (path.prices[lo + 1] - path.prices[lo]);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view s, std::size_t line) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError("line " + std::to_string(line) + ": not a number: '" + std::string(s) + "'");
  }
  return v;
}

/// Reads a two-column CSV with the given header; rows must be strictly ascending in column 1.
inline std::vector<std::pair<double, double>> read_two_columns(std::istream& in, std::string_view c0,
                                                                std::string_view c1) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty CSV");
  const std::string expected = std::string(c0) + "," + std::string(c1);
  if (trim(line) != expected) throw ValidationError("CSV header must be '" + expected + "'");
  std::vector<std::pair<double, double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) {
      throw ValidationError("line " + std::to_string(lineno) + ": expected two columns");
    }
    const double a = parse_double(text.substr(0, comma), lineno);
    const double b = parse_double(text.substr(comma + 1), lineno);
    if (!rows.empty() && !(a > rows.back().first)) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + std::string(c0) + " must be ascending");
    }
    rows.emplace_back(a, b);
  }
  if (rows.size() < 2) throw ValidationError("CSV needs at least two rows");
  return rows;
}

}  // namespace detail

/// Loads theta from CSV `offset,price` (offsets ascending, covering [-window, 0])
/// and resamples it linearly onto a grid of spacing `step`.
inline InitialPath load_initial_path_csv(std::istream& in, double window, double step) {
  const auto rows = detail::read_two_columns(in, "offset", "price");
  const double tol = kDivisibilityTol * step;
  if (rows.front().first > -window + tol || rows.back().first < -tol) {
    throw ValidationError("initial path CSV must cover [-L, 0]");
  }
  if (rows.front().first < -window - tol || rows.back().first > tol) {
    throw ValidationError("initial path CSV offsets must lie in [-L, 0]");
  }
  const std::size_t n = whole_steps(window, step, "the initial path window");
  std::vector<double> values(n + 1);
  std::size_t j = 0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double u = -window + static_cast<double>(i) * step;
    while (j + 2 < rows.size() && rows[j + 1].first < u) ++j;
    const auto& [u0, v0] = rows[j];
    const auto& [u1, v1] = rows[j + 1];
    const double w = std::clamp((u - u0) / (u1 - u0), 0.0, 1.0);
    values[i] = v0 + w * (v1 - v0);
  }
  return InitialPath(window, step, std::move(values));
}

/// Loads a realized path from CSV `t,price` on a uniform grid of spacing `step`.
/// Used as the conditioning prefix when pricing at t > 0.
inline PathRecord load_path_csv(std::istream& in, double step, double gap, double window) {
  const auto rows = detail::read_two_columns(in, "t", "price");
  const double start = rows.front().first;
  const std::size_t count = rows.size() - 1;
  TimeGrid grid(start, step, count);
  std::vector<double> prices;
  prices.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (std::abs(rows[i].first - grid.time(i)) > 1e-9 * std::max(1.0, std::abs(rows[i].first))) {
      throw ValidationError("path CSV is not on a uniform grid with spacing dt");
    }
    if (!(rows[i].second > 0.0)) throw ValidationError("path CSV prices must be strictly positive");
    prices.push_back(rows[i].second);
  }
  return PathRecord{grid, std::move(prices), {}, Measure::physical, gap, window};
}

}  // namespace memsfde
