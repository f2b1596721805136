#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "memsfde/error.hpp"

namespace memsfde {

/// Relative tolerance used for "dt divides X" checks.
inline constexpr double kDivisibilityTol = 1e-12;

/// Number of whole steps of size `step` in `duration`; throws when the ratio is
/// not an integer to within kDivisibilityTol relative error.
inline std::size_t whole_steps(double duration, double step, const char* what) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw ValidationError("step must be positive and finite");
  }
  if (duration < 0.0 || !std::isfinite(duration)) {
    throw ValidationError(std::string(what) + " must be non-negative and finite");
  }
  const double ratio = duration / step;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > kDivisibilityTol * std::max(1.0, ratio)) {
    throw ValidationError("dt does not divide " + std::string(what));
  }
  return static_cast<std::size_t>(n);
}

/// True when `duration` is an integer multiple of `step`.
inline bool divides(double step, double duration) {
  if (!(step > 0.0)) return false;
  const double ratio = duration / step;
  return std::abs(ratio - std::round(ratio)) <= kDivisibilityTol * std::max(1.0, ratio);
}

/// Uniform time grid: nodes start + i*step for 0 <= i <= count.
class TimeGrid {
 public:
  TimeGrid(double start, double step, std::size_t count) : start_(start), step_(step), count_(count) {
    if (!(step > 0.0) || !std::isfinite(step)) throw ValidationError("grid step must be positive");
    if (count < 1) throw ValidationError("grid needs at least one step");
    if (!std::isfinite(start)) throw ValidationError("grid start must be finite");
  }

  double start() const { return start_; }
  double step() const { return step_; }
  std::size_t count() const { return count_; }
  std::size_t nodes() const { return count_ + 1; }
  double end() const { return time(count_); }
  double time(std::size_t i) const { return start_ + static_cast<double>(i) * step_; }

  /// Node index of `t`; throws if `t` is off-grid (beyond 1e-12*step) or out of range.
  std::size_t index_of(double t) const {
    const double x = (t - start_) / step_;
    const double i = std::round(x);
    if (std::abs(x - i) > kDivisibilityTol * std::max(1.0, std::abs(x))) {
      throw ValidationError("time " + std::to_string(t) + " is not on a grid node");
    }
    if (i < 0.0 || i > static_cast<double>(count_)) {
      throw ValidationError("time " + std::to_string(t) + " is outside the grid");
    }
    return static_cast<std::size_t>(i);
  }

  bool contains(double t) const {
    const double tol = kDivisibilityTol * step_;
    return t >= start_ - tol && t <= end() + tol;
  }

 private:
  double start_;
  double step_;
  std::size_t count_;
};

}  // namespace memsfde
