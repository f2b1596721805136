#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "memsfde/error.hpp"
#include "memsfde/path.hpp"

namespace memsfde {

/// Closed interval, possibly unbounded.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x, double rel_tol = 1e-12) const {
    const double slack = rel_tol * std::max(1.0, std::abs(x));
    return x >= lo - slack && x <= hi + slack;
  }
  double max_abs() const { return std::max(std::abs(lo), std::abs(hi)); }
};

namespace detail {

/// Trapezoid mean (1/L) * integral of the samples over the window.
inline double trapezoid_mean(std::span<const double> v) {
  const std::size_t n = v.size() - 1;
  double sum = 0.0;
  for (double x : v) sum += x;
  sum -= 0.5 * (v.front() + v.back());
  return sum / static_cast<double>(n);
}

inline double rms_deviation(std::span<const double> v, double mean) {
  const std::size_t n = v.size() - 1;
  double sum = 0.0;
  for (double x : v) sum += (x - mean) * (x - mean);
  const double a = v.front() - mean;
  const double b = v.back() - mean;
  sum -= 0.5 * (a * a + b * b);
  return std::sqrt(std::max(0.0, sum / static_cast<double>(n)));
}

}  // namespace detail

/// Drift or volatility functional of a history segment.
///
/// Kinds:
///   constant(c)                    c
///   moving_average(L)              (1/L) * int_{-L}^0 eta(u) du
///   realized_vol(L, g_min, g_max)  RMS deviation of eta around its mean, clamped
///   affine_of(inner, a, b)         a * inner + b
///
/// Integrals use the trapezoidal rule on grid samples. All kinds are
/// time-homogeneous: the anchor time is ignored.
class FunctionalSpec {
 public:
  struct Constant {
    double value;
  };
  struct MovingAverage {
    double window;
  };
  struct RealizedVol {
    double window;
    double floor;
    double cap;
  };
  struct Affine {
    std::shared_ptr<const FunctionalSpec> inner;
    double scale;
    double shift;
  };
  using Kind = std::variant<Constant, MovingAverage, RealizedVol, Affine>;

  static FunctionalSpec constant(double c) {
    if (!std::isfinite(c)) throw ValidationError("constant functional must be finite");
    return FunctionalSpec(Constant{c});
  }
  static FunctionalSpec moving_average(double window) {
    if (!(window > 0.0)) throw ValidationError("moving_average window must be positive");
    return FunctionalSpec(MovingAverage{window});
  }
  static FunctionalSpec realized_vol(double window, double floor, double cap) {
    if (!(window > 0.0)) throw ValidationError("realized_vol window must be positive");
    if (!(floor > 0.0 && floor < cap) || !std::isfinite(cap)) {
      throw ValidationError("realized_vol requires 0 < floor < cap");
    }
    return FunctionalSpec(RealizedVol{window, floor, cap});
  }
  static FunctionalSpec affine_of(FunctionalSpec inner, double scale, double shift) {
    if (!std::isfinite(scale) || !std::isfinite(shift)) throw ValidationError("affine parameters must be finite");
    return FunctionalSpec(Affine{std::make_shared<const FunctionalSpec>(std::move(inner)), scale, shift});
  }

  const Kind& kind() const { return kind_; }
  std::string kind_name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Constant>) return "constant";
          else if constexpr (std::is_same_v<K, MovingAverage>) return "moving_average";
          else if constexpr (std::is_same_v<K, RealizedVol>) return "realized_vol";
          else return "affine";
        },
        kind_);
  }

  /// History window this functional reads; nullopt for constants.
  std::optional<double> window() const {
    return std::visit(
        [](const auto& k) -> std::optional<double> {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Constant>) return std::nullopt;
          else if constexpr (std::is_same_v<K, Affine>) return k.inner->window();
          else return k.window;
        },
        kind_);
  }

  bool history_dependent() const { return window().has_value(); }

  /// Range of values on strictly positive segments.
  Interval range_on_positive() const {
    return std::visit(
        [](const auto& k) -> Interval {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Constant>) {
            return {k.value, k.value};
          } else if constexpr (std::is_same_v<K, MovingAverage>) {
            return {0.0, std::numeric_limits<double>::infinity()};
          } else if constexpr (std::is_same_v<K, RealizedVol>) {
            return {k.floor, k.cap};
          } else {
            const Interval in = k.inner->range_on_positive();
            const double a = k.scale * in.lo;
            const double b = k.scale * in.hi;
            // 0 * inf is NaN; a zero scale collapses the range to the shift.
            if (k.scale == 0.0) return {k.shift, k.shift};
            return {std::min(a, b) + k.shift, std::max(a, b) + k.shift};
          }
        },
        kind_);
  }

  /// g(t, eta) > 0 for every strictly positive eta.
  bool positive_on_positive() const {
    return std::visit(
        [](const auto& k) -> bool {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Constant>) return k.value > 0.0;
          else if constexpr (std::is_same_v<K, MovingAverage>) return true;
          else if constexpr (std::is_same_v<K, RealizedVol>) return true;
          else {
            const Interval in = k.inner->range_on_positive();
            if (k.scale < 0.0 || k.shift < 0.0) return false;
            if (k.shift > 0.0) return in.lo >= 0.0 || k.scale == 0.0;
            return k.scale > 0.0 && k.inner->positive_on_positive();
          }
        },
        kind_);
  }

  /// Lipschitz constant with respect to the sup norm on segments.
  double lipschitz() const {
    if (declared_lipschitz_) return *declared_lipschitz_;
    return natural_lipschitz();
  }

  /// Bound on |value| over positive segments (infinite when unbounded).
  double max_abs() const {
    if (declared_max_abs_) return *declared_max_abs_;
    return range_on_positive().max_abs();
  }

  FunctionalSpec with_declared_max_abs(double bound) const {
    FunctionalSpec out = *this;
    out.declared_max_abs_ = bound;
    return out;
  }
  FunctionalSpec with_declared_lipschitz(double alpha) const {
    FunctionalSpec out = *this;
    out.declared_lipschitz_ = alpha;
    return out;
  }

  /// f(t, eta). `seg` must span this functional's window.
  double operator()(double /*t*/, const HistorySegment& seg) const {
    return std::visit(
        [&](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Constant>) {
            return k.value;
          } else if constexpr (std::is_same_v<K, MovingAverage>) {
            check_window(k.window, seg);
            return detail::trapezoid_mean(seg.values);
          } else if constexpr (std::is_same_v<K, RealizedVol>) {
            check_window(k.window, seg);
            const double m = detail::trapezoid_mean(seg.values);
            return std::clamp(detail::rms_deviation(seg.values, m), k.floor, k.cap);
          } else {
            return k.scale * (*k.inner)(0.0, seg) + k.shift;
          }
        },
        kind_);
  }

  /// Same as operator() but skips the window check; used in hot loops after
  /// the window has been validated once.
  double evaluate_unchecked(std::span<const double> v) const {
    return std::visit(
        [&](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Constant>) {
            return k.value;
          } else if constexpr (std::is_same_v<K, MovingAverage>) {
            return detail::trapezoid_mean(v);
          } else if constexpr (std::is_same_v<K, RealizedVol>) {
            const double m = detail::trapezoid_mean(v);
            return std::clamp(detail::rms_deviation(v, m), k.floor, k.cap);
          } else {
            return k.scale * k.inner->evaluate_unchecked(v) + k.shift;
          }
        },
        kind_);
  }

 private:
  explicit FunctionalSpec(Kind kind) : kind_(std::move(kind)) {}

  static void check_window(double window, const HistorySegment& seg) {
    if (std::abs(seg.window - window) > kDivisibilityTol * std::max(1.0, window) || seg.size() < 2) {
      throw ValidationError("segment window does not match functional window");
    }
    for (double x : seg.values) {
      if (!std::isfinite(x)) throw ValidationError("segment contains non-finite samples");
    }
  }

  double natural_lipschitz() const {
    return std::visit(
        [](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Constant>) return 0.0;
          else if constexpr (std::is_same_v<K, Affine>) return std::abs(k.scale) * k.inner->lipschitz();
          else return 1.0;
        },
        kind_);
  }

  Kind kind_;
  std::optional<double> declared_max_abs_;
  std::optional<double> declared_lipschitz_;
};

inline double eval_drift(const FunctionalSpec& f, double t, const HistorySegment& seg) {
  const double v = f(t, seg);
  if (!std::isfinite(v)) throw NumericalError("drift evaluated to a non-finite value");
  return v;
}

inline double eval_vol(const FunctionalSpec& g, double t, const HistorySegment& seg) {
  const double v = g(t, seg);
  if (!std::isfinite(v)) throw NumericalError("volatility evaluated to a non-finite value");
  return v;
}

/// Throws unless `g` is usable as a volatility: positive on positive segments.
inline void require_positive_vol(const FunctionalSpec& g) {
  if (!g.positive_on_positive()) {
    throw ValidationError("volatility functional must be positive on positive paths (" + g.kind_name() + ")");
  }
}

struct BoundsReport {
  double max_abs = 0.0;
  double min_value = std::numeric_limits<double>::infinity();
  double max_value = -std::numeric_limits<double>::infinity();
  /// Largest |F(p) - F(q)| / sup|p - q| over probe pairs; 0 with fewer than two probes.
  double lipschitz_ratio = 0.0;
  double declared_max_abs = 0.0;
  double declared_lipschitz = 0.0;
  bool bound_violation = false;
  bool lipschitz_violation = false;

  bool ok() const { return !bound_violation && !lipschitz_violation; }
};

/// Empirical bound and Lipschitz probe of `spec` over `probes`.
inline BoundsReport validate_bounds(const FunctionalSpec& spec, std::span<const HistorySegment> probes) {
  if (probes.empty()) throw ValidationError("validate_bounds needs at least one probe");
  BoundsReport r;
  r.declared_max_abs = spec.max_abs();
  r.declared_lipschitz = spec.lipschitz();
  std::vector<double> values;
  values.reserve(probes.size());
  for (const auto& p : probes) {
    const double v = spec(p.anchor, p);
    values.push_back(v);
    r.max_abs = std::max(r.max_abs, std::abs(v));
    r.min_value = std::min(r.min_value, v);
    r.max_value = std::max(r.max_value, v);
  }
  for (std::size_t i = 0; i < probes.size(); ++i) {
    for (std::size_t j = i + 1; j < probes.size(); ++j) {
      if (probes[i].size() != probes[j].size()) continue;
      double sup = 0.0;
      for (std::size_t s = 0; s < probes[i].size(); ++s) {
        sup = std::max(sup, std::abs(probes[i].values[s] - probes[j].values[s]));
      }
      if (sup > 0.0) r.lipschitz_ratio = std::max(r.lipschitz_ratio, std::abs(values[i] - values[j]) / sup);
    }
  }
  constexpr double tol = 1e-9;
  r.bound_violation = r.max_abs > r.declared_max_abs * (1.0 + tol);
  r.lipschitz_violation = r.lipschitz_ratio > r.declared_lipschitz * (1.0 + tol) + tol;
  return r;
}

}  // namespace memsfde
