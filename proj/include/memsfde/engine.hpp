#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "memsfde/error.hpp"
#include "memsfde/functionals.hpp"
#include "memsfde/grid.hpp"
#include "memsfde/path.hpp"
#include "memsfde/random.hpp"
#include "memsfde/stats.hpp"

namespace memsfde {

enum class Noise { brownian, none };

struct SimulationConfig {
  double horizon = 1.0;
  double gap = 0.25;
  double window = 0.5;
  double dt = 0.25 / 16.0;
  Measure measure = Measure::physical;
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::size_t replicates = 1;
  bool antithetic = false;
  /// `none` forces every increment to zero (deterministic drift-only paths).
  Noise noise = Noise::brownian;
  /// Worker threads for replicate loops; 0 means hardware concurrency.
  std::size_t threads = 0;

  void validate() const {
    if (!(horizon > 0.0)) throw ValidationError("horizon T must be positive");
    if (!(gap > 0.0)) throw ValidationError("gap l must be positive");
    if (!(window > 0.0)) throw ValidationError("window L must be positive");
    if (!(dt > 0.0)) throw ValidationError("dt must be positive");
    if (gap < dt * (1.0 - kDivisibilityTol)) throw ValidationError("gap l is smaller than dt");
    whole_steps(gap, dt, "the gap l");
    whole_steps(window, dt, "the window L");
    whole_steps(horizon, dt, "the horizon T");
    if (measure == Measure::risk_neutral && !(rate >= 0.0)) throw ValidationError("rate r must be >= 0");
    if (replicates < 1) throw ValidationError("replicates must be >= 1");
  }

  std::size_t steps() const { return whole_steps(horizon, dt, "the horizon T"); }
};

/// Per-replicate buffers. `drift` is filled only when requested.
struct Trajectory {
  std::vector<double> prices;
  std::vector<double> increments;
  std::vector<double> drift;
  std::vector<double> vol;
};

/// Log-Euler scheme for dS = f(t, S_{t-l}) S dt + g(t, S_{t-l}) S dW.
///
/// Coefficients at step i are frozen at t_i and read only the delayed segment
/// ending at t_i - l, which is already known because l >= dt:
///   S(t_{i+1}) = S(t_i) exp{(a_i - g_i^2/2) dt + g_i dW_i},
/// with a_i = f_i under P and a_i = r under Q.
class GapScheme {
 public:
  /// Starts at t = 0 from theta extended constantly over [-extension-L, -L].
  GapScheme(const InitialPath& theta, FunctionalSpec f, FunctionalSpec g, const SimulationConfig& cfg, double gap,
            double extension)
      : f_(std::move(f)), g_(std::move(g)), dt_(cfg.dt), gap_(gap), window_(cfg.window) {
    check(theta.step(), theta.window(), gap, extension, cfg);
    const InitialPath hat = extend_initial(theta, extension);
    history_.assign(hat.values().begin(), hat.values().end());
    zero_ = history_.size() - 1;
    first_step_ = 0;
    steps_ = cfg.steps();
    start_ = -extension - window_;
  }

  /// Continues a realized path from time `t0` (a node of `prefix`).
  /// Samples of `prefix` after t0 are ignored.
  GapScheme(const PathRecord& prefix, double t0, FunctionalSpec f, FunctionalSpec g, const SimulationConfig& cfg)
      : f_(std::move(f)), g_(std::move(g)), dt_(cfg.dt), gap_(cfg.gap), window_(cfg.window) {
    if (std::abs(prefix.grid.step() - cfg.dt) > kDivisibilityTol * cfg.dt) {
      throw ValidationError("path prefix spacing differs from dt");
    }
    cfg.validate();
    require_positive_vol(g_);
    check_windows();
    zero_ = prefix.zero_index();
    const std::size_t at = prefix.grid.index_of(t0);
    if (at < zero_) throw ValidationError("valuation time must be >= 0");
    const std::size_t needed = whole_steps(gap_ + window_, dt_, "l + L");
    if (at < needed) throw ValidationError("path prefix must cover [t - l - L, t]");
    history_.assign(prefix.prices.begin(), prefix.prices.begin() + static_cast<std::ptrdiff_t>(at + 1));
    for (double v : history_) {
      if (!(v > 0.0)) throw ValidationError("path prefix must be strictly positive");
    }
    first_step_ = at - zero_;
    steps_ = cfg.steps();
    if (first_step_ > steps_) throw ValidationError("valuation time beyond the horizon");
    start_ = prefix.grid.start();
  }

  const FunctionalSpec& drift() const { return f_; }
  const FunctionalSpec& vol() const { return g_; }
  double dt() const { return dt_; }
  double gap() const { return gap_; }
  double window() const { return window_; }
  std::size_t steps() const { return steps_; }
  std::size_t first_step() const { return first_step_; }
  std::size_t zero_index() const { return zero_; }
  std::size_t nodes() const { return zero_ + steps_ + 1; }
  TimeGrid grid() const { return TimeGrid(start_, dt_, nodes() - 1); }
  std::size_t gap_steps() const { return whole_steps(gap_, dt_, "the gap l"); }
  std::size_t window_steps() const { return whole_steps(window_, dt_, "the window L"); }

  /// Node index of the price at time t_i = i * dt.
  std::size_t node(std::size_t step) const { return zero_ + step; }

  /// The segment S_{t_i - l} read by the coefficients of step i.
  std::span<const double> delayed_segment(std::span<const double> prices, std::size_t step) const {
    const std::size_t end = zero_ + step - gap_steps();
    const std::size_t len = window_steps();
    return prices.subspan(end - len, len + 1);
  }

  /// Sizes the buffers and copies the known history in.
  void prepare(Trajectory& tr) const {
    tr.prices.resize(nodes());
    std::copy(history_.begin(), history_.end(), tr.prices.begin());
    tr.increments.resize(steps_);
    tr.vol.resize(steps_);
    tr.drift.resize(steps_);
  }

  /// Advances steps [first_step, last_step) using tr.increments.
  void run(Trajectory& tr, Measure measure, double rate, bool record_drift, std::size_t last_step) const {
    const std::size_t ng = gap_steps();
    const std::size_t nw = window_steps();
    const std::span<const double> prices(tr.prices);
    for (std::size_t i = first_step_; i < last_step; ++i) {
      const std::size_t end = zero_ + i - ng;
      const auto seg = prices.subspan(end - nw, nw + 1);
      const double b = g_.evaluate_unchecked(seg);
      if (!(b > 0.0) || !std::isfinite(b)) {
        throw NumericalError("volatility left (0, inf) at step " + std::to_string(i));
      }
      double a = rate;
      if (measure == Measure::physical || record_drift) {
        const double fi = f_.evaluate_unchecked(seg);
        if (record_drift) tr.drift[i] = fi;
        if (measure == Measure::physical) a = fi;
      }
      tr.vol[i] = b;
      const double x = tr.prices[zero_ + i] * std::exp((a - 0.5 * b * b) * dt_ + b * tr.increments[i]);
      if (!(x > 0.0) || !std::isfinite(x)) {
        throw NumericalError("price left (0, inf) at step " + std::to_string(i));
      }
      tr.prices[zero_ + i + 1] = x;
    }
  }

  void run(Trajectory& tr, Measure measure, double rate, bool record_drift = false) const {
    run(tr, measure, rate, record_drift, steps_);
  }

 private:
  void check(double theta_step, double theta_window, double gap, double extension, const SimulationConfig& cfg) const {
    SimulationConfig c = cfg;
    c.gap = gap;
    c.validate();
    if (std::abs(theta_step - cfg.dt) > kDivisibilityTol * cfg.dt) {
      throw ValidationError("initial path spacing differs from dt");
    }
    if (std::abs(theta_window - cfg.window) > kDivisibilityTol * std::max(1.0, cfg.window)) {
      throw ValidationError("initial path window differs from L");
    }
    if (extension < gap * (1.0 - kDivisibilityTol)) throw ValidationError("extension must cover the gap");
    require_positive_vol(g_);
    check_windows();
  }

  void check_windows() const {
    for (const auto* spec : {&f_, &g_}) {
      if (const auto w = spec->window(); w && std::abs(*w - window_) > kDivisibilityTol * std::max(1.0, window_)) {
        throw ValidationError(spec->kind_name() + " window does not match the simulation window L");
      }
    }
  }

  FunctionalSpec f_;
  FunctionalSpec g_;
  double dt_;
  double gap_;
  double window_;
  double start_ = 0.0;
  std::vector<double> history_;
  std::size_t zero_ = 0;
  std::size_t first_step_ = 0;
  std::size_t steps_ = 0;
};

/// Fills tr.increments for replicate `stream`; negated when `mirror` is set.
inline void draw_increments(Trajectory& tr, const SimulationConfig& cfg, std::uint64_t stream, bool mirror = false) {
  if (cfg.noise == Noise::none) {
    std::fill(tr.increments.begin(), tr.increments.end(), 0.0);
    return;
  }
  NormalStream normals(cfg.seed, stream);
  normals.fill(tr.increments, mirror ? -std::sqrt(cfg.dt) : std::sqrt(cfg.dt));
}

inline PathRecord to_record(const GapScheme& scheme, const Trajectory& tr, Measure measure) {
  return PathRecord{scheme.grid(), tr.prices, tr.increments, measure, scheme.gap(), scheme.window()};
}

/// One path of the memory-gap SFDE with gap cfg.gap on [-l-L, T].
inline PathRecord simulate_gap_path(const InitialPath& theta, const FunctionalSpec& f, const FunctionalSpec& g,
                                    const SimulationConfig& cfg, std::uint64_t stream = 0) {
  const GapScheme scheme(theta, f, g, cfg, cfg.gap, cfg.gap);
  Trajectory tr;
  scheme.prepare(tr);
  draw_increments(tr, cfg, stream);
  scheme.run(tr, cfg.measure, cfg.rate);
  return to_record(scheme, tr, cfg.measure);
}

/// S^k: gap 1/k with theta extended over [-1-L, -L].
inline PathRecord simulate_gap_sequence(int k, const InitialPath& theta, const FunctionalSpec& f,
                                        const FunctionalSpec& g, const SimulationConfig& cfg, std::uint64_t stream = 0) {
  if (k < 1) throw ValidationError("k must be >= 1");
  const double gap = 1.0 / static_cast<double>(k);
  const GapScheme scheme(theta, f, g, cfg, gap, 1.0);
  Trajectory tr;
  scheme.prepare(tr);
  draw_increments(tr, cfg, stream);
  scheme.run(tr, cfg.measure, cfg.rate);
  return to_record(scheme, tr, cfg.measure);
}

/// S^k for every k in `ks`, all driven by the increments of one stream.
inline std::vector<PathRecord> coupled_paths(std::span<const int> ks, const InitialPath& theta,
                                             const FunctionalSpec& f, const FunctionalSpec& g,
                                             const SimulationConfig& cfg, std::uint64_t stream = 0) {
  std::vector<PathRecord> out;
  out.reserve(ks.size());
  for (int k : ks) out.push_back(simulate_gap_sequence(k, theta, f, g, cfg, stream));
  return out;
}

struct GirsanovWeight {
  double value = 1.0;
  double log_value = 0.0;
};

/// log rho = -sum X_i dW_i - 1/2 sum X_i^2 dt with X_i = (f_i - r) / g_i, both
/// read from the delayed segment at the left endpoint of each step.
inline double log_girsanov(std::span<const double> drift, std::span<const double> vol,
                           std::span<const double> increments, double rate, double dt) {
  double stoch = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < increments.size(); ++i) {
    if (!(vol[i] > 0.0)) throw NumericalError("zero volatility in the Girsanov density");
    const double x = (drift[i] - rate) / vol[i];
    stoch += x * increments[i];
    quad += x * x;
  }
  return -stoch - 0.5 * quad * dt;
}

inline GirsanovWeight girsanov_weight(const PathRecord& path, const FunctionalSpec& f, const FunctionalSpec& g,
                                      double rate) {
  if (path.measure != Measure::physical) throw ValidationError("Girsanov weight needs a path simulated under P");
  const std::size_t zero = path.zero_index();
  const std::size_t steps = path.grid.count() - zero;
  if (path.increments.size() != steps) throw ValidationError("path does not carry its Brownian increments");
  const double dt = path.grid.step();
  std::vector<double> drift(steps), vol(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const HistorySegment seg = segment_at(path, static_cast<double>(i) * dt - path.gap, path.window);
    drift[i] = eval_drift(f, seg.anchor, seg);
    vol[i] = eval_vol(g, seg.anchor, seg);
  }
  GirsanovWeight w;
  w.log_value = log_girsanov(drift, vol, path.increments, rate, dt);
  w.value = std::exp(w.log_value);
  return w;
}

/// Runs every replicate of `scheme` and maps each trajectory to one sample.
/// Steps stop at `last_step`. With cfg.antithetic the sample is the mean over the path and its mirror.
template <class Sample>
std::vector<double> sample_replicates(const GapScheme& scheme, const SimulationConfig& cfg, Measure measure,
                                      bool record_drift, std::size_t last_step, Sample sample) {
  std::vector<double> out(cfg.replicates);
  parallel_for(
      cfg.replicates, cfg.threads,
      [&] {
        Trajectory tr;
        scheme.prepare(tr);
        return tr;
      },
      [&](Trajectory& tr, std::size_t r) {
        draw_increments(tr, cfg, r);
        scheme.run(tr, measure, cfg.rate, record_drift, last_step);
        double v = sample(std::as_const(tr));
        if (cfg.antithetic) {
          draw_increments(tr, cfg, r, true);
          scheme.run(tr, measure, cfg.rate, record_drift, last_step);
          v = 0.5 * (v + sample(std::as_const(tr)));
        }
        out[r] = v;
      });
  return out;
}

}  // namespace memsfde
