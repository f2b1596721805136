#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "memsfde/engine.hpp"
#include "memsfde/error.hpp"
#include "memsfde/functionals.hpp"
#include "memsfde/path.hpp"
#include "memsfde/pricing.hpp"
#include "memsfde/random.hpp"
#include "memsfde/stats.hpp"

namespace memsfde {

/// Stream id reserved for Hölder initial paths so they never share draws with replicates.
inline constexpr std::uint64_t kHolderStream = 0x8000000000000000ull;

/// level * exp(scale * B(u)) on [-L, 0], with B a Brownian path pinned at B(0) = 0
/// and run backwards in time. Brownian paths are beta-Hölder for every beta < 1/2,
/// so theta(0) = level and theta satisfies the moment Hölder condition.
inline InitialPath make_holder_path(double beta, std::uint64_t seed, double window, double level, double dt,
                                    double scale = 0.2) {
  if (!(beta > 0.0 && beta < 0.5)) throw ValidationError("Hölder exponent must lie in (0, 1/2)");
  if (!(level > 0.0)) throw ValidationError("level must be positive");
  const std::size_t n = whole_steps(window, dt, "the window L");
  NormalStream normals(seed, kHolderStream);
  std::vector<double> values(n + 1);
  double b = 0.0;
  values[n] = level;
  for (std::size_t j = n; j-- > 0;) {
    b += std::sqrt(dt) * normals.next();
    values[j] = level * std::exp(scale * b);
  }
  return InitialPath(window, dt, std::move(values));
}

/// max |x_i - x_j| / (|i - j| dt)^exponent over all sample pairs.
inline double holder_ratio(std::span<const double> x, double dt, double exponent) {
  double best = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double h = static_cast<double>(j - i) * dt;
      best = std::max(best, std::abs(x[j] - x[i]) / std::pow(h, exponent));
    }
  }
  return best;
}

struct ConvergenceReport {
  std::vector<int> k_values;
  /// E sup_{[0,T]} |S^k - S^{2k}|^2 per k.
  std::vector<Estimate> discrepancies;
  double fitted_slope = std::numeric_limits<double>::quiet_NaN();
  double theoretical_slope = 0.0;
  double slope_tolerance = 0.5;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  /// Every discrepancy is zero (no memory dependence); the slope is undefined.
  bool degenerate = false;
  /// Non-increasing in k up to 2 combined standard errors.
  bool monotone = true;

  bool pass() const { return degenerate || fitted_slope <= theoretical_slope + slope_tolerance; }
};

namespace detail {

inline void check_k_values(std::span<const int> ks, double dt, bool need_doubles) {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 1) throw ValidationError("k values must be >= 1");
    if (i > 0 && ks[i] <= ks[i - 1]) throw ValidationError("k values must be strictly increasing");
    const int top = need_doubles ? 2 * ks[i] : ks[i];
    const double gap = 1.0 / static_cast<double>(top);
    if (gap < dt * (1.0 - kDivisibilityTol) || !divides(dt, gap)) {
      throw ValidationError("1/" + std::to_string(top) + " is not a multiple of dt");
    }
  }
}

/// One S^k scheme per k, all with the [-1-L, -L] extension so their grids coincide.
inline std::vector<GapScheme> sequence_schemes(std::span<const int> ks, const InitialPath& theta,
                                               const FunctionalSpec& f, const FunctionalSpec& g,
                                               const SimulationConfig& cfg) {
  std::vector<GapScheme> out;
  out.reserve(ks.size());
  for (int k : ks) out.emplace_back(theta, f, g, cfg, 1.0 / static_cast<double>(k), 1.0);
  return out;
}

}  // namespace detail

/// Estimates E sup_{[0,T]} |S^k - S^{2k}|^2 for each k on coupled paths and fits
/// the log-log slope against k. The gap-closing bound predicts slope <= -2 beta.
inline ConvergenceReport convergence_study(std::span<const int> k_values, double beta, const InitialPath& theta,
                                           const FunctionalSpec& f, const FunctionalSpec& g,
                                           const SimulationConfig& cfg, double slope_tolerance = 0.5) {
  if (k_values.size() < 3) throw ValidationError("convergence study needs at least 3 k values");
  if (!(beta > 0.0 && beta < 0.5)) throw ValidationError("beta must lie in (0, 1/2)");
  cfg.validate();
  detail::check_k_values(k_values, cfg.dt, true);

  std::set<int> all(k_values.begin(), k_values.end());
  for (int k : k_values) all.insert(2 * k);
  const std::vector<int> ks(all.begin(), all.end());
  const auto schemes = detail::sequence_schemes(ks, theta, f, g, cfg);
  const auto slot = [&](int k) { return static_cast<std::size_t>(std::lower_bound(ks.begin(), ks.end(), k) - ks.begin()); };
  const std::size_t zero = schemes.front().zero_index();
  const std::size_t nodes = schemes.front().nodes();

  std::vector<std::vector<double>> sup_sq(k_values.size(), std::vector<double>(cfg.replicates));
  struct Workspace {
    std::vector<Trajectory> paths;
  };
  parallel_for(
      cfg.replicates, cfg.threads,
      [&] {
        Workspace ws;
        ws.paths.resize(schemes.size());
        for (std::size_t s = 0; s < schemes.size(); ++s) schemes[s].prepare(ws.paths[s]);
        return ws;
      },
      [&](Workspace& ws, std::size_t r) {
        draw_increments(ws.paths[0], cfg, r);
        for (std::size_t s = 0; s < schemes.size(); ++s) {
          if (s > 0) ws.paths[s].increments = ws.paths[0].increments;
          schemes[s].run(ws.paths[s], cfg.measure, cfg.rate);
        }
        for (std::size_t i = 0; i < k_values.size(); ++i) {
          const auto& a = ws.paths[slot(k_values[i])].prices;
          const auto& b = ws.paths[slot(2 * k_values[i])].prices;
          double worst = 0.0;
          for (std::size_t n = zero; n < nodes; ++n) worst = std::max(worst, (a[n] - b[n]) * (a[n] - b[n]));
          sup_sq[i][r] = worst;
        }
      });

  ConvergenceReport rep;
  rep.k_values.assign(k_values.begin(), k_values.end());
  rep.theoretical_slope = -2.0 * beta;
  rep.slope_tolerance = slope_tolerance;
  rep.replicates = cfg.replicates;
  rep.seed = cfg.seed;
  std::vector<double> lx, ly;
  rep.degenerate = true;
  for (std::size_t i = 0; i < k_values.size(); ++i) {
    rep.discrepancies.push_back(estimate(sup_sq[i]));
    const double m = rep.discrepancies.back().mean;
    if (m > 0.0) rep.degenerate = false;
    lx.push_back(std::log(static_cast<double>(k_values[i])));
    ly.push_back(std::log(m));
  }
  if (!rep.degenerate) {
    const bool any_zero = std::any_of(rep.discrepancies.begin(), rep.discrepancies.end(),
                                      [](const Estimate& e) { return !(e.mean > 0.0); });
    rep.fitted_slope = any_zero ? -std::numeric_limits<double>::infinity() : fit_slope(lx, ly);
  }
  for (std::size_t i = 1; i < rep.discrepancies.size(); ++i) {
    const auto& prev = rep.discrepancies[i - 1];
    const auto& cur = rep.discrepancies[i];
    if (cur.mean > prev.mean + 2.0 * combined_se(prev, cur)) rep.monotone = false;
  }
  return rep;
}

/// One estimated statistic compared with its target.
struct CheckRow {
  std::string label;
  double parameter = 0.0;
  Estimate value;
  double target = 0.0;
  bool pass = true;
};

struct CheckReport {
  std::string name;
  std::vector<CheckRow> rows;
  /// Summary statistic where one exists (e.g. the max/min ratio across k).
  double statistic = std::numeric_limits<double>::quiet_NaN();
  bool pass = true;
};

/// |estimate - target| <= 3 standard errors. The non-strict form lets
/// zero-variance exact cases pass.
inline bool within_3se(const Estimate& e, double target) { return std::abs(e.mean - target) <= 3.0 * e.std_error; }

/// E_P rho(T) = 1 for the density of the risk-neutral measure, simulated under P.
inline CheckReport normalization_check(const InitialPath& theta, const FunctionalSpec& f, const FunctionalSpec& g,
                                       double rate, SimulationConfig cfg) {
  cfg.measure = Measure::physical;
  cfg.rate = rate;
  const GapScheme scheme(theta, f, g, cfg, cfg.gap, cfg.gap);
  const auto samples = sample_replicates(scheme, cfg, Measure::physical, true, scheme.steps(), [&](const Trajectory& tr) {
    return std::exp(log_girsanov(tr.drift, tr.vol, tr.increments, rate, cfg.dt));
  });
  CheckReport rep{"normalization", {}, std::numeric_limits<double>::quiet_NaN(), true};
  CheckRow row{"E_P[rho(T)]", cfg.horizon, estimate(samples), 1.0, false};
  row.pass = within_3se(row.value, 1.0);
  rep.pass = row.pass;
  rep.statistic = row.value.mean;
  rep.rows.push_back(row);
  return rep;
}

/// E_Q[e^{-rt} S(t)] = S(0) at t in {T/4, T/2, T}, simulated under Q.
inline CheckReport martingale_check(const InitialPath& theta, const FunctionalSpec& f, const FunctionalSpec& g,
                                    SimulationConfig cfg, const MarketConfig& mkt) {
  cfg = detail::risk_neutral(cfg, mkt);
  const GapScheme scheme(theta, f, g, cfg, cfg.gap, cfg.gap);
  const double s0 = theta.present();
  CheckReport rep{"martingale", {}, std::numeric_limits<double>::quiet_NaN(), true};
  for (double frac : {0.25, 0.5, 1.0}) {
    const auto step = static_cast<std::size_t>(std::llround(frac * static_cast<double>(scheme.steps())));
    const double t = static_cast<double>(step) * cfg.dt;
    const double discount = std::exp(-cfg.rate * t);
    const std::size_t node = scheme.node(step);
    const auto samples = sample_replicates(scheme, cfg, Measure::risk_neutral, false, step,
                                           [&](const Trajectory& tr) { return discount * tr.prices[node]; });
    CheckRow row{"E_Q[exp(-rt)S(t)]", t, estimate(samples), s0, false};
    row.pass = within_3se(row.value, s0);
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

/// E sup_{[0,T]} |S^k|^{2 gamma} per k on coupled paths; passes when the
/// largest and smallest differ by less than a factor 2.
inline CheckReport moment_bound_check(std::span<const int> k_values, int gamma, const InitialPath& theta,
                                      const FunctionalSpec& f, const FunctionalSpec& g, const SimulationConfig& cfg) {
  if (gamma != 1 && gamma != 2) throw ValidationError("gamma must be 1 or 2");
  if (k_values.empty()) throw ValidationError("moment check needs k values");
  cfg.validate();
  detail::check_k_values(k_values, cfg.dt, false);
  CheckReport rep{"moment_bound", {}, 0.0, true};
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int k : k_values) {
    const GapScheme scheme(theta, f, g, cfg, 1.0 / static_cast<double>(k), 1.0);
    const std::size_t zero = scheme.zero_index();
    const auto samples = sample_replicates(scheme, cfg, cfg.measure, false, scheme.steps(), [&](const Trajectory& tr) {
      double top = 0.0;
      for (std::size_t n = zero; n < tr.prices.size(); ++n) top = std::max(top, std::abs(tr.prices[n]));
      return std::pow(top, 2.0 * gamma);
    });
    CheckRow row{"E[sup|S^k|^" + std::to_string(2 * gamma) + "]", static_cast<double>(k), estimate(samples),
                 std::numeric_limits<double>::quiet_NaN(), true};
    lo = std::min(lo, row.value.mean);
    hi = std::max(hi, row.value.mean);
    rep.rows.push_back(row);
  }
  rep.statistic = hi / lo;
  rep.pass = rep.statistic < 2.0;
  return rep;
}

/// Fits C_k = max over (s, h) of E|S^k(s+h) - S^k(s)|^2 / h for lags h = dt, 2dt, 4dt, ...
/// up to T/4; passes when C_k varies across k by less than a factor 2.
inline CheckReport increment_bound_check(std::span<const int> k_values, const InitialPath& theta,
                                         const FunctionalSpec& f, const FunctionalSpec& g,
                                         const SimulationConfig& cfg) {
  if (k_values.empty()) throw ValidationError("increment check needs k values");
  cfg.validate();
  detail::check_k_values(k_values, cfg.dt, false);
  const std::size_t steps = cfg.steps();
  std::vector<std::size_t> lags;
  for (std::size_t h = 1; 4 * h <= steps; h *= 2) lags.push_back(h);
  if (lags.empty()) lags.push_back(1);

  CheckReport rep{"increment_bound", {}, 0.0, true};
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int k : k_values) {
    const GapScheme scheme(theta, f, g, cfg, 1.0 / static_cast<double>(k), 1.0);
    const std::size_t zero = scheme.zero_index();
    // Per-replicate sums of squared increments for every (start, lag) pair.
    std::vector<std::vector<double>> acc(cfg.replicates);
    SimulationConfig one = cfg;
    one.antithetic = false;
    parallel_for(
        cfg.replicates, cfg.threads,
        [&] {
          Trajectory tr;
          scheme.prepare(tr);
          return tr;
        },
        [&](Trajectory& tr, std::size_t r) {
          draw_increments(tr, one, r);
          scheme.run(tr, cfg.measure, cfg.rate);
          auto& row = acc[r];
          row.assign(lags.size() * steps, 0.0);
          for (std::size_t li = 0; li < lags.size(); ++li) {
            for (std::size_t s = 0; s + lags[li] <= steps; ++s) {
              const double d = tr.prices[zero + s + lags[li]] - tr.prices[zero + s];
              row[li * steps + s] = d * d;
            }
          }
        });
    double c_hat = 0.0;
    std::vector<double> column(cfg.replicates);
    Estimate best;
    for (std::size_t li = 0; li < lags.size(); ++li) {
      const double h = static_cast<double>(lags[li]) * cfg.dt;
      for (std::size_t s = 0; s + lags[li] <= steps; ++s) {
        for (std::size_t r = 0; r < cfg.replicates; ++r) column[r] = acc[r][li * steps + s] / h;
        const Estimate e = estimate(column);
        if (e.mean > c_hat) {
          c_hat = e.mean;
          best = e;
        }
      }
    }
    rep.rows.push_back(CheckRow{"C_hat", static_cast<double>(k), best, std::numeric_limits<double>::quiet_NaN(), true});
    lo = std::min(lo, c_hat);
    hi = std::max(hi, c_hat);
  }
  rep.statistic = hi / lo;
  rep.pass = rep.statistic < 2.0;
  return rep;
}

/// E_Q[payoff] by direct Q simulation versus E_P[rho(T) payoff] by weighting P paths.
inline CheckReport measure_consistency_check(const InitialPath& theta, const FunctionalSpec& f,
                                             const FunctionalSpec& g, SimulationConfig cfg, const MarketConfig& mkt) {
  const SimulationConfig q = detail::risk_neutral(cfg, mkt);
  SimulationConfig p = q;
  p.measure = Measure::physical;
  const GapScheme scheme(theta, f, g, q, q.gap, q.gap);
  const std::size_t last = scheme.node(scheme.steps());
  const double discount = std::exp(-mkt.rate * mkt.maturity);
  const auto direct = estimate(sample_replicates(scheme, q, Measure::risk_neutral, false, scheme.steps(),
                                                 [&](const Trajectory& tr) {
                                                   return discount * std::max(0.0, tr.prices[last] - mkt.strike);
                                                 }));
  // Distinct seed so the two estimates are independent.
  p.seed = q.seed ^ 0x5bd1e995u;
  const auto weighted = estimate(sample_replicates(scheme, p, Measure::physical, true, scheme.steps(),
                                                   [&](const Trajectory& tr) {
                                                     const double rho = std::exp(
                                                         log_girsanov(tr.drift, tr.vol, tr.increments, mkt.rate, p.dt));
                                                     return rho * discount * std::max(0.0, tr.prices[last] - mkt.strike);
                                                   }));
  CheckReport rep{"measure_consistency", {}, direct.mean - weighted.mean, true};
  rep.rows.push_back(CheckRow{"E_Q[payoff]", 0.0, direct, weighted.mean, true});
  rep.rows.push_back(CheckRow{"E_P[rho*payoff]", 1.0, weighted, direct.mean, true});
  rep.pass = std::abs(direct.mean - weighted.mean) <= 3.0 * combined_se(direct, weighted);
  for (auto& row : rep.rows) row.pass = rep.pass;
  return rep;
}

}  // namespace memsfde
