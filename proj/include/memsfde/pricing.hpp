#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memsfde/engine.hpp"
#include "memsfde/error.hpp"
#include "memsfde/functionals.hpp"
#include "memsfde/path.hpp"
#include "memsfde/stats.hpp"

namespace memsfde {

struct MarketConfig {
  double rate = 0.0;
  double strike = 100.0;
  double maturity = 1.0;

  void validate() const {
    if (!(rate >= 0.0) || !std::isfinite(rate)) throw ValidationError("rate must be >= 0");
    if (!(strike > 0.0) || !std::isfinite(strike)) throw ValidationError("strike must be positive");
    if (!(maturity > 0.0) || !std::isfinite(maturity)) throw ValidationError("maturity must be positive");
  }
};

enum class Method { closed_form, nested_h, full_memory_mc, gap_mc, black_scholes };
enum class Payoff { call, put };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::closed_form: return "closed_form";
    case Method::nested_h: return "nested_h";
    case Method::full_memory_mc: return "full_memory_mc";
    case Method::gap_mc: return "gap_mc";
    case Method::black_scholes: return "black_scholes";
  }
  return "unknown";
}

/// Stock and bond holdings replicating the call; the bond is B(t) = e^{rt}.
struct HedgePosition {
  double stock_units = 0.0;
  double bond_units = 0.0;
  double time = 0.0;

  double value(double spot, double rate) const { return stock_units * spot + bond_units * std::exp(rate * time); }
};

struct PricingResult {
  double price = 0.0;
  double std_error = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t replicates = 0;
  Method method = Method::closed_form;
  /// Set when the integrated variance was zero and the intrinsic bound was returned.
  bool degenerate = false;
  std::optional<HedgePosition> hedge;

  static PricingResult exact(double price, Method method) {
    return PricingResult{price, 0.0, price, price, 0, method, false, std::nullopt};
  }
  static PricingResult from(const Estimate& e, Method method) {
    return PricingResult{e.mean, e.std_error, e.ci_lo(), e.ci_hi(), e.count, method, false, std::nullopt};
  }
};

/// Standard normal distribution function.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Classical Black-Scholes call.
inline double black_scholes(double s, double k, double r, double sigma, double tau) {
  if (!(s > 0.0) || !(k > 0.0) || !(sigma > 0.0) || !(tau > 0.0) || !(r >= 0.0)) {
    throw ValidationError("black_scholes needs s, k, sigma, tau > 0 and r >= 0");
  }
  const double sd = sigma * std::sqrt(tau);
  const double d1 = (std::log(s / k) + r * tau) / sd + 0.5 * sd;
  return s * normal_cdf(d1) - k * std::exp(-r * tau) * normal_cdf(d1 - sd);
}

/// Call price and hedge on the last delay period, where the integrated variance
/// sigma2 = int_t^T g(u, S_{u-l})^2 du is already known:
///   V = S Phi(beta+) - K e^{-r tau} Phi(beta-),
///   beta+- = [ln(S/K) + r tau +- sigma2/2] / sqrt(sigma2).
/// Zero sigma2 returns the intrinsic bound max(0, S - K e^{-r tau}) flagged degenerate.
inline PricingResult closed_form_last_delay(double s, double sigma2, double tau, const MarketConfig& mkt) {
  mkt.validate();
  if (!(s > 0.0)) throw ValidationError("spot must be positive");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw ValidationError("integrated variance must be >= 0");
  if (!(tau >= 0.0)) throw ValidationError("time to maturity must be >= 0");
  const double discount = std::exp(-mkt.rate * tau);
  const double bond_per_strike = -mkt.strike * std::exp(-mkt.rate * mkt.maturity);
  HedgePosition hedge{0.0, 0.0, mkt.maturity - tau};
  PricingResult out;
  if (sigma2 == 0.0) {
    const bool in_the_money = s > mkt.strike * discount;
    out = PricingResult::exact(std::max(0.0, s - mkt.strike * discount), Method::closed_form);
    out.degenerate = true;
    hedge.stock_units = in_the_money ? 1.0 : 0.0;
    hedge.bond_units = in_the_money ? bond_per_strike : 0.0;
  } else {
    const double sd = std::sqrt(sigma2);
    const double beta_plus = (std::log(s / mkt.strike) + mkt.rate * tau + 0.5 * sigma2) / sd;
    const double beta_minus = beta_plus - sd;
    const double n_plus = normal_cdf(beta_plus);
    const double n_minus = normal_cdf(beta_minus);
    out = PricingResult::exact(s * n_plus - mkt.strike * discount * n_minus, Method::closed_form);
    hedge.stock_units = n_plus;
    hedge.bond_units = bond_per_strike * n_minus;
  }
  out.hedge = hedge;
  return out;
}

/// H(x, m, sigma^2) = x e^{m + sigma^2/2} Phi((sigma^2 + ln(x/K) + rT + m)/sigma)
///                    - K e^{-rT} Phi((ln(x/K) + rT + m)/sigma)
/// where x is a discounted price.
inline double h_function(double x, double m, double sigma2, const MarketConfig& mkt) {
  if (!(sigma2 > 0.0)) throw ValidationError("h_function needs sigma^2 > 0");
  if (!(x > 0.0)) throw ValidationError("h_function needs x > 0");
  const double sigma = std::sqrt(sigma2);
  const double core = std::log(x / mkt.strike) + mkt.rate * mkt.maturity + m;
  return x * std::exp(m + 0.5 * sigma2) * normal_cdf((sigma2 + core) / sigma) -
         mkt.strike * std::exp(-mkt.rate * mkt.maturity) * normal_cdf(core / sigma);
}

namespace detail {

inline SimulationConfig risk_neutral(SimulationConfig cfg, const MarketConfig& mkt) {
  mkt.validate();
  cfg.horizon = mkt.maturity;
  cfg.rate = mkt.rate;
  cfg.measure = Measure::risk_neutral;
  cfg.validate();
  return cfg;
}

/// Left-endpoint sum of g_i^2 dt over steps [from, to) of `scheme`.
inline double forward_variance(const GapScheme& scheme, std::span<const double> prices, std::size_t from,
                               std::size_t to) {
  double acc = 0.0;
  for (std::size_t i = from; i < to; ++i) {
    const double b = scheme.vol().evaluate_unchecked(scheme.delayed_segment(prices, i));
    if (!(b > 0.0)) throw NumericalError("volatility floor breached: g <= 0");
    acc += b * b;
  }
  return acc * scheme.dt();
}

inline double payoff(Payoff kind, double s, double k) {
  return kind == Payoff::call ? std::max(0.0, s - k) : std::max(0.0, k - s);
}

inline PricingResult terminal_mc(const GapScheme& scheme, const SimulationConfig& cfg, const MarketConfig& mkt,
                                 Payoff kind, Method method) {
  const double discount = std::exp(-mkt.rate * mkt.maturity);
  const std::size_t last = scheme.node(scheme.steps());
  const auto samples = sample_replicates(scheme, cfg, Measure::risk_neutral, false, scheme.steps(), [&](const Trajectory& tr) {
    return discount * payoff(kind, tr.prices[last], mkt.strike);
  });
  return PricingResult::from(estimate(samples), method);
}

/// e^{rt} H(S~(T-l), -sigma2/2, sigma2), falling back to the intrinsic value when sigma2 = 0.
inline double nested_value(double t, double s_at_cut, double cut, double sigma2, const MarketConfig& mkt) {
  const double x = std::exp(-mkt.rate * cut) * s_at_cut;
  double h = 0.0;
  if (sigma2 > 0.0) {
    h = h_function(x, -0.5 * sigma2, sigma2, mkt);
  } else {
    h = std::max(0.0, x - mkt.strike * std::exp(-mkt.rate * mkt.maturity));
  }
  return std::exp(mkt.rate * t) * h;
}

inline PricingResult nested_mc(const GapScheme& scheme, const SimulationConfig& cfg, const MarketConfig& mkt,
                               double t) {
  const std::size_t n_gap = scheme.gap_steps();
  if (scheme.steps() <= n_gap) throw ValidationError("nested pricing needs T > l; use the closed form");
  const std::size_t cut_step = scheme.steps() - n_gap;
  if (scheme.first_step() >= cut_step) throw ValidationError("nested pricing needs t < T - l");
  const double cut = static_cast<double>(cut_step) * cfg.dt;
  const auto samples = sample_replicates(scheme, cfg, Measure::risk_neutral, false, cut_step, [&](const Trajectory& tr) {
    // Prices stop at T - l; the coefficients over [T - l, T] read only history before T - l.
    const double sigma2 = forward_variance(scheme, tr.prices, cut_step, scheme.steps());
    return nested_value(t, tr.prices[scheme.node(cut_step)], cut, sigma2, mkt);
  });
  return PricingResult::from(estimate(samples), Method::nested_h);
}

}  // namespace detail

/// Left-endpoint sum of g(u, S_{u-l})^2 du over [t, T]. Needs t >= T - l so
/// every segment read is already realized in `path`.
inline double integrated_variance(const PathRecord& path, double t, double maturity, const FunctionalSpec& g,
                                  double gap) {
  const double dt = path.grid.step();
  if (t < maturity - gap - kDivisibilityTol * dt) {
    throw ValidationError("integrated variance over [t, T] is only determined for t >= T - l");
  }
  if (t > maturity + kDivisibilityTol * dt) throw ValidationError("t must be <= T");
  const std::size_t n = whole_steps(std::max(0.0, maturity - t), dt, "T - t");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = t + static_cast<double>(i) * dt;
    const HistorySegment seg = segment_at(path, u - gap, path.window);
    const double b = eval_vol(g, u, seg);
    acc += b * b;
  }
  return acc * dt;
}

/// Nested price at t = 0: simulate under Q to T - l, then average
/// H(S~(T-l), -sigma2/2, sigma2) with sigma2 the variance over [T-l, T].
inline PricingResult price_nested(const InitialPath& theta, const FunctionalSpec& f, const FunctionalSpec& g,
                                  const SimulationConfig& cfg, const MarketConfig& mkt) {
  const SimulationConfig q = detail::risk_neutral(cfg, mkt);
  if (!(q.horizon > q.gap)) throw ValidationError("nested pricing needs T > l; use the closed form");
  const GapScheme scheme(theta, f, g, q, q.gap, q.gap);
  return detail::nested_mc(scheme, q, mkt, 0.0);
}

/// Nested price at time t conditioned on the realized prefix of `path` up to t.
inline PricingResult price_nested(const PathRecord& path, double t, const FunctionalSpec& f, const FunctionalSpec& g,
                                  const SimulationConfig& cfg, const MarketConfig& mkt) {
  const SimulationConfig q = detail::risk_neutral(cfg, mkt);
  const GapScheme scheme(path, t, f, g, q);
  return detail::nested_mc(scheme, q, mkt, t);
}

/// Closed-form price at t >= T - l from a realized path.
inline PricingResult price_last_delay(const PathRecord& path, double t, const FunctionalSpec& g,
                                      const MarketConfig& mkt, double gap) {
  const double sigma2 = integrated_variance(path, t, mkt.maturity, g, gap);
  return closed_form_last_delay(value_at(path, t), sigma2, mkt.maturity - t, mkt);
}

/// Monte Carlo price at t = 0 under the gap dynamics with gap cfg.gap.
inline PricingResult price_gap_mc(const InitialPath& theta, const FunctionalSpec& f, const FunctionalSpec& g,
                                  const SimulationConfig& cfg, const MarketConfig& mkt, Payoff kind = Payoff::call) {
  const SimulationConfig q = detail::risk_neutral(cfg, mkt);
  const GapScheme scheme(theta, f, g, q, q.gap, q.gap);
  return detail::terminal_mc(scheme, q, mkt, kind, Method::gap_mc);
}

/// Monte Carlo price at t = 0 for the full-memory model, approximated by S^k
/// (gap 1/k) simulated under Q with drift r.
inline PricingResult price_full_memory_mc(int approx_k, const InitialPath& theta, const FunctionalSpec& f,
                                          const FunctionalSpec& g, const SimulationConfig& cfg,
                                          const MarketConfig& mkt, Payoff kind = Payoff::call) {
  if (approx_k < 1) throw ValidationError("approx_k must be >= 1");
  SimulationConfig q = detail::risk_neutral(cfg, mkt);
  q.gap = 1.0 / static_cast<double>(approx_k);
  const GapScheme scheme(theta, f, g, q, q.gap, 1.0);
  return detail::terminal_mc(scheme, q, mkt, kind, Method::full_memory_mc);
}

struct HedgeOutcome {
  double terminal_wealth = 0.0;
  double payoff = 0.0;
  double error() const { return terminal_wealth - payoff; }
};

/// Self-financing replication of the call on [start, T] (start >= T - l),
/// holding Phi(beta+) shares between rebalance dates spaced rebalance_dt
/// apart; cash accrues at r. Starts from the closed-form price at `start`.
inline HedgeOutcome hedge_replication_backtest(const PathRecord& path, double rebalance_dt, const MarketConfig& mkt,
                                               const FunctionalSpec& g, double gap, std::optional<double> start = {}) {
  mkt.validate();
  const double dt = path.grid.step();
  const double T = mkt.maturity;
  const double t0 = start.value_or(std::max(0.0, T - gap));
  if (t0 < T - gap - kDivisibilityTol * dt || t0 < -kDivisibilityTol * dt || t0 >= T) {
    throw ValidationError("hedge window must lie inside the last delay period [T - l, T]");
  }
  const std::size_t per = whole_steps(rebalance_dt, dt, "the rebalance interval");
  if (per < 1) throw ValidationError("rebalance interval must be positive");
  const std::size_t first = path.grid.index_of(t0);
  const std::size_t last = path.grid.index_of(T);

  // suffix[j] = integrated variance over [t_{first+j}, T].
  const std::size_t n = last - first;
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t j = n; j-- > 0;) {
    const HistorySegment seg = segment_at(path, path.grid.time(first + j) - gap, path.window);
    const double b = eval_vol(g, seg.anchor, seg);
    suffix[j] = suffix[j + 1] + b * b * dt;
  }

  const auto quote = closed_form_last_delay(path.prices[first], suffix[0], T - t0, mkt);
  double shares = quote.hedge->stock_units;
  double cash = quote.price - shares * path.prices[first];
  std::size_t j = 0;
  while (j < n) {
    const std::size_t step = std::min(per, n - j);
    cash *= std::exp(mkt.rate * static_cast<double>(step) * dt);
    j += step;
    if (j < n) {
      const double s = path.prices[first + j];
      const double wealth = shares * s + cash;
      const auto q = closed_form_last_delay(s, suffix[j], T - path.grid.time(first + j), mkt);
      shares = q.hedge->stock_units;
      cash = wealth - shares * s;
    }
  }
  const double s_T = path.prices[last];
  return HedgeOutcome{shares * s_T + cash, std::max(0.0, s_T - mkt.strike)};
}

}  // namespace memsfde
