#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace memsfde {

/// Sum by recursive halving. Depends only on the order of `v`, so results do
/// not change with the thread schedule that produced the samples.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// Sample mean with its standard error.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;

  double ci_lo() const { return mean - 1.96 * std_error; }
  double ci_hi() const { return mean + 1.96 * std_error; }
};

inline Estimate estimate(std::span<const double> samples) {
  Estimate e;
  e.count = samples.size();
  if (samples.empty()) return e;
  const double n = static_cast<double>(samples.size());
  e.mean = pairwise_sum(samples) / n;
  if (samples.size() < 2) return e;
  std::vector<double> sq(samples.size());
  std::transform(samples.begin(), samples.end(), sq.begin(), [&](double x) { return (x - e.mean) * (x - e.mean); });
  const double var = pairwise_sum(sq) / (n - 1.0);
  e.std_error = std::sqrt(var / n);
  return e;
}

/// Standard error of the difference of two estimates, treating them as independent.
inline double combined_se(const Estimate& a, const Estimate& b) { return std::hypot(a.std_error, b.std_error); }

inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs fn(workspace, i) for i in [0, n) across `threads` workers, each owning
/// one workspace built by make(). Per-index outputs are the caller's job.
template <class Make, class Fn>
void parallel_for(std::size_t n, std::size_t threads, Make make, Fn fn) {
  threads = std::min(resolve_threads(threads), std::max<std::size_t>(1, n));
  if (threads == 1) {
    auto ws = make();
    for (std::size_t i = 0; i < n; ++i) fn(ws, i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        auto ws = make();
        for (std::size_t i = w; i < n; i += threads) fn(ws, i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Least-squares slope of y on x.
inline double fit_slope(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace memsfde
