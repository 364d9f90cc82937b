#pragma once

// Thin wrappers over Boost.Math solvers plus a deterministic parallel loop.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "satsensor/errors.hpp"

namespace satsensor::numerics {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Root of f on [lo, hi] by TOMS 748 (bracketing secant / inverse-cubic with
/// bisection safeguard), iterated to near machine precision. Returns the
/// bracket end with the smaller |f|.
template <class F>
double bracketed_root(F&& f, double lo, double hi) {
  if (!(lo < hi)) throw BracketError("bracketed_root: empty interval");
  const double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (!std::isfinite(flo) || !std::isfinite(fhi) || std::signbit(flo) == std::signbit(fhi))
    throw BracketError("bracketed_root: no sign change on [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 1),
      max_iter);
  return std::abs(f(a)) <= std::abs(f(b)) ? a : b;
}

/// Local minimum of f on [lo, hi] (Brent). Endpoints are compared as well so
/// that a boundary minimum is returned exactly.
template <class F>
std::pair<double, double> bracketed_minimum(F&& f, double lo, double hi) {
  if (!(lo <= hi)) throw NumericError("bracketed_minimum: empty interval");
  std::pair<double, double> best{lo, f(lo)};
  if (lo == hi) return best;
  const double fhi = f(hi);
  if (fhi < best.second) best = {hi, fhi};
  std::uintmax_t max_iter = 500;
  const auto inner = boost::math::tools::brent_find_minima(f, lo, hi, std::numeric_limits<double>::digits / 2,
                                                           max_iter);
  if (inner.second < best.second) best = inner;
  return best;
}

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive 15-point Gauss-Kronrod on [a, b].
template <class F>
QuadratureResult integrate(F&& f, double a, double b, double relative_tolerance, unsigned max_depth = 20) {
  QuadratureResult r;
  double l1 = 0.0;
  r.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, max_depth,
                                                                          relative_tolerance, &r.error, &l1);
  return r;
}

/// n evenly spaced points; a single point yields {lo}.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (std::size_t i = 0; i < n; ++i)
    v[i] = i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

inline std::vector<double> logspace(double lo, double hi, std::size_t n) {
  auto v = linspace(std::log(lo), std::log(hi), n);
  for (auto& x : v) x = std::exp(x);
  if (n > 0) v.front() = lo;
  if (n > 1) v.back() = hi;
  return v;
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers with a static
/// partition. Callers write results by index, so the outcome does not depend
/// on the thread count. The first exception thrown by any worker is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace satsensor::numerics
