#pragma once

// Landmarks of T(B) and the search for the best operating point (B, p).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "satsensor/errors.hpp"
#include "satsensor/metrology.hpp"
#include "satsensor/numerics.hpp"
#include "satsensor/scattering.hpp"

namespace satsensor {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Zero crossing of a3d(B), where T = 1: B_res + Delta at zero energy.
inline double find_zero_crossing(const ResonanceParams& params) {
  params.validate();
  return params.b_res + params.delta;
}

/// Zero crossing for a given collision; shifted by E/dmu when dmu is set.
inline double find_zero_crossing(const ResonanceParams& params, const Collision& coll) {
  double b = find_zero_crossing(params);
  if (params.dmu) b += coll.kinetic_energy() / *params.dmu;
  return b;
}

/// Confinement-induced resonance d/a(B) = C(p) inside `bracket`.
///
/// d/a - C has a pole at the zero crossing, so the root is taken on the
/// pole-free numerator d u - C g (u - Delta), which is linear in B.
inline double find_cir(const Collision& coll, const ResonanceParams& params, const TrapGeometry& geom,
                       numerics::Interval bracket) {
  params.validate();
  coll.check_geometry(geom);
  const double g = geom.mass_factor * params.a_bg;
  const double c = coll.confinement();
  auto numerator = [&](double b) {
    const double u = pole_offset(b, coll.kinetic_energy(), params, true);
    return geom.d * u - c * g * (u - params.delta);
  };
  try {
    return numerics::bracketed_root(numerator, bracket.lo, bracket.hi);
  } catch (const BracketError&) {
    throw BracketError("find_cir: d/a(B) - C(p) has no sign change on [" + std::to_string(bracket.lo) + ", " +
                       std::to_string(bracket.hi) + "] G");
  }
}

/// CIR inside `bracket`, or NaN when the bracket holds none.
inline double locate_cir(const Collision& coll, const ResonanceParams& params, const TrapGeometry& geom,
                         numerics::Interval bracket) {
  if (!(bracket.lo < bracket.hi)) return kNaN;
  try {
    return find_cir(coll, params, geom, bracket);
  } catch (const BracketError&) {
    return kNaN;
  }
}

enum class Feature { Cir, Peak };

inline std::string_view to_string(Feature f) { return f == Feature::Cir ? "cir" : "peak"; }

struct Optimum {
  double b = 0.0;
  double p = 0.0;
  double delta_b = 0.0;
  Feature branch = Feature::Peak;
  bool on_boundary = false;
  double cir_b = kNaN;   ///< CIR at p, NaN when outside the field window
  double peak_b = kNaN;  ///< unit-transmission field at p
};

struct OptimizeOptions {
  std::size_t nb = 256;
  std::size_t np = 128;
  bool log_p = true;
  unsigned threads = 1;
};

namespace detail {

inline void check_p_window(numerics::Interval p_window, const TrapGeometry& geom) {
  if (!(p_window.lo > 0.0) || !(p_window.lo <= p_window.hi) || !(p_window.hi * geom.d < 2.0))
    throw std::invalid_argument("momentum window must satisfy 0 < p_lo <= p_hi < 2/d");
}

struct ProfilePoint {
  double b = 0.0;
  double delta_b = std::numeric_limits<double>::infinity();
};

/// Best field at fixed momentum: grid scan seeded with the located features,
/// then Brent within one grid cell on either side of the best candidate.
inline ProfilePoint best_field(double p, std::span<const double> b_grid, const ResonanceParams& params,
                               const TrapGeometry& geom, const DetectorModel& detector) {
  const Collision coll(p, geom);
  auto cost = [&](double b) { return single_shot_precision(b, coll, params, geom, detector); };
  const numerics::Interval window{b_grid.front(), b_grid.back()};

  std::vector<double> candidates(b_grid.begin(), b_grid.end());
  if (const double cir = locate_cir(coll, params, geom, window); !std::isnan(cir)) candidates.push_back(cir);
  if (const double peak = find_zero_crossing(params, coll); window.contains(peak)) candidates.push_back(peak);

  ProfilePoint best;
  for (double b : candidates) {
    const double v = cost(b);
    if (v < best.delta_b || std::isinf(best.delta_b)) best = {b, v};
  }
  if (b_grid.size() < 2) return best;
  const double cell = (window.hi - window.lo) / static_cast<double>(b_grid.size() - 1);
  const double lo = std::max(window.lo, best.b - cell);
  const double hi = std::min(window.hi, best.b + cell);
  if (lo < hi) {
    const auto [b, v] = numerics::bracketed_minimum(cost, lo, hi);
    if (v < best.delta_b) best = {b, v};
  }
  return best;
}

inline Feature nearest_feature(double b, double cir_b, double peak_b) {
  const double to_cir = std::isnan(cir_b) ? std::numeric_limits<double>::infinity() : std::abs(b - cir_b);
  const double to_peak = std::isnan(peak_b) ? std::numeric_limits<double>::infinity() : std::abs(b - peak_b);
  return to_cir < to_peak ? Feature::Cir : Feature::Peak;
}

}  // namespace detail

/// Minimum of the single-shot Delta B over the field and momentum windows.
///
/// A coarse nb x np scan (p log-spaced by default) picks the starting cell.
/// Refinement minimizes the profile p -> min_B Delta B(B, p) with Brent in
/// log p over the neighbouring cells; the inner minimization over B is itself
/// a bracketed Brent search. The optimum is attributed to the nearer of the
/// CIR and the unit-transmission peak at p*.
inline Optimum minimize_deltaB(const ResonanceParams& params, const TrapGeometry& geom, const DetectorModel& detector,
                               numerics::Interval b_window, numerics::Interval p_window,
                               const OptimizeOptions& opts = {}) {
  params.validate();
  geom.validate();
  detector.validate();
  if (!(b_window.lo < b_window.hi)) throw std::invalid_argument("minimize_deltaB: empty field window");
  detail::check_p_window(p_window, geom);
  if (opts.nb < 2 || opts.np < 1) throw std::invalid_argument("minimize_deltaB: grid too small");

  const auto b_grid = numerics::linspace(b_window.lo, b_window.hi, opts.nb);
  const std::size_t np = p_window.lo == p_window.hi ? 1 : opts.np;
  const auto p_grid = opts.log_p ? numerics::logspace(p_window.lo, p_window.hi, np)
                                 : numerics::linspace(p_window.lo, p_window.hi, np);

  std::vector<detail::ProfilePoint> profile(np);
  numerics::parallel_for(np, opts.threads, [&](std::size_t j) {
    profile[j] = detail::best_field(p_grid[j], b_grid, params, geom, detector);
  });
  std::size_t j_best = 0;
  for (std::size_t j = 1; j < np; ++j)
    if (profile[j].delta_b < profile[j_best].delta_b) j_best = j;

  double p_star = p_grid[j_best];
  detail::ProfilePoint at_star = profile[j_best];
  if (np > 1) {
    const std::size_t j_lo = j_best == 0 ? 0 : j_best - 1;
    const std::size_t j_hi = std::min(np - 1, j_best + 1);
    auto scale = [&](double p) { return opts.log_p ? std::log(p) : p; };
    auto unscale = [&](double x) { return opts.log_p ? std::exp(x) : x; };
    auto profile_cost = [&](double x) {
      const double p = std::clamp(unscale(x), p_window.lo, p_window.hi);
      return detail::best_field(p, b_grid, params, geom, detector).delta_b;
    };
    const auto [x, v] = numerics::bracketed_minimum(profile_cost, scale(p_grid[j_lo]), scale(p_grid[j_hi]));
    if (v < at_star.delta_b) {
      p_star = std::clamp(unscale(x), p_window.lo, p_window.hi);
      at_star = detail::best_field(p_star, b_grid, params, geom, detector);
    }
  }

  Optimum out;
  out.b = at_star.b;
  out.p = p_star;
  out.delta_b = at_star.delta_b;
  const Collision coll(p_star, geom);
  out.cir_b = locate_cir(coll, params, geom, b_window);
  const double peak = find_zero_crossing(params, coll);
  out.peak_b = b_window.contains(peak) ? peak : kNaN;
  out.branch = detail::nearest_feature(out.b, out.cir_b, out.peak_b);

  constexpr double kEdge = 1e-9;
  const bool p_edge = np > 1 && (std::abs(out.p - p_window.lo) <= kEdge * p_window.hi ||
                                 std::abs(out.p - p_window.hi) <= kEdge * p_window.hi);
  const bool b_edge = std::abs(out.b - b_window.lo) <= kEdge * b_window.width() ||
                      std::abs(out.b - b_window.hi) <= kEdge * b_window.width();
  out.on_boundary = p_edge || b_edge;
  return out;
}

/// Single-shot Delta B over a (p, B) grid.
struct PrecisionMap {
  std::vector<double> b_grid;
  std::vector<double> p_grid;
  std::vector<double> delta_b;  ///< row-major, index ip * nb + ib; +inf where F = 0
  std::vector<double> cir_b;    ///< per p; NaN when no CIR inside the field range
  std::vector<double> zero_crossing_b;

  double at(std::size_t ip, std::size_t ib) const { return delta_b[ip * b_grid.size() + ib]; }
  /// The unit-transmission field coincides with the zero crossing of a3d.
  const std::vector<double>& unit_transmission_b() const { return zero_crossing_b; }
};

inline PrecisionMap precision_map(const ResonanceParams& params, const TrapGeometry& geom,
                                  const DetectorModel& detector, std::span<const double> b_grid,
                                  std::span<const double> p_grid, unsigned threads = 1) {
  params.validate();
  geom.validate();
  detector.validate();
  if (b_grid.empty() || p_grid.empty()) throw std::invalid_argument("precision_map: empty grid");
  auto increasing = [](std::span<const double> g) {
    for (std::size_t i = 1; i < g.size(); ++i)
      if (!(g[i] > g[i - 1])) return false;
    return true;
  };
  if (!increasing(b_grid) || !increasing(p_grid))
    throw std::invalid_argument("precision_map: grids must be strictly increasing");
  detail::check_p_window({p_grid.front(), p_grid.back()}, geom);

  PrecisionMap map;
  map.b_grid.assign(b_grid.begin(), b_grid.end());
  map.p_grid.assign(p_grid.begin(), p_grid.end());
  const std::size_t nb = b_grid.size();
  map.delta_b.assign(nb * p_grid.size(), 0.0);
  map.cir_b.assign(p_grid.size(), kNaN);
  map.zero_crossing_b.assign(p_grid.size(), kNaN);

  const numerics::Interval range{b_grid.front(), b_grid.back()};
  numerics::parallel_for(p_grid.size(), threads, [&](std::size_t ip) {
    const Collision coll(p_grid[ip], geom);
    for (std::size_t ib = 0; ib < nb; ++ib)
      map.delta_b[ip * nb + ib] = single_shot_precision(b_grid[ib], coll, params, geom, detector);
    map.cir_b[ip] = locate_cir(coll, params, geom, range);
    map.zero_crossing_b[ip] = find_zero_crossing(params, coll);
  });
  return map;
}

}  // namespace satsensor
