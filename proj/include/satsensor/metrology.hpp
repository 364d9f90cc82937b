#pragma once

// Fisher information and precision bounds for field estimation from atom
// transmission counts.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "satsensor/errors.hpp"
#include "satsensor/numerics.hpp"
#include "satsensor/scattering.hpp"
#include "satsensor/units.hpp"

namespace satsensor {

enum class DetectionScheme {
  BothPorts,        ///< transmitted and reflected atoms are both counted
  TransmittedOnly,  ///< only transmitted atoms are counted
};

struct DetectorModel {
  double eta = 1.0;  ///< detection efficiency
  DetectionScheme scheme = DetectionScheme::BothPorts;

  void validate() const {
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("DetectorModel: eta must lie in [0, 1]");
  }
};

/// Resources of one measurement run.
struct SensorBudget {
  std::int64_t n_tubes = 1;           ///< N, parallel waveguides
  std::int64_t m_reps = 1;            ///< M, repetitions per tube (ignored when total_time is set)
  double tau = 0.03;                  ///< single collision-and-detection time (s)
  std::optional<double> total_time;   ///< t (s); sets M = floor(t / tau)
  double sigma_p = 0.0;               ///< longitudinal momentum spread (1/abar)

  void validate() const {
    if (n_tubes < 1) throw std::invalid_argument("SensorBudget: n_tubes must be >= 1");
    if (!(tau > 0.0)) throw std::invalid_argument("SensorBudget: tau must be positive");
    if (!(sigma_p >= 0.0)) throw std::invalid_argument("SensorBudget: sigma_p must be >= 0");
    if (repetitions() < 1) throw std::invalid_argument("SensorBudget: needs at least one repetition");
  }
  std::int64_t repetitions() const {
    if (total_time) return static_cast<std::int64_t>(std::floor(*total_time / tau));
    return m_reps;
  }
};

/// d delta_1D / dB. The numerator N'D - ND' of the phase-ratio quotient rule
/// collapses to the constant -2 g p d^2 Delta.
inline double phase_derivative(double b, const Collision& coll, const ResonanceParams& params,
                               const TrapGeometry& geom) {
  detail::require_propagating(coll);
  const PhaseRatio r = phase_ratio(b, coll, params, geom);
  const double g = geom.mass_factor * params.a_bg;
  return -2.0 * g * coll.p() * geom.d * geom.d * params.delta / r.norm2();
}

enum class DerivativeMode { Auto, Analytic, FiniteDifference };

/// dT/dB in 1/G. The pole shift from dmu does not depend on B, so the
/// analytic chain rule stays exact with dmu enabled and Auto resolves to it.
/// FiniteDifference is a central difference with step 1e-6 |Delta|.
inline double transmission_derivative(double b, const Collision& coll, const ResonanceParams& params,
                                      const TrapGeometry& geom, DerivativeMode mode = DerivativeMode::Auto) {
  detail::require_propagating(coll);
  if (mode == DerivativeMode::FiniteDifference) {
    const double h = 1e-6 * std::abs(params.delta);
    if (b + h == b || b - h == b) throw NumericError("transmission_derivative: finite-difference step underflow");
    return (transmission(b + h, coll, params, geom) - transmission(b - h, coll, params, geom)) / (2.0 * h);
  }
  const PhaseRatio r = phase_ratio(b, coll, params, geom);
  return -2.0 * r.num * r.den * phase_derivative(b, coll, params, geom) / r.norm2();
}

/// Classical Fisher information about B carried by one atom, in 1/G^2.
///
/// With T = cos^2 delta, T'^2 / (T (1 - T)) = 4 delta'^2 identically. The
/// phase form is used for evaluation: it is exact at the extrema T = 0 and
/// T = 1 where the probability form is 0/0, and there it equals 2|T''|.
///   BothPorts:       eta * T'^2 / (T (1 - T))
///   TransmittedOnly: eta * T'^2 / (T (1 - eta T))
inline double fisher_information(double b, const Collision& coll, const ResonanceParams& params,
                                 const TrapGeometry& geom, const DetectorModel& detector) {
  detector.validate();
  const PhaseRatio r = phase_ratio(b, coll, params, geom);
  const double t = r.transmission();
  if (!(t >= 0.0 && t <= 1.0)) throw std::logic_error("fisher_information: transmission outside [0, 1]");
  const double dphase = phase_derivative(b, coll, params, geom);
  const double perfect = 4.0 * dphase * dphase;
  const double eta = detector.eta;
  if (detector.scheme == DetectionScheme::BothPorts || eta == 1.0) return eta * perfect;
  // (1 - T) / (1 - eta T) stays finite because eta < 1
  return eta * perfect * r.reflection() / (1.0 - eta * t);
}

/// Single-atom Cramer-Rao bound 1/sqrt(F) in G; +inf when F = 0.
inline double precision_from_fisher(double fisher) {
  if (!(fisher > 0.0)) return std::numeric_limits<double>::infinity();
  return 1.0 / std::sqrt(fisher);
}

inline double single_shot_precision(double b, const Collision& coll, const ResonanceParams& params,
                                    const TrapGeometry& geom, const DetectorModel& detector) {
  return precision_from_fisher(fisher_information(b, coll, params, geom, detector));
}

/// Leading-order bound near the CIR, |g Delta| (1/(p d^2) + C(0)^2 p / 4), with
/// g = (m/mu) a_bg the incoming-frame background length.
inline double deltaB_cir_asymptotic(double p, const ResonanceParams& params, const TrapGeometry& geom) {
  if (!(p > 0.0)) throw std::invalid_argument("deltaB_cir_asymptotic: p must be positive");
  const double c0 = confinement_factor(0.0, geom);
  const double g = geom.mass_factor * params.a_bg;
  return std::abs(g * params.delta) * (1.0 / (p * geom.d * geom.d) + c0 * c0 * p / 4.0);
}

/// Bound at the unit-transmission peak, |Delta| p d^2 / (4 |g|).
inline double deltaB_peak_asymptotic(double p, const ResonanceParams& params, const TrapGeometry& geom) {
  if (!(p > 0.0)) throw std::invalid_argument("deltaB_peak_asymptotic: p must be positive");
  if (params.a_bg == 0.0) throw std::invalid_argument("deltaB_peak_asymptotic: a_bg must be nonzero");
  const double g = geom.mass_factor * params.a_bg;
  return std::abs(params.delta) * p * geom.d * geom.d / (4.0 * std::abs(g));
}

/// Momentum minimizing the CIR asymptotic bound: 2 / (C(0) d).
inline double cir_optimal_momentum(const TrapGeometry& geom) {
  return 2.0 / (confinement_factor(0.0, geom) * geom.d);
}

/// Single-shot precision improved by sqrt(N M).
inline double ensemble_precision(double delta_b_single, const SensorBudget& budget) {
  budget.validate();
  return delta_b_single /
         std::sqrt(static_cast<double>(budget.n_tubes) * static_cast<double>(budget.repetitions()));
}

/// Sensitivity in T / sqrt(Hz): Delta B sqrt(tau / N).
inline double sensitivity_per_root_hz(double delta_b_single, const SensorBudget& budget) {
  budget.validate();
  return delta_b_single * constants::tesla_per_gauss * std::sqrt(budget.tau / static_cast<double>(budget.n_tubes));
}

struct AveragedTransmission {
  double value = 0.0;
  /// Fraction of the Gaussian momentum distribution inside (0, 2/d).
  double retained_mass = 1.0;
  /// More than 1 % of the distribution was cut by the single-mode window.
  bool truncated = false;
};

/// Transmission averaged over a Gaussian momentum distribution of mean
/// p_mean and width sigma_p, truncated to (0, 2/d) and renormalized.
inline AveragedTransmission averaged_transmission(double b, double p_mean, double sigma_p,
                                                  const ResonanceParams& params, const TrapGeometry& geom) {
  geom.validate();
  if (!(sigma_p >= 0.0)) throw std::invalid_argument("averaged_transmission: sigma_p must be >= 0");
  if (sigma_p == 0.0) return {transmission(b, Collision(p_mean, geom), params, geom), 1.0, false};

  const double p_max = geom.max_momentum();
  const double lo = std::max(0.0, p_mean - 10.0 * sigma_p);
  const double hi = std::min(p_max, p_mean + 10.0 * sigma_p);
  if (!(lo < hi)) throw std::invalid_argument("averaged_transmission: distribution lies outside the single-mode window");

  const double inv_s = 1.0 / (sigma_p * std::numbers::sqrt2);
  const double retained =
      0.5 * (std::erfc((lo - p_mean) * inv_s) - std::erfc((hi - p_mean) * inv_s));
  const double norm = 1.0 / (sigma_p * std::sqrt(2.0 * std::numbers::pi));
  auto integrand = [&](double p) {
    const double z = (p - p_mean) / sigma_p;
    return norm * std::exp(-0.5 * z * z) * transmission(b, Collision(p, geom), params, geom);
  };
  const auto q = numerics::integrate(integrand, lo, hi, 1e-10);
  if (!(q.error <= 1e-8)) throw NumericError("averaged_transmission: quadrature did not reach 1e-8");
  return {q.value / retained, retained, 1.0 - retained > 0.01};
}

/// Field jitter sigma_E / dmu from an energy spread (nK) and a differential
/// magnetic moment (Hz / G).
inline double resonance_jitter(double sigma_e_nk, double dmu_hz_per_gauss) {
  if (!(dmu_hz_per_gauss > 0.0)) throw std::invalid_argument("resonance_jitter: dmu must be positive");
  if (!(sigma_e_nk >= 0.0)) throw std::invalid_argument("resonance_jitter: sigma_E must be >= 0");
  return sigma_e_nk * constants::hz_per_nanokelvin / dmu_hz_per_gauss;
}

}  // namespace satsensor
