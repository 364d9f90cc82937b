#pragma once

// Monte Carlo of the counting experiment and maximum-likelihood inversion.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "satsensor/errors.hpp"
#include "satsensor/metrology.hpp"
#include "satsensor/numerics.hpp"
#include "satsensor/rng.hpp"
#include "satsensor/scattering.hpp"

namespace satsensor {

/// Aggregated outcomes of m_sent injected atoms.
struct CountRecord {
  std::int64_t m_sent = 0;
  std::int64_t n_detected = 0;   ///< detected transmitted atoms
  std::int64_t n_reflected = 0;  ///< detected reflected atoms (BothPorts only)
  DetectionScheme scheme = DetectionScheme::BothPorts;
  double eta = 1.0;

  bool operator==(const CountRecord&) const = default;
};

struct EstimationResult {
  double b_hat = 0.0;
  double stderr_pred = 0.0;  ///< 1/sqrt(M F(b_hat))
  bool clamped = false;      ///< b_hat pinned to a prior endpoint
};

namespace detail {
inline std::int64_t draw_binomial(Philox4x32& rng, std::int64_t n, double q) {
  if (n <= 0 || q <= 0.0) return 0;
  if (q >= 1.0) return n;
  return std::binomial_distribution<std::int64_t>(n, q)(rng);
}
}  // namespace detail

/// Draws the counts for m_sent atoms at field b_true. Transmitted detections
/// occur with probability eta T; with BothPorts reflected atoms are detected
/// with probability eta (1 - T), the remainder go undetected.
inline CountRecord simulate_counts(double b_true, const Collision& coll, const ResonanceParams& params,
                                   const TrapGeometry& geom, const DetectorModel& detector, std::int64_t m_sent,
                                   std::uint64_t seed, std::uint64_t stream = 0) {
  detector.validate();
  if (m_sent < 1) throw std::invalid_argument("simulate_counts: m_sent must be >= 1");
  detail::require_propagating(coll);
  const PhaseRatio r = phase_ratio(b_true, coll, params, geom);
  const double t = r.transmission();
  const double q_transmitted = detector.eta * t;
  if (!(q_transmitted >= 0.0 && q_transmitted <= 1.0))
    throw std::logic_error("simulate_counts: detection probability outside [0, 1]");

  Philox4x32 rng(seed, stream);
  CountRecord rec{m_sent, 0, 0, detector.scheme, detector.eta};
  rec.n_detected = detail::draw_binomial(rng, m_sent, q_transmitted);
  if (detector.scheme == DetectionScheme::BothPorts) {
    // reflected-and-detected, conditional on not transmitted-and-detected
    const double rest = 1.0 - q_transmitted;
    const double q_reflected = rest > 0.0 ? std::clamp(detector.eta * r.reflection() / rest, 0.0, 1.0) : 0.0;
    rec.n_reflected = detail::draw_binomial(rng, m_sent - rec.n_detected, q_reflected);
  }
  return rec;
}

namespace detail {
/// Probability the estimator inverts: eta T for TransmittedOnly, T for
/// BothPorts (the trinomial likelihood depends on B only through T).
inline double estimator_model(double b, const CountRecord& rec, const Collision& coll, const ResonanceParams& params,
                              const TrapGeometry& geom) {
  const double t = transmission(b, coll, params, geom);
  return rec.scheme == DetectionScheme::TransmittedOnly ? rec.eta * t : t;
}

inline void require_monotone(const CountRecord& rec, numerics::Interval prior, const Collision& coll,
                             const ResonanceParams& params, const TrapGeometry& geom) {
  constexpr std::size_t kPoints = 64;
  const auto grid = numerics::linspace(prior.lo, prior.hi, kPoints);
  int sign = 0;
  double prev = estimator_model(grid[0], rec, coll, params, geom);
  for (std::size_t i = 1; i < kPoints; ++i) {
    const double cur = estimator_model(grid[i], rec, coll, params, geom);
    const int s = cur > prev ? 1 : (cur < prev ? -1 : 0);
    if (s == 0 || (sign != 0 && s != sign))
      throw NonMonotonePriorError("ml_estimate: T(B) is not strictly monotone on the prior [" +
                                  std::to_string(prior.lo) + ", " + std::to_string(prior.hi) +
                                  "] G; shrink the prior to one side of the CIR / unit-transmission features");
    sign = s;
    prev = cur;
  }
}
}  // namespace detail

/// Maximum-likelihood estimate of B on the prior interval.
///
/// TransmittedOnly solves eta T(B) = n/M. BothPorts maximizes the trinomial
/// likelihood (eta T)^n+ (eta (1-T))^n- (1-eta)^(M-n+-n-), whose maximizer
/// satisfies T(B) = n+/(n+ + n-). Fractions outside the range reachable on
/// the prior clamp to the nearer endpoint.
inline EstimationResult ml_estimate(const CountRecord& rec, numerics::Interval prior, const Collision& coll,
                                    const ResonanceParams& params, const TrapGeometry& geom) {
  if (!(prior.lo < prior.hi)) throw std::invalid_argument("ml_estimate: prior interval must have lo < hi");
  if (rec.m_sent < 1 || rec.n_detected < 0 || rec.n_reflected < 0 || rec.n_detected + rec.n_reflected > rec.m_sent)
    throw std::invalid_argument("ml_estimate: inconsistent count record");
  detail::require_propagating(coll);
  detail::require_monotone(rec, prior, coll, params, geom);

  const DetectorModel detector{rec.eta, rec.scheme};
  auto finish = [&](double b, bool clamped) {
    const double f = fisher_information(b, coll, params, geom, detector);
    return EstimationResult{b, precision_from_fisher(static_cast<double>(rec.m_sent) * f), clamped};
  };

  double target = 0.0;
  if (rec.scheme == DetectionScheme::TransmittedOnly) {
    target = static_cast<double>(rec.n_detected) / static_cast<double>(rec.m_sent);
  } else {
    const std::int64_t seen = rec.n_detected + rec.n_reflected;
    if (seen == 0) return finish(0.5 * (prior.lo + prior.hi), true);  // flat likelihood
    target = static_cast<double>(rec.n_detected) / static_cast<double>(seen);
  }

  auto residual = [&](double b) { return detail::estimator_model(b, rec, coll, params, geom) - target; };
  const double r_lo = residual(prior.lo);
  const double r_hi = residual(prior.hi);
  if (r_lo == 0.0) return finish(prior.lo, false);
  if (r_hi == 0.0) return finish(prior.hi, false);
  if (std::signbit(r_lo) == std::signbit(r_hi)) {
    // target beyond the reachable range: pick the endpoint closest in probability
    return finish(std::abs(r_lo) < std::abs(r_hi) ? prior.lo : prior.hi, true);
  }
  return finish(numerics::bracketed_root(residual, prior.lo, prior.hi), false);
}

struct TrialOutcome {
  CountRecord record;
  EstimationResult estimate;
};

struct SaturationReport {
  std::vector<TrialOutcome> trials;
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased sample variance of b_hat
  double fisher = 0.0;    ///< detector-specific F at b_true
  double ratio = 0.0;     ///< variance * m_sent * fisher
  double clamp_rate = 0.0;
  bool valid = true;      ///< false when more than 1 % of trials clamped
};

/// Repeats simulate + estimate n_trials times (trial i uses RNG stream i) and
/// compares the spread of b_hat with the Cramer-Rao bound 1/(M F).
inline SaturationReport crlb_saturation_experiment(double b_true, const Collision& coll, const ResonanceParams& params,
                                                   const TrapGeometry& geom, const DetectorModel& detector,
                                                   std::int64_t m_sent, std::int64_t n_trials, std::uint64_t seed,
                                                   numerics::Interval prior, unsigned threads = 1) {
  if (n_trials < 100) throw std::invalid_argument("crlb_saturation_experiment: n_trials must be >= 100");
  SaturationReport rep;
  rep.trials.resize(static_cast<std::size_t>(n_trials));
  numerics::parallel_for(rep.trials.size(), threads, [&](std::size_t i) {
    auto rec = simulate_counts(b_true, coll, params, geom, detector, m_sent, seed, i);
    rep.trials[i] = {rec, ml_estimate(rec, prior, coll, params, geom)};
  });

  // fixed-order aggregation
  double sum = 0.0;
  std::int64_t clamped = 0;
  for (const auto& t : rep.trials) {
    sum += t.estimate.b_hat;
    clamped += t.estimate.clamped ? 1 : 0;
  }
  const double n = static_cast<double>(n_trials);
  rep.mean = sum / n;
  double ss = 0.0;
  for (const auto& t : rep.trials) ss += (t.estimate.b_hat - rep.mean) * (t.estimate.b_hat - rep.mean);
  rep.variance = ss / (n - 1.0);
  rep.fisher = fisher_information(b_true, coll, params, geom, detector);
  rep.ratio = rep.variance * static_cast<double>(m_sent) * rep.fisher;
  rep.clamp_rate = static_cast<double>(clamped) / n;
  rep.valid = rep.clamp_rate <= 0.01;
  return rep;
}

}  // namespace satsensor
