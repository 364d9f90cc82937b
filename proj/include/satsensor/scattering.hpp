#pragma once

// Atom-impurity scattering in a harmonic quasi-1D waveguide near a magnetic
// Feshbach resonance.
//
// The 1D phase shift obeys  p tan(delta) = -(2/d) / (d/a - C(p)),  with
// a = (m/mu) * a3d(B) and C(p) = -zeta_H(1/2, 1 - p^2 d^2 / 4). Writing
// a3d(B) = a_bg (u - Delta) / u with u = B - B_pole, tan(delta) becomes the
// ratio of two polynomials in u,
//
//   tan(delta) = num / den,  num = -2 g (u - Delta),
//                            den = p d (d u - C g (u - Delta)),  g = (m/mu) a_bg,
//
// which is finite at the Feshbach pole (u = 0), vanishes at the zero crossing
// (u = Delta) and diverges only at the confinement-induced resonance (den = 0).
// All transmission quantities are evaluated from (num, den) directly.

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "satsensor/hurwitz_zeta.hpp"

namespace satsensor {

/// Feshbach resonance a3d(B) = a_bg (1 - Delta / (B - B_res)).
struct ResonanceParams {
  double a_bg = 0.0;   ///< background scattering length (abar)
  double delta = 0.0;  ///< resonance width (G)
  double b_res = 0.0;  ///< resonance position (G)
  /// Differential magnetic moment (natural energy unit per G). When set, the
  /// pole moves to B_res + E/dmu for a collision of kinetic energy E.
  std::optional<double> dmu;

  void validate() const {
    if (!(delta != 0.0) || !std::isfinite(delta))
      throw std::invalid_argument("ResonanceParams: delta must be finite and nonzero");
    if (!std::isfinite(a_bg)) throw std::invalid_argument("ResonanceParams: a_bg must be finite");
    if (!std::isfinite(b_res)) throw std::invalid_argument("ResonanceParams: b_res must be finite");
    if (dmu && !(*dmu > 0.0 && std::isfinite(*dmu)))
      throw std::invalid_argument("ResonanceParams: dmu must be positive");
  }
};

/// Transverse harmonic confinement.
struct TrapGeometry {
  double d = 20.0;            ///< oscillator length sqrt(hbar / m omega) (abar)
  double mass_factor = 2.0;   ///< m / mu; 2 for equal masses, 1 for a static impurity

  void validate() const {
    if (!(d > 0.0) || !std::isfinite(d)) throw std::invalid_argument("TrapGeometry: d must be positive");
    if (!(mass_factor >= 1.0) || !std::isfinite(mass_factor))
      throw std::invalid_argument("TrapGeometry: mass_factor must be >= 1");
  }
  /// Upper end of the single-mode window p d < 2.
  double max_momentum() const { return 2.0 / d; }
  /// omega in natural units (hbar = m = 1).
  double trap_frequency() const { return 1.0 / (d * d); }
};

/// C(p) = -zeta_H(1/2, 3/2 - E/(2 hbar omega)) with E/(2 hbar omega) = 1/2 + p^2 d^2 / 4.
inline double confinement_factor(double p, const TrapGeometry& geom) {
  geom.validate();
  if (!(p >= 0.0)) throw std::invalid_argument("confinement_factor: p must be >= 0");
  const double pd = p * geom.d;
  if (!(pd < 2.0))
    throw std::domain_error("confinement_factor: p d >= 2 opens the first excited transverse channel");
  return -hurwitz_zeta_half(1.0 - 0.25 * pd * pd);
}

/// One incoming atom with longitudinal wavenumber p in a given trap.
class Collision {
 public:
  Collision(double p, const TrapGeometry& geom)
      : p_(p), d_(geom.d), mass_factor_(geom.mass_factor), c_(confinement_factor(p, geom)) {}

  double p() const { return p_; }
  /// Longitudinal kinetic energy p^2 / 2 above the transverse ground state.
  double kinetic_energy() const { return 0.5 * p_ * p_; }
  /// E = hbar omega + hbar^2 p^2 / 2m.
  double total_energy() const { return 1.0 / (d_ * d_) + kinetic_energy(); }
  /// k from E = hbar^2 k^2 / 2 mu.
  double wavenumber() const { return std::sqrt(2.0 * total_energy() / mass_factor_); }
  double confinement() const { return c_; }

  void check_geometry(const TrapGeometry& geom) const {
    if (geom.d != d_ || geom.mass_factor != mass_factor_)
      throw std::invalid_argument("Collision was built for a different TrapGeometry");
  }

 private:
  double p_;
  double d_;
  double mass_factor_;
  double c_;
};

/// Offset of B from the (possibly energy-shifted) Feshbach pole.
inline double pole_offset(double b, double kinetic_energy, const ResonanceParams& params, bool use_dmu) {
  double pole = params.b_res;
  if (use_dmu && params.dmu) pole += kinetic_energy / *params.dmu;
  return b - pole;
}

/// Three-dimensional scattering length a3d(B) in abar. Exactly at the pole
/// the result is a signed infinity.
inline double scattering_length_3d(double b, const ResonanceParams& params, double e_rel = 0.0,
                                   bool use_dmu = false) {
  const double u = pole_offset(b, e_rel, params, use_dmu);
  return params.a_bg * (1.0 - params.delta / u);
}

/// tan(delta_1D) = num / den, kept as a ratio so the CIR (den = 0) is exact.
struct PhaseRatio {
  double num = 0.0;
  double den = 1.0;

  double tan() const { return num / den; }
  /// delta_1D in (-pi/2, pi/2]; pi/2 exactly on the CIR.
  double angle() const { return den == 0.0 ? std::numbers::pi / 2 : std::atan(num / den); }
  double norm2() const { return num * num + den * den; }
  /// cos^2(delta) = 1 / (1 + tan^2 delta)
  double transmission() const { return den * den / norm2(); }
  /// sin^2(delta), computed without cancellation near T = 1.
  double reflection() const { return num * num / norm2(); }
};

/// Phase ratio for a given effective (incoming-frame) scattering length.
inline PhaseRatio phase_ratio_from_length(double a_eff, const Collision& coll, const TrapGeometry& geom) {
  coll.check_geometry(geom);
  const double d = geom.d;
  if (std::isinf(a_eff)) return {-2.0, -coll.p() * d * coll.confinement()};
  return {-2.0 * a_eff, coll.p() * d * (d - coll.confinement() * a_eff)};
}

/// Phase ratio at field B. dmu, when present, shifts the pole with the
/// collision's kinetic energy.
inline PhaseRatio phase_ratio(double b, const Collision& coll, const ResonanceParams& params,
                              const TrapGeometry& geom) {
  coll.check_geometry(geom);
  const double u = pole_offset(b, coll.kinetic_energy(), params, true);
  const double g = geom.mass_factor * params.a_bg;
  const double v = u - params.delta;
  const double d = geom.d;
  PhaseRatio r{-2.0 * g * v, coll.p() * d * (d * u - coll.confinement() * g * v)};
  // a_bg = 0 at the pole: no interaction at all
  if (r.num == 0.0 && r.den == 0.0) r.den = 1.0;
  return r;
}

namespace detail {
inline void require_propagating(const Collision& coll) {
  if (!(coll.p() > 0.0))
    throw std::invalid_argument("the 1D phase shift is defined for propagating states, p > 0");
}
}  // namespace detail

/// delta_1D(B) in (-pi/2, pi/2].
inline double phase_shift_1d(double b, const Collision& coll, const ResonanceParams& params,
                             const TrapGeometry& geom) {
  detail::require_propagating(coll);
  return phase_ratio(b, coll, params, geom).angle();
}

/// T(B) = cos^2 delta_1D.
inline double transmission(double b, const Collision& coll, const ResonanceParams& params,
                           const TrapGeometry& geom) {
  detail::require_propagating(coll);
  return phase_ratio(b, coll, params, geom).transmission();
}

/// 1 - T(B), accurate near the unit-transmission peak.
inline double reflection(double b, const Collision& coll, const ResonanceParams& params,
                         const TrapGeometry& geom) {
  detail::require_propagating(coll);
  return phase_ratio(b, coll, params, geom).reflection();
}

/// Element-wise T over a strictly increasing field grid.
inline std::vector<double> transmission_profile(std::span<const double> b_grid, const Collision& coll,
                                                const ResonanceParams& params, const TrapGeometry& geom) {
  detail::require_propagating(coll);
  for (std::size_t i = 1; i < b_grid.size(); ++i)
    if (!(b_grid[i] > b_grid[i - 1]))
      throw std::invalid_argument("transmission_profile: grid must be strictly increasing");
  std::vector<double> out;
  out.reserve(b_grid.size());
  for (double b : b_grid) out.push_back(phase_ratio(b, coll, params, geom).transmission());
  return out;
}

}  // namespace satsensor
