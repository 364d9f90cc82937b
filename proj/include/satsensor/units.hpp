#pragma once

// Natural units used throughout the core: lengths in the van der Waals mean
// length abar, momenta in 1/abar, hbar = m = 1 (m is the mass of the incoming
// atom), magnetic field in gauss. Energies are therefore measured in
// hbar^2 / (m abar^2). Laboratory units only appear at the I/O boundary.

#include <cmath>
#include <stdexcept>
#include <string>

namespace satsensor {

namespace constants {
// CODATA 2018
inline constexpr double hbar = 1.054571817e-34;                // J s
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double bohr_radius = 5.29177210903e-11;       // m
inline constexpr double boltzmann = 1.380649e-23;              // J / K

/// k_B / h per nanokelvin, 6 significant figures.
inline constexpr double hz_per_nanokelvin = 20.8366;
inline constexpr double tesla_per_gauss = 1e-4;
}  // namespace constants

/// Atomic species of the incoming atom.
struct Species {
  std::string name;
  double mass_amu = 0.0;   ///< atomic mass
  double abar_bohr = 0.0;  ///< van der Waals mean length in Bohr radii

  void validate() const {
    if (!(mass_amu > 0.0) || !std::isfinite(mass_amu))
      throw std::invalid_argument("Species: mass_amu must be positive");
    if (!(abar_bohr > 0.0) || !std::isfinite(abar_bohr))
      throw std::invalid_argument("Species: abar_bohr must be positive");
  }
};

/// Conversion between the natural units and laboratory units for one species.
class UnitSystem {
 public:
  explicit UnitSystem(const Species& species) {
    species.validate();
    const double abar_m = species.abar_bohr * constants::bohr_radius;
    const double mass_kg = species.mass_amu * constants::atomic_mass_unit;
    energy_unit_nk_ = constants::hbar * constants::hbar /
                      (mass_kg * abar_m * abar_m * constants::boltzmann) * 1e9;
  }

  /// hbar^2 / (m abar^2) expressed as a temperature in nK.
  double energy_unit_nk() const { return energy_unit_nk_; }
  double energy_unit_hz() const { return energy_unit_nk_ * constants::hz_per_nanokelvin; }

  double energy_to_nk(double e) const { return e * energy_unit_nk_; }
  double nk_to_energy(double t_nk) const { return t_nk / energy_unit_nk_; }

  /// Differential magnetic moment: Hz/G -> natural energy unit per G.
  double dmu_from_hz_per_gauss(double hz_per_g) const { return hz_per_g / energy_unit_hz(); }
  double dmu_to_hz_per_gauss(double dmu) const { return dmu * energy_unit_hz(); }

 private:
  double energy_unit_nk_ = 0.0;
};

/// Longitudinal kinetic energy hbar^2 p^2 / 2m of an atom with wavenumber p,
/// as a temperature in nK.
inline double momentum_to_temperature(double p, const Species& species) {
  if (!(p >= 0.0)) throw std::invalid_argument("momentum_to_temperature: p must be >= 0");
  return UnitSystem(species).energy_to_nk(0.5 * p * p);
}

inline double temperature_to_momentum(double t_nk, const Species& species) {
  if (!(t_nk >= 0.0)) throw std::invalid_argument("temperature_to_momentum: T must be >= 0");
  return std::sqrt(2.0 * UnitSystem(species).nk_to_energy(t_nk));
}

}  // namespace satsensor
