#pragma once

// Toy event generator: positrons from a smeared interaction point, a thin-lens
// dipole kick towards +x, straight-line propagation through the four layers
// with Highland multiple scattering, Gaussian hit smearing.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>

#include "qtrack/detector.hpp"

namespace qtrack {

/// Transverse momentum kick of a dipole, GeV per (T m).
inline constexpr double kMomentumPerTeslaMetre = 0.2998;

struct EnergySpectrum {
  /// "gamma" (shape, scale) or "uniform" (between lo and hi) or "fixed" (value lo).
  std::string kind = "gamma";
  double shape = 3.0;
  double scale = 1.3;
  double lo = 0.5;
  double hi = 14.0;

  /// Mean of the distribution after truncation to [lo, hi].
  [[nodiscard]] double mean() const;

  friend bool operator==(const EnergySpectrum&, const EnergySpectrum&) = default;
};

struct SimConfig {
  double mean_multiplicity = 100.0;
  /// When set, every event holds exactly this many particles (no Poisson draw).
  std::optional<int> fixed_multiplicity;
  EnergySpectrum energy_spectrum{};
  Vec3 ip_smear{5e-6, 5e-6, 24e-6};
  double emittance_angle_sigma = 1e-4;
  std::uint64_t rng_seed = 1;
  double xi_label = 0.0;
  bool smear_hits = true;
  bool multiple_scattering = true;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// Validates a SimConfig; throws ConfigError.
void validate(const SimConfig& sim);

struct LaserConfig {
  double field_strength = 2.0e13;      // V/m
  double frequency = 1.55;             // eV
  double electron_mass = 0.51099895e6; // eV
  double fine_structure = 1.0 / 137.035999084;
  double critical_field = 1.32e18;     // V/m
};

inline constexpr double kHbarC = 1.973269804e-7;  // eV m

/// Critical (Schwinger) field implied by an electron mass, in V/m.
double consistent_critical_field(double electron_mass_ev);

/// Laser intensity parameter, sqrt(4 pi alpha) eps_L / (omega_L m_e), with the
/// field converted from V/m to natural (Heaviside-Lorentz) units.
double compute_xi(const LaserConfig& laser);

/// Same quantity through the critical field: m_e eps_L / (omega_L eps_cr).
double compute_xi_via_critical_field(const LaserConfig& laser);

/// Expected positrons per bunch crossing, log-linear through the anchors
/// (3, 1e2), (5, 1.05e4), (7, 7e4). Throws RangeError outside [3, 7].
double xi_to_multiplicity(double xi);

/// Bending angle of a thin dipole: asin(0.2998 B L / E). Throws DomainError
/// for E <= 0 or when the particle cannot exit forward.
double dipole_deflection(double energy, double field, double length);

/// Highland width per projected plane.
double scattering_sigma(double energy, double thickness_x0);

/// Independent Gaussian kicks in the x-z and y-z planes.
std::pair<double, double> scattering_kick(double energy, double thickness_x0, std::mt19937_64& rng);

/// Seeds the per-event generator from (splitmix64(seed) xor event_id).
std::mt19937_64 event_rng(std::uint64_t seed, EventId event_id);

/// Pure function of (sim, geometry, event_id).
Event generate_event(const SimConfig& sim, const DetectorGeometry& geometry, EventId event_id);

}  // namespace qtrack
