#include "qtrack/fastsim.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "qtrack/errors.hpp"

namespace qtrack {

double EnergySpectrum::mean() const {
  if (kind == "fixed") return lo;
  if (kind == "uniform") return 0.5 * (lo + hi);
  if (kind == "gamma") {
    using boost::math::gamma_p;
    const double a = lo / scale;
    const double b = hi / scale;
    const double norm = gamma_p(shape, b) - gamma_p(shape, a);
    return shape * scale * (gamma_p(shape + 1.0, b) - gamma_p(shape + 1.0, a)) / norm;
  }
  throw ConfigError("unknown energy spectrum kind '" + kind + "'");
}

void validate(const SimConfig& sim) {
  if (!(sim.mean_multiplicity >= 0.0)) throw ConfigError("sim: mean_multiplicity must be >= 0");
  if (sim.fixed_multiplicity && *sim.fixed_multiplicity < 0) {
    throw ConfigError("sim: fixed_multiplicity must be >= 0");
  }
  if (sim.ip_smear.x < 0 || sim.ip_smear.y < 0 || sim.ip_smear.z < 0 ||
      sim.emittance_angle_sigma < 0) {
    throw ConfigError("sim: smearing widths must be >= 0");
  }
  const auto& s = sim.energy_spectrum;
  if (s.kind != "gamma" && s.kind != "uniform" && s.kind != "fixed") {
    throw ConfigError("sim: unknown energy spectrum kind '" + s.kind + "'");
  }
  if (!(s.lo > 0.0)) throw ConfigError("sim: spectrum lower bound must be positive");
  if (s.kind != "fixed" && !(s.hi > s.lo)) throw ConfigError("sim: spectrum needs lo < hi");
  if (s.kind == "gamma" && !(s.shape > 0.0 && s.scale > 0.0)) {
    throw ConfigError("sim: gamma shape and scale must be positive");
  }
}

double consistent_critical_field(double electron_mass_ev) {
  return electron_mass_ev * electron_mass_ev / kHbarC;
}

namespace {

void require_positive_laser(const LaserConfig& l) {
  if (!(l.field_strength > 0 && l.frequency > 0 && l.electron_mass > 0 && l.fine_structure > 0 &&
        l.critical_field > 0)) {
    throw DomainError("laser parameters must all be positive");
  }
}

}  // namespace

double compute_xi(const LaserConfig& laser) {
  require_positive_laser(laser);
  const double charge = std::sqrt(4.0 * std::numbers::pi * laser.fine_structure);
  // e * E_natural [eV^2] = E [V/m] * hbar c [eV m]
  const double field_natural = laser.field_strength * kHbarC / charge;
  return charge * field_natural / (laser.frequency * laser.electron_mass);
}

double compute_xi_via_critical_field(const LaserConfig& laser) {
  require_positive_laser(laser);
  return laser.electron_mass * laser.field_strength / (laser.frequency * laser.critical_field);
}

double xi_to_multiplicity(double xi) {
  static constexpr std::array<std::pair<double, double>, 3> kAnchors{{
      {3.0, 1.0e2},
      {5.0, 1.05e4},
      {7.0, 7.0e4},
  }};
  if (!(xi >= kAnchors.front().first && xi <= kAnchors.back().first)) {
    throw RangeError("xi must lie in [3, 7], got " + std::to_string(xi));
  }
  for (std::size_t k = 1; k < kAnchors.size(); ++k) {
    const auto [x0, n0] = kAnchors[k - 1];
    const auto [x1, n1] = kAnchors[k];
    if (xi <= x1) {
      if (xi == x1) return n1;
      const double t = (xi - x0) / (x1 - x0);
      return std::pow(10.0, std::log10(n0) + t * (std::log10(n1) - std::log10(n0)));
    }
  }
  return kAnchors.back().second;
}

double dipole_deflection(double energy, double field, double length) {
  if (!(energy > 0.0)) throw DomainError("dipole_deflection: energy must be positive");
  const double kick = kMomentumPerTeslaMetre * field * length;
  if (kick >= energy) {
    throw DomainError("dipole_deflection: below magnetic cutoff (E = " + std::to_string(energy) +
                      " GeV)");
  }
  return std::asin(kick / energy);
}

double scattering_sigma(double energy, double thickness_x0) {
  if (thickness_x0 <= 0.0) return 0.0;
  return (13.6e-3 / energy) * std::sqrt(thickness_x0) * (1.0 + 0.038 * std::log(thickness_x0));
}

std::pair<double, double> scattering_kick(double energy, double thickness_x0,
                                          std::mt19937_64& rng) {
  std::normal_distribution<double> unit;
  const double gx = unit(rng);
  const double gy = unit(rng);
  const double sigma = scattering_sigma(energy, thickness_x0);
  return {sigma * gx, sigma * gy};
}

std::mt19937_64 event_rng(std::uint64_t seed, EventId event_id) {
  // The run seed is scrambled first; a bare xor would turn seeds 1, 2, 3 into
  // permutations of the same event set.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  const std::uint64_t mixed = z ^ static_cast<std::uint64_t>(event_id);
  std::seed_seq seq{static_cast<std::uint32_t>(mixed), static_cast<std::uint32_t>(mixed >> 32)};
  return std::mt19937_64(seq);
}

namespace {

double sample_energy(const EnergySpectrum& s, std::mt19937_64& rng) {
  if (s.kind == "fixed") return s.lo;
  if (s.kind == "uniform") return std::uniform_real_distribution<double>(s.lo, s.hi)(rng);
  std::gamma_distribution<double> gamma(s.shape, s.scale);
  for (;;) {
    const double e = gamma(rng);
    if (e >= s.lo && e <= s.hi) return e;
  }
}

Vec3 unit_direction(double tx, double ty) {
  const double norm = std::sqrt(tx * tx + ty * ty + 1.0);
  return {tx / norm, ty / norm, 1.0 / norm};
}

}  // namespace

Event generate_event(const SimConfig& sim, const DetectorGeometry& geometry, EventId event_id) {
  validate(sim);
  auto rng = event_rng(sim.rng_seed, event_id);
  std::normal_distribution<double> unit;

  Event event;
  event.event_id = event_id;
  event.xi_label = sim.xi_label;

  int n_particles = 0;
  if (sim.fixed_multiplicity) {
    n_particles = *sim.fixed_multiplicity;
  } else if (sim.mean_multiplicity > 0.0) {
    n_particles = std::poisson_distribution<int>(sim.mean_multiplicity)(rng);
  }

  const double cutoff = kMomentumPerTeslaMetre * geometry.dipole_field * geometry.dipole_length;
  HitId next_hit = 0;
  for (int p = 0; p < n_particles; ++p) {
    // The number of draws per particle does not depend on the smearing and
    // scattering switches, so toggling them keeps particles in correspondence.
    const double energy = sample_energy(sim.energy_spectrum, rng);
    Vec3 origin = geometry.ip_position;
    origin.x += sim.ip_smear.x * unit(rng);
    origin.y += sim.ip_smear.y * unit(rng);
    origin.z += sim.ip_smear.z * unit(rng);
    const double angle_x = sim.emittance_angle_sigma * unit(rng);
    const double angle_y = sim.emittance_angle_sigma * unit(rng);

    std::array<double, 4 * kNumLayers> noise{};
    for (double& v : noise) v = unit(rng);

    TruthParticle particle;
    particle.particle_id = p;
    particle.energy = energy;
    particle.origin = origin;
    particle.direction = unit_direction(std::tan(angle_x), std::tan(angle_y));
    event.particles.push_back(particle);

    if (energy <= cutoff) continue;  // curls away inside the magnet

    // Drift to the magnet centre, then rotate the direction about y.
    double tx = std::tan(angle_x);
    double ty = std::tan(angle_y);
    double x = origin.x + tx * (geometry.dipole_center_z - origin.z);
    double y = origin.y + ty * (geometry.dipole_center_z - origin.z);
    double z = geometry.dipole_center_z;
    {
      const double bend = dipole_deflection(energy, geometry.dipole_field, geometry.dipole_length);
      const Vec3 d = unit_direction(tx, ty);
      const double dx = d.x * std::cos(bend) + d.z * std::sin(bend);
      const double dz = -d.x * std::sin(bend) + d.z * std::cos(bend);
      if (dz <= 0.0) continue;
      tx = dx / dz;
      ty = d.y / dz;
    }

    const double sigma_ms =
        sim.multiple_scattering ? scattering_sigma(energy, geometry.layer_thickness_x0) : 0.0;
    const double sigma_hit = sim.smear_hits ? geometry.hit_resolution : 0.0;
    for (int l = 0; l < kNumLayers; ++l) {
      const double zl = geometry.layer_z[l];
      x += tx * (zl - z);
      y += ty * (zl - z);
      z = zl;
      if (!geometry.contains(x, y)) continue;

      Hit hit;
      hit.hit_id = next_hit++;
      hit.layer = l;
      hit.position = {x + sigma_hit * noise[4 * l], y + sigma_hit * noise[4 * l + 1], zl};
      hit.truth_particle_id = particle.particle_id;
      if (geometry.contains(hit.position.x, hit.position.y)) event.hits.push_back(hit);
      else --next_hit;

      tx = std::tan(std::atan(tx) + sigma_ms * noise[4 * l + 2]);
      ty = std::tan(std::atan(ty) + sigma_ms * noise[4 * l + 3]);
    }
  }
  return event;
}

}  // namespace qtrack
