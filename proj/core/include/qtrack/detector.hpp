#pragma once

// Tracker geometry and the event data model shared by simulation,
// reconstruction and evaluation. Units: metres, GeV, radians, tesla.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qtrack {

inline constexpr int kNumLayers = 4;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

using HitId = std::int64_t;
using ParticleId = std::int64_t;
using EventId = std::int64_t;

/// User-facing geometry knobs. Either give `layer_z` explicitly or let it be
/// generated from `first_layer_z` and `layer_pitch`.
struct GeometryConfig {
  int n_layers = kNumLayers;
  std::optional<std::vector<double>> layer_z;
  double first_layer_z = 1.0;
  double layer_pitch = 0.10;
  double layer_center_x = 0.29;
  double layer_half_extent_x = 0.27;
  double layer_half_extent_y = 0.0069;
  double hit_resolution = 5e-6;
  double layer_thickness_x0 = 0.357e-2;
  double dipole_field = 0.95;
  double dipole_length = 1.0;
  double dipole_center_z = 0.5;
  Vec3 ip_position{};
};

/// Four parallel planes perpendicular to z, downstream of a dipole that bends
/// positrons towards +x. Immutable once built; share by const reference.
struct DetectorGeometry {
  std::array<double, kNumLayers> layer_z{};
  double layer_pitch = 0.10;
  double layer_center_x = 0.29;
  double layer_half_extent_x = 0.27;
  double layer_half_extent_y = 0.0069;
  double hit_resolution = 5e-6;
  double layer_thickness_x0 = 0.357e-2;
  double dipole_field = 0.95;
  double dipole_length = 1.0;
  double dipole_center_z = 0.5;
  Vec3 ip_position{};

  /// True if (x, y) lies inside the sensitive area of a layer (edges inclusive).
  [[nodiscard]] bool contains(double x, double y) const;

  friend bool operator==(const DetectorGeometry&, const DetectorGeometry&) = default;
};

/// Validates the config and returns the geometry. Throws ConfigError.
DetectorGeometry build_geometry(const GeometryConfig& config = {});

struct TruthParticle {
  ParticleId particle_id = 0;
  double energy = 0.0;
  Vec3 origin{};
  Vec3 direction{0.0, 0.0, 1.0};

  friend bool operator==(const TruthParticle&, const TruthParticle&) = default;
};

struct Hit {
  HitId hit_id = 0;
  int layer = 0;
  Vec3 position{};
  std::optional<ParticleId> truth_particle_id;

  friend bool operator==(const Hit&, const Hit&) = default;
};

struct Event {
  EventId event_id = 0;
  double xi_label = 0.0;
  std::vector<Hit> hits;
  std::vector<TruthParticle> particles;

  [[nodiscard]] const TruthParticle* find_particle(ParticleId id) const;
  [[nodiscard]] const Hit* find_hit(HitId id) const;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Human-readable invariant violations; empty when the event is consistent
/// with the geometry. Never throws.
std::vector<std::string> validate_event(const Event& event, const DetectorGeometry& geometry);

}  // namespace qtrack
