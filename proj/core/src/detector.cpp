#include "qtrack/detector.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "qtrack/errors.hpp"

namespace qtrack {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("geometry: " + what);
}

}  // namespace

bool DetectorGeometry::contains(double x, double y) const {
  return std::abs(x - layer_center_x) <= layer_half_extent_x &&
         std::abs(y) <= layer_half_extent_y;
}

DetectorGeometry build_geometry(const GeometryConfig& config) {
  require(config.n_layers == kNumLayers, "exactly 4 layers are required, got " +
                                             std::to_string(config.n_layers));
  require(config.layer_pitch > 0.0, "layer_pitch must be positive");
  require(config.hit_resolution > 0.0, "hit_resolution must be positive");
  require(config.layer_thickness_x0 >= 0.0, "layer_thickness_x0 must be non-negative");
  require(config.dipole_field >= 0.0, "dipole_field must be non-negative");
  require(config.dipole_length > 0.0, "dipole_length must be positive");
  require(config.layer_half_extent_x > 0.0 && config.layer_half_extent_y > 0.0,
          "layer half extents must be positive");

  DetectorGeometry g;
  if (config.layer_z) {
    const auto& z = *config.layer_z;
    require(z.size() == kNumLayers, "layer_z must list exactly 4 positions");
    for (int l = 1; l < kNumLayers; ++l) {
      require(z[l] > z[l - 1], "layer_z must be strictly increasing");
      require(std::abs((z[l] - z[l - 1]) - config.layer_pitch) <= 1e-12,
              "layer_z spacing must equal layer_pitch");
    }
    std::copy(z.begin(), z.end(), g.layer_z.begin());
  } else {
    require(config.first_layer_z > config.dipole_center_z,
            "first layer must sit downstream of the dipole");
    for (int l = 0; l < kNumLayers; ++l) {
      g.layer_z[l] = config.first_layer_z + l * config.layer_pitch;
    }
  }
  require(g.layer_z[0] > config.dipole_center_z, "first layer must sit downstream of the dipole");

  g.layer_pitch = config.layer_pitch;
  g.layer_center_x = config.layer_center_x;
  g.layer_half_extent_x = config.layer_half_extent_x;
  g.layer_half_extent_y = config.layer_half_extent_y;
  g.hit_resolution = config.hit_resolution;
  g.layer_thickness_x0 = config.layer_thickness_x0;
  g.dipole_field = config.dipole_field;
  g.dipole_length = config.dipole_length;
  g.dipole_center_z = config.dipole_center_z;
  g.ip_position = config.ip_position;
  return g;
}

const TruthParticle* Event::find_particle(ParticleId id) const {
  auto it = std::find_if(particles.begin(), particles.end(),
                         [id](const TruthParticle& p) { return p.particle_id == id; });
  return it == particles.end() ? nullptr : &*it;
}

const Hit* Event::find_hit(HitId id) const {
  auto it = std::find_if(hits.begin(), hits.end(), [id](const Hit& h) { return h.hit_id == id; });
  return it == hits.end() ? nullptr : &*it;
}

std::vector<std::string> validate_event(const Event& event, const DetectorGeometry& geometry) {
  std::vector<std::string> out;
  auto report = [&out](const std::string& kind, auto id) {
    std::ostringstream os;
    os << kind << " (" << id << ")";
    out.push_back(os.str());
  };

  std::set<ParticleId> particle_ids;
  for (const auto& p : event.particles) {
    if (!particle_ids.insert(p.particle_id).second) report("duplicate particle id", p.particle_id);
    if (!(p.energy > 0.0)) report("non-positive particle energy", p.particle_id);
    const double norm = std::sqrt(p.direction.x * p.direction.x + p.direction.y * p.direction.y +
                                  p.direction.z * p.direction.z);
    if (std::abs(norm - 1.0) > 1e-12) report("non-unit particle direction", p.particle_id);
  }

  std::set<HitId> hit_ids;
  for (const auto& h : event.hits) {
    if (!hit_ids.insert(h.hit_id).second) report("duplicate hit id", h.hit_id);
    if (h.layer < 0 || h.layer >= kNumLayers) {
      report("invalid layer index", h.hit_id);
      continue;
    }
    if (h.position.z != geometry.layer_z[h.layer]) report("off-layer hit", h.hit_id);
    if (!geometry.contains(h.position.x, h.position.y)) report("hit outside layer extent", h.hit_id);
    if (h.truth_particle_id && !particle_ids.contains(*h.truth_particle_id)) {
      report("dangling truth link", h.hit_id);
    }
  }
  return out;
}

}  // namespace qtrack
