#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qtrack/detector.hpp"
#include "qtrack/fastsim.hpp"

namespace testutil {

/// Simulation with every random effect switched off except the energy draw.
inline qtrack::SimConfig noiseless_sim(int particles, double energy = 5.0) {
  qtrack::SimConfig s;
  s.fixed_multiplicity = particles;
  s.energy_spectrum.kind = "fixed";
  s.energy_spectrum.lo = energy;
  s.ip_smear = {0.0, 0.0, 0.0};
  s.emittance_angle_sigma = 0.0;
  s.smear_hits = false;
  s.multiple_scattering = false;
  return s;
}

inline qtrack::Hit hit(qtrack::HitId id, int layer, double x, double y, std::optional<qtrack::ParticleId> truth,
                       const qtrack::DetectorGeometry& g) {
  return qtrack::Hit{id, layer, {x, y, g.layer_z[layer]}, truth};
}

/// Four hits of a straight line x = x1 + tx (z - z0), y = y1 + ty (z - z0).
inline std::vector<qtrack::Hit> line_hits(qtrack::HitId first_id, double x1, double tx, double y1, double ty,
                                          std::optional<qtrack::ParticleId> truth,
                                          const qtrack::DetectorGeometry& g) {
  std::vector<qtrack::Hit> out;
  for (int l = 0; l < qtrack::kNumLayers; ++l) {
    const double dz = g.layer_z[l] - g.layer_z[0];
    out.push_back(hit(first_id + l, l, x1 + tx * dz, y1 + ty * dz, truth, g));
  }
  return out;
}

/// Fresh per-test directory below the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::path(QTRACK_TEST_SCRATCH) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
