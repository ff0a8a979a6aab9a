#pragma once

// Independent reference implementations used to cross-check the library.
// Nothing here calls the code under test except for reading a Qubo's
// coefficients and building configs.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "qtrack/detector.hpp"
#include "qtrack/fastsim.hpp"
#include "qtrack/qubo.hpp"

namespace oracle {

/// Dense copy of a QUBO: a full symmetric matrix with zero diagonal.
struct Dense {
  std::size_t n = 0;
  std::vector<double> a;
  std::vector<std::vector<double>> b;

  explicit Dense(const qtrack::Qubo& q) : n(q.size()), a(q.linear().begin(), q.linear().end()) {
    b.assign(n, std::vector<double>(n, 0.0));
    for (const auto& c : q.couplings()) {
      b[c.i][c.j] = c.value;
      b[c.j][c.i] = c.value;
    }
  }

  double value(const std::vector<int>& t) const {
    double o = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      o += a[i] * t[i];
      for (std::size_t j = 0; j < i; ++j) o += b[i][j] * t[i] * t[j];
    }
    return o;
  }
};

inline std::vector<int> bits_of_index(std::uint64_t index, std::size_t n) {
  std::vector<int> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<int>((index >> i) & 1u);
  return t;
}

struct Minimum {
  std::vector<int> bits;
  double value = 0.0;
};

/// Exhaustive search; ties within 1e-12 go to the smallest index sum t_i 2^i.
inline Minimum enumerate_minimum(const qtrack::Qubo& q) {
  const Dense d(q);
  Minimum best{bits_of_index(0, d.n), std::numeric_limits<double>::infinity()};
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << d.n); ++s) {
    auto t = bits_of_index(s, d.n);
    const double v = d.value(t);
    if (v < best.value - 1e-12) best = {std::move(t), v};
  }
  return best;
}

inline std::vector<int> to_ints(const qtrack::Assignment& a) {
  return {a.bits.begin(), a.bits.end()};
}

/// Random QUBO shaped like the triplet problem: a ~ U(-1, 1); each pair is a
/// chain (U(-1, -0.9)) with probability p_chain, a conflict (+1) with
/// probability p_conflict, otherwise absent.
inline qtrack::Qubo random_qubo(std::size_t n, std::mt19937_64& rng, double p_chain = 0.25,
                                double p_conflict = 0.25) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> a(n);
  for (auto& v : a) v = -1.0 + 2.0 * u(rng);
  std::vector<qtrack::Coupling> c;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = u(rng);
      if (r < p_chain) c.push_back({i, j, -1.0 + 0.1 * u(rng)});
      else if (r < p_chain + p_conflict) c.push_back({i, j, 1.0});
    }
  }
  return qtrack::Qubo(std::move(a), std::move(c));
}

/// Weighted straight-line fit x = p0 + p1 z by explicit normal equations;
/// returns chi2 with unit weights divided by sigma^2.
inline double line_chi2(const std::vector<double>& z, const std::vector<double>& x, double sigma) {
  double s00 = 0, s01 = 0, s11 = 0, r0 = 0, r1 = 0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    s00 += 1.0;
    s01 += z[k];
    s11 += z[k] * z[k];
    r0 += x[k];
    r1 += z[k] * x[k];
  }
  const double det = s00 * s11 - s01 * s01;
  const double p0 = (s11 * r0 - s01 * r1) / det;
  const double p1 = (s00 * r1 - s01 * r0) / det;
  double chi2 = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double r = x[k] - p0 - p1 * z[k];
    chi2 += r * r;
  }
  return chi2 / (sigma * sigma);
}

/// Per-layer geometric acceptance by noiseless ray tracing: the same particle
/// source as the generator, but every particle drawn afresh and tracked with
/// an exact rotation of its x-z direction at the magnet centre.
inline std::vector<double> ray_trace_acceptance(const qtrack::SimConfig& sim,
                                                const qtrack::DetectorGeometry& g, std::size_t samples,
                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit;
  std::gamma_distribution<double> gamma(sim.energy_spectrum.shape, sim.energy_spectrum.scale);
  const double kick = 0.2998 * g.dipole_field * g.dipole_length;
  std::vector<double> hits(4, 0.0);
  for (std::size_t s = 0; s < samples; ++s) {
    double e;
    do e = gamma(rng);
    while (e < sim.energy_spectrum.lo || e > sim.energy_spectrum.hi);
    const double ox = g.ip_position.x + sim.ip_smear.x * unit(rng);
    const double oy = g.ip_position.y + sim.ip_smear.y * unit(rng);
    const double oz = g.ip_position.z + sim.ip_smear.z * unit(rng);
    const double sx = std::tan(sim.emittance_angle_sigma * unit(rng));
    const double sy = std::tan(sim.emittance_angle_sigma * unit(rng));
    if (e <= kick) continue;
    const double phi = std::atan(sx) + std::asin(kick / e);
    const double xc = ox + sx * (g.dipole_center_z - oz);
    const double yc = oy + sy * (g.dipole_center_z - oz);
    const double tx = std::tan(phi);
    const double ty = sy / (std::sqrt(sx * sx + 1.0) * std::cos(phi));
    for (int l = 0; l < 4; ++l) {
      const double dz = g.layer_z[l] - g.dipole_center_z;
      const double x = xc + tx * dz;
      const double y = yc + ty * dz;
      if (std::abs(x - g.layer_center_x) <= g.layer_half_extent_x && std::abs(y) <= g.layer_half_extent_y) {
        hits[l] += 1.0;
      }
    }
  }
  for (auto& h : hits) h /= static_cast<double>(samples);
  return hits;
}

}  // namespace oracle
