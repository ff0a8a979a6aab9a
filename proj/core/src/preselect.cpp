#include "qtrack/preselect.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "qtrack/errors.hpp"

namespace qtrack {

void validate(const PreselectionWindow& window) {
  if (!(window.dx_sigma > 0.0)) throw ConfigError("preselect: dx_sigma must be positive");
  if (!(window.n_sigma > 0.0)) throw ConfigError("preselect: n_sigma must be positive");
  if (!(window.max_delta_theta > 0.0)) {
    throw ConfigError("preselect: max_delta_theta must be positive");
  }
}

std::optional<Doublet> make_doublet(std::span<const Hit> hits, std::size_t inner,
                                    std::size_t outer) {
  const Hit& a = hits[inner];
  const Hit& b = hits[outer];
  if (b.layer != a.layer + 1) {
    throw ContractViolation("make_doublet: hits are not on consecutive layers");
  }
  if (a.position.x == 0.0) return std::nullopt;
  const double dz = b.position.z - a.position.z;
  const double dx = b.position.x - a.position.x;
  const double dy = b.position.y - a.position.y;
  Doublet d;
  d.inner = inner;
  d.outer = outer;
  d.inner_layer = a.layer;
  d.theta_xz = std::atan(dx / dz);
  d.theta_yz = std::atan(dy / dz);
  d.dx_over_x0 = dx / a.position.x;
  return d;
}

std::vector<Doublet> truth_doublets(const Event& event) {
  std::vector<Doublet> out;
  const auto& hits = event.hits;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (!hits[i].truth_particle_id) continue;
    for (std::size_t j = 0; j < hits.size(); ++j) {
      if (hits[j].layer != hits[i].layer + 1) continue;
      if (hits[j].truth_particle_id != hits[i].truth_particle_id) continue;
      if (auto d = make_doublet(hits, i, j)) out.push_back(*d);
    }
  }
  return out;
}

DxCalibration calibrate_dx_window(std::span<const Doublet> truth) {
  if (truth.size() < 2) {
    throw ConfigError("calibrate_dx_window: need at least 2 truth doublets, got " +
                      std::to_string(truth.size()));
  }
  const double n = static_cast<double>(truth.size());
  double mean = 0.0;
  for (const auto& d : truth) mean += d.dx_over_x0;
  mean /= n;
  double ss = 0.0;
  for (const auto& d : truth) ss += (d.dx_over_x0 - mean) * (d.dx_over_x0 - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

PreselectionWindow window_from_calibration(const DxCalibration& cal,
                                           const PreselectionWindow& base) {
  PreselectionWindow w = base;
  w.dx_mean = cal.mean;
  w.dx_sigma = std::max(cal.sigma, kMinDxSigma);
  return w;
}

DoubletSet build_doublets(std::span<const Hit> hits, const PreselectionWindow& window) {
  validate(window);
  const double lo = window.dx_low();
  const double hi = window.dx_high();

  std::array<std::vector<std::size_t>, kNumLayers> by_layer;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (hits[i].layer >= 0 && hits[i].layer < kNumLayers) by_layer[hits[i].layer].push_back(i);
  }
  for (auto& layer : by_layer) {
    std::stable_sort(layer.begin(), layer.end(), [&](std::size_t a, std::size_t b) {
      return hits[a].position.x < hits[b].position.x;
    });
  }

  DoubletSet out;
  for (int l = 0; l + 1 < kNumLayers; ++l) {
    const auto& outer = by_layer[l + 1];
    for (std::size_t i : by_layer[l]) {
      const double x0 = hits[i].position.x;
      if (x0 == 0.0) {
        out.skipped_zero_x0 += outer.size();
        continue;
      }
      // Candidate x range on the outer layer, padded so rounding never hides
      // a pair the exact ratio test would keep.
      double xa = x0 * (1.0 + lo);
      double xb = x0 * (1.0 + hi);
      if (xa > xb) std::swap(xa, xb);
      const double pad = 1e-9 * (std::abs(xa) + std::abs(xb) + 1.0);
      auto first = std::lower_bound(outer.begin(), outer.end(), xa - pad,
                                    [&](std::size_t k, double v) { return hits[k].position.x < v; });
      for (auto it = first; it != outer.end() && hits[*it].position.x <= xb + pad; ++it) {
        auto d = make_doublet(hits, i, *it);
        if (d && d->dx_over_x0 >= lo && d->dx_over_x0 <= hi) out.doublets.push_back(*d);
      }
    }
  }
  std::sort(out.doublets.begin(), out.doublets.end(), [](const Doublet& a, const Doublet& b) {
    return std::tie(a.inner_layer, a.inner, a.outer) < std::tie(b.inner_layer, b.inner, b.outer);
  });
  return out;
}

double triplet_delta_theta(const Doublet& first, const Doublet& second) {
  if (first.outer != second.inner) {
    throw ContractViolation("triplet_delta_theta: doublets do not share the middle hit");
  }
  return std::hypot(second.theta_xz - first.theta_xz, second.theta_yz - first.theta_yz);
}

std::vector<Triplet> build_triplets(std::span<const Doublet> doublets,
                                    const PreselectionWindow& window) {
  validate(window);
  std::vector<Triplet> out;

  // Index doublets by their inner hit for the chaining lookup.
  std::vector<std::pair<std::size_t, std::size_t>> by_inner;  // (inner hit, doublet index)
  by_inner.reserve(doublets.size());
  for (std::size_t k = 0; k < doublets.size(); ++k) by_inner.emplace_back(doublets[k].inner, k);
  std::sort(by_inner.begin(), by_inner.end());

  for (const auto& d1 : doublets) {
    auto it = std::lower_bound(by_inner.begin(), by_inner.end(),
                               std::make_pair(d1.outer, std::size_t{0}));
    for (; it != by_inner.end() && it->first == d1.outer; ++it) {
      const Doublet& d2 = doublets[it->second];
      if (d2.inner_layer != d1.inner_layer + 1) continue;
      const double dtheta = triplet_delta_theta(d1, d2);
      if (dtheta <= window.max_delta_theta) out.push_back(Triplet{d1, d2, dtheta});
    }
  }
  return out;
}

std::optional<ParticleId> common_particle(std::span<const Hit> hits,
                                          std::span<const std::size_t> indices) {
  if (indices.empty()) return std::nullopt;
  const auto& first = hits[indices.front()].truth_particle_id;
  if (!first) return std::nullopt;
  for (std::size_t k : indices) {
    if (hits[k].truth_particle_id != first) return std::nullopt;
  }
  return first;
}

bool is_truth_doublet(std::span<const Hit> hits, const Doublet& d) {
  const std::array<std::size_t, 2> idx{d.inner, d.outer};
  return common_particle(hits, idx).has_value();
}

bool is_truth_triplet(std::span<const Hit> hits, const Triplet& t) {
  const auto idx = t.hits();
  return common_particle(hits, idx).has_value();
}

}  // namespace qtrack
