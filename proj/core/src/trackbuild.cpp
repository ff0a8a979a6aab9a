#include "qtrack/trackbuild.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "qtrack/errors.hpp"
#include "qtrack/fastsim.hpp"

namespace qtrack {

std::vector<TrackCandidate> triplets_to_candidates(std::span<const Triplet> selected) {
  // Chaining pairs share the middle doublet: index the (1,3)-span triplets by
  // their first doublet.
  std::multimap<std::pair<std::size_t, std::size_t>, std::size_t> by_first_doublet;
  for (std::size_t k = 0; k < selected.size(); ++k) {
    if (selected[k].first_layer() == 1) {
      by_first_doublet.emplace(std::make_pair(selected[k].first.inner, selected[k].first.outer), k);
    }
  }
  std::vector<TrackCandidate> out;
  std::set<std::array<std::size_t, kNumLayers>> seen;
  for (std::size_t k = 0; k < selected.size(); ++k) {
    const Triplet& lo = selected[k];
    if (lo.first_layer() != 0) continue;
    auto [first, last] = by_first_doublet.equal_range({lo.second.inner, lo.second.outer});
    for (auto it = first; it != last; ++it) {
      const Triplet& hi = selected[it->second];
      TrackCandidate c;
      c.hits = {lo.first.inner, lo.first.outer, lo.second.outer, hi.second.outer};
      c.source_triplets = {k, it->second};
      if (seen.insert(c.hits).second) out.push_back(c);
    }
  }
  return out;
}

TrackFit fit_track(const TrackCandidate& candidate, std::span<const Hit> hits,
                   const DetectorGeometry& geometry) {
  std::set<int> layers;
  for (auto h : candidate.hits) layers.insert(hits[h].layer);
  if (layers.size() != kNumLayers) throw ContractViolation("fit_track: hits must sit on 4 distinct layers");

  // Equal weights, so the normal equations reduce to centred sums.
  double sz = 0, sx = 0, sy = 0;
  for (auto h : candidate.hits) {
    sz += hits[h].position.z;
    sx += hits[h].position.x;
    sy += hits[h].position.y;
  }
  const double n = kNumLayers;
  const double zm = sz / n, xm = sx / n, ym = sy / n;
  double szz = 0, szx = 0, szy = 0;
  for (auto h : candidate.hits) {
    const double dz = hits[h].position.z - zm;
    szz += dz * dz;
    szx += dz * (hits[h].position.x - xm);
    szy += dz * (hits[h].position.y - ym);
  }
  if (!(szz > 0.0)) throw ContractViolation("fit_track: degenerate z positions");

  TrackFit fit;
  fit.tx = szx / szz;
  fit.ty = szy / szz;
  fit.x0 = xm - fit.tx * zm;
  fit.y0 = ym - fit.ty * zm;
  const double inv_var = 1.0 / (geometry.hit_resolution * geometry.hit_resolution);
  for (auto h : candidate.hits) {
    const auto& p = hits[h].position;
    const double rx = p.x - (xm + fit.tx * (p.z - zm));
    const double ry = p.y - (ym + fit.ty * (p.z - zm));
    fit.chi2 += (rx * rx + ry * ry) * inv_var;
  }
  return fit;
}

double estimate_energy(const TrackFit& fit, const DetectorGeometry& geometry) {
  const double s = std::abs(std::sin(std::atan(fit.tx)));
  if (s < 1e-9) throw DomainError("estimate_energy: undeflected track (tx = " + std::to_string(fit.tx) + ")");
  return kMomentumPerTeslaMetre * geometry.dipole_field * geometry.dipole_length / s;
}

std::optional<ParticleId> match_labels(std::span<const std::optional<ParticleId>> labels) {
  std::map<ParticleId, int> votes;
  for (const auto& l : labels) {
    if (l) ++votes[*l];
  }
  for (const auto& [id, n] : votes) {
    if (n >= 3) return id;
  }
  return std::nullopt;
}

std::optional<ParticleId> match_candidate(const TrackCandidate& candidate, std::span<const Hit> hits) {
  std::array<std::optional<ParticleId>, kNumLayers> labels;
  for (int l = 0; l < kNumLayers; ++l) labels[l] = hits[candidate.hits[l]].truth_particle_id;
  return match_labels(labels);
}

int shared_hits(const TrackCandidate& a, const TrackCandidate& b) {
  int n = 0;
  for (auto x : a.hits) {
    for (auto y : b.hits) n += (x == y);
  }
  return n;
}

std::vector<std::size_t> resolve_ambiguities(std::span<const TrackCandidate> candidates,
                                             std::span<const TrackFit> fits) {
  if (candidates.size() != fits.size()) throw ContractViolation("resolve_ambiguities: size mismatch");
  const std::size_t n = candidates.size();

  // Conflict graph: pairs sharing at least two hits.
  std::map<std::size_t, std::vector<std::size_t>> hit_users;
  for (std::size_t c = 0; c < n; ++c) {
    for (auto h : candidates[c].hits) hit_users[h].push_back(c);
  }
  std::vector<std::set<std::size_t>> conflicts(n);
  for (const auto& [hit, users] : hit_users) {
    for (std::size_t p = 0; p < users.size(); ++p) {
      for (std::size_t q = p + 1; q < users.size(); ++q) {
        const auto a = users[p], b = users[q];
        if (!conflicts[a].contains(b) && shared_hits(candidates[a], candidates[b]) >= 2) {
          conflicts[a].insert(b);
          conflicts[b].insert(a);
        }
      }
    }
  }

  std::vector<bool> alive(n, true);
  auto shared_count = [&](std::size_t c) {
    std::set<std::size_t> shared;
    for (auto other : conflicts[c]) {
      for (auto h : candidates[c].hits) {
        for (auto g : candidates[other].hits) {
          if (h == g) shared.insert(h);
        }
      }
    }
    return shared.size();
  };
  auto worse = [&](std::size_t a, std::size_t b) {  // is a worse than b?
    const double qa = fits[a].chi2_per_ndf(), qb = fits[b].chi2_per_ndf();
    return qa > qb || (qa == qb && a > b);
  };
  auto kill = [&](std::size_t c) {
    alive[c] = false;
    for (auto other : conflicts[c]) conflicts[other].erase(c);
    conflicts[c].clear();
  };

  for (;;) {
    std::size_t pick = n;
    std::size_t most = 0;
    for (std::size_t c = 0; c < n; ++c) {
      if (!alive[c] || conflicts[c].empty()) continue;
      const auto s = shared_count(c);
      if (s > most) {
        most = s;
        pick = c;
      }
    }
    if (pick == n) break;
    const std::vector<std::size_t> rivals(conflicts[pick].begin(), conflicts[pick].end());
    for (auto r : rivals) {
      if (worse(pick, r)) {
        kill(pick);
        break;
      }
      kill(r);
    }
  }

  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < n; ++c) {
    if (alive[c]) out.push_back(c);
  }
  return out;
}

}  // namespace qtrack
