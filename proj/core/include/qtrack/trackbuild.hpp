#pragma once

// Track candidates from selected triplets, straight-line fits, energy from
// the dipole bend, truth matching and shared-hit ambiguity resolution.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "qtrack/detector.hpp"
#include "qtrack/preselect.hpp"

namespace qtrack {

struct TrackCandidate {
  /// Hit indices into Event::hits, one per layer (index = layer).
  std::array<std::size_t, kNumLayers> hits{};
  /// Positions of the chained triplets in the list handed to triplets_to_candidates.
  std::pair<std::size_t, std::size_t> source_triplets{};

  friend bool operator==(const TrackCandidate&, const TrackCandidate&) = default;
};

struct TrackFit {
  double x0 = 0.0;  // intercept at z = 0
  double y0 = 0.0;
  double tx = 0.0;  // dx/dz
  double ty = 0.0;
  double chi2 = 0.0;
  int ndf = 2 * kNumLayers - 4;

  [[nodiscard]] double chi2_per_ndf() const { return chi2 / ndf; }
};

/// One candidate per pair of selected triplets chaining into four hits; a
/// 4-hit set is emitted once, from its first pair.
std::vector<TrackCandidate> triplets_to_candidates(std::span<const Triplet> selected);

/// Independent least-squares lines in x-z and y-z with every hit weighted by
/// the geometry's hit resolution.
TrackFit fit_track(const TrackCandidate& candidate, std::span<const Hit> hits,
                   const DetectorGeometry& geometry);

/// Inverts the thin-lens dipole: E = 0.2998 B L / |sin(atan(tx))|, assuming the
/// particle left the IP along z. Throws DomainError for an undeflected track.
double estimate_energy(const TrackFit& fit, const DetectorGeometry& geometry);

/// Particle owning at least 3 of the 4 hits.
std::optional<ParticleId> match_candidate(const TrackCandidate& candidate, std::span<const Hit> hits);

/// Same rule on bare truth labels (absent = noise).
std::optional<ParticleId> match_labels(std::span<const std::optional<ParticleId>> labels);

/// Shared-hit resolution. The live candidate with the most hits shared with
/// conflicting candidates (sharing two or more hits) is compared against each
/// of them in index order; the one with the worse chi2/ndf is dropped (ties
/// keep the lower index). Repeats until no surviving pair shares more than one
/// hit. Returns surviving indices in ascending order.
std::vector<std::size_t> resolve_ambiguities(std::span<const TrackCandidate> candidates,
                                             std::span<const TrackFit> fits);

/// Number of hits two candidates have in common.
int shared_hits(const TrackCandidate& a, const TrackCandidate& b);

}  // namespace qtrack
