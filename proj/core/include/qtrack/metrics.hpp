#pragma once

// Tracking performance against truth: efficiency, fake rate, duplication
// rate, energy resolution and energy-binned curves.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qtrack/detector.hpp"

namespace qtrack {

/// A final track as stored in the tracks file.
struct RecoTrack {
  EventId event_id = 0;
  std::int64_t track_id = 0;
  std::array<HitId, kNumLayers> hit_ids{};
  double chi2 = 0.0;
  int ndf = 4;
  std::optional<double> energy;
  std::optional<ParticleId> matched_particle_id;

  friend bool operator==(const RecoTrack&, const RecoTrack&) = default;
};

/// A particle is reconstructable when it left a hit on every layer.
bool is_reconstructable(const Event& event, ParticleId id);

/// Truth match of a stored track by the 3-of-4 rule, looked up in its event.
std::optional<ParticleId> match_track(const RecoTrack& track, const Event& event);

struct Counts {
  std::size_t generated = 0;          // reconstructable particles
  std::size_t matched_particles = 0;  // reconstructable particles with >= 1 matching track
  std::size_t duplicated_particles = 0;
  std::size_t reconstructed = 0;      // final tracks
  std::size_t matched = 0;            // matched tracks (duplicates included)
  std::size_t fake = 0;
  std::size_t combinatorial_fake = 0; // fakes with four distinct truth owners

  friend bool operator==(const Counts&, const Counts&) = default;
};

struct BinnedValue {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t passed = 0;
  std::size_t total = 0;
  /// Absent for an empty bin.
  std::optional<double> value;
  double err_lo = 0.0;
  double err_hi = 0.0;

  friend bool operator==(const BinnedValue&, const BinnedValue&) = default;
};

struct ScalarMetrics {
  std::optional<double> efficiency;
  std::optional<double> fake_rate;
  std::optional<double> duplication_rate;
  std::optional<double> energy_resolution;
  Counts counts;

  friend bool operator==(const ScalarMetrics&, const ScalarMetrics&) = default;
};

/// Scalars and curves of one slice of the data (all events, or one xi label).
struct SliceMetrics {
  ScalarMetrics scalars;
  /// Efficiency binned in true energy.
  std::vector<BinnedValue> efficiency_vs_energy;
  /// Fake rate binned in measured track energy.
  std::vector<BinnedValue> fake_rate_vs_energy;

  friend bool operator==(const SliceMetrics&, const SliceMetrics&) = default;
};

struct MetricsReport {
  SliceMetrics overall;
  std::map<double, SliceMetrics> per_xi;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

std::vector<double> default_energy_bins();

/// Matched reconstructable particles / reconstructable particles; absent when
/// nothing is reconstructable.
std::optional<double> efficiency(std::span<const Event> events, std::span<const RecoTrack> tracks);
/// Unmatched tracks / all tracks; absent without tracks.
std::optional<double> fake_rate(std::span<const Event> events, std::span<const RecoTrack> tracks);
/// Particles matched by two or more tracks / matched particles.
std::optional<double> duplication_rate(std::span<const Event> events, std::span<const RecoTrack> tracks);
/// RMS of (E_reco - E_true) / E_true over matched tracks; absent below two.
std::optional<double> energy_resolution(std::span<const Event> events, std::span<const RecoTrack> tracks);

ScalarMetrics scalar_metrics(std::span<const Event> events, std::span<const RecoTrack> tracks);

/// Wilson score interval (z = 1) as distances below/above k/n.
std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = 1.0);

struct BinnedCurves {
  std::vector<BinnedValue> efficiency;
  std::vector<BinnedValue> fake_rate;
};

/// Throws ContractViolation unless edges are strictly increasing.
BinnedCurves binned_curves(std::span<const Event> events, std::span<const RecoTrack> tracks,
                           std::span<const double> edges);

MetricsReport evaluate(std::span<const Event> events, std::span<const RecoTrack> tracks,
                       std::span<const double> edges);

/// Invariant violations (rates outside [0, 1], inconsistent counts).
std::vector<std::string> check_report(const MetricsReport& report);

}  // namespace qtrack
