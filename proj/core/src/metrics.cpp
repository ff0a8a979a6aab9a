#include "qtrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "qtrack/errors.hpp"
#include "qtrack/trackbuild.hpp"

namespace qtrack {

namespace {

/// Per-event lookup tables.
struct EventIndex {
  const Event* event = nullptr;
  std::unordered_map<HitId, const Hit*> hits;
  std::unordered_map<ParticleId, const TruthParticle*> particles;
  std::unordered_map<ParticleId, unsigned> layer_mask;
};

class TruthIndex {
 public:
  explicit TruthIndex(std::span<const Event> events) {
    for (const auto& e : events) {
      auto& idx = by_event_[e.event_id];
      if (idx.event) throw DataError("duplicate event id " + std::to_string(e.event_id));
      idx.event = &e;
      for (const auto& h : e.hits) {
        idx.hits[h.hit_id] = &h;
        if (h.truth_particle_id && h.layer >= 0 && h.layer < kNumLayers) {
          idx.layer_mask[*h.truth_particle_id] |= 1u << h.layer;
        }
      }
      for (const auto& p : e.particles) idx.particles[p.particle_id] = &p;
    }
  }

  const EventIndex& at(EventId id) const {
    auto it = by_event_.find(id);
    if (it == by_event_.end()) throw DataError("track references unknown event " + std::to_string(id));
    return it->second;
  }

  const std::unordered_map<EventId, EventIndex>& all() const { return by_event_; }

 private:
  std::unordered_map<EventId, EventIndex> by_event_;
};

constexpr unsigned kAllLayers = (1u << kNumLayers) - 1;

std::array<std::optional<ParticleId>, kNumLayers> labels_of(const RecoTrack& t, const EventIndex& idx) {
  std::array<std::optional<ParticleId>, kNumLayers> labels;
  for (int l = 0; l < kNumLayers; ++l) {
    auto it = idx.hits.find(t.hit_ids[l]);
    if (it == idx.hits.end()) {
      throw DataError("track " + std::to_string(t.track_id) + " in event " + std::to_string(t.event_id) +
                      " references unknown hit " + std::to_string(t.hit_ids[l]));
    }
    labels[l] = it->second->truth_particle_id;
  }
  return labels;
}

struct TrackTruth {
  std::optional<ParticleId> match;
  bool combinatorial = false;
  std::optional<double> true_energy;
};

TrackTruth truth_of(const RecoTrack& t, const EventIndex& idx) {
  const auto labels = labels_of(t, idx);
  TrackTruth tt;
  tt.match = match_labels(labels);
  if (tt.match) {
    auto p = idx.particles.find(*tt.match);
    if (p != idx.particles.end()) tt.true_energy = p->second->energy;
  } else {
    std::set<ParticleId> owners;
    bool noise = false;
    for (const auto& l : labels) {
      if (l) owners.insert(*l);
      else noise = true;
    }
    tt.combinatorial = !noise && owners.size() == kNumLayers;
  }
  return tt;
}

/// Key of a particle across events.
using ParticleKey = std::pair<EventId, ParticleId>;

struct Aggregate {
  Counts counts;
  std::vector<double> residuals;
};

Aggregate aggregate(const TruthIndex& truth, std::span<const RecoTrack> tracks,
                    const std::set<EventId>* only_events = nullptr) {
  Aggregate agg;
  std::map<ParticleKey, int> matches;
  for (const auto& t : tracks) {
    if (only_events && !only_events->contains(t.event_id)) continue;
    const auto& idx = truth.at(t.event_id);
    const auto tt = truth_of(t, idx);
    ++agg.counts.reconstructed;
    if (tt.match) {
      ++agg.counts.matched;
      ++matches[{t.event_id, *tt.match}];
      if (t.energy && tt.true_energy) agg.residuals.push_back((*t.energy - *tt.true_energy) / *tt.true_energy);
    } else {
      ++agg.counts.fake;
      if (tt.combinatorial) ++agg.counts.combinatorial_fake;
    }
  }
  for (const auto& [eid, idx] : truth.all()) {
    if (only_events && !only_events->contains(eid)) continue;
    for (const auto& p : idx.event->particles) {
      auto m = idx.layer_mask.find(p.particle_id);
      if (m == idx.layer_mask.end() || m->second != kAllLayers) continue;
      ++agg.counts.generated;
      auto it = matches.find({eid, p.particle_id});
      if (it != matches.end()) {
        ++agg.counts.matched_particles;
        if (it->second >= 2) ++agg.counts.duplicated_particles;
      }
    }
  }
  return agg;
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> rms(const std::vector<double>& v) {
  if (v.size() < 2) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

ScalarMetrics to_scalar(const Aggregate& agg) {
  ScalarMetrics m;
  m.counts = agg.counts;
  m.efficiency = ratio(agg.counts.matched_particles, agg.counts.generated);
  m.fake_rate = ratio(agg.counts.fake, agg.counts.reconstructed);
  m.duplication_rate = ratio(agg.counts.duplicated_particles, agg.counts.matched_particles);
  m.energy_resolution = rms(agg.residuals);
  return m;
}

}  // namespace

bool is_reconstructable(const Event& event, ParticleId id) {
  unsigned mask = 0;
  for (const auto& h : event.hits) {
    if (h.truth_particle_id == id && h.layer >= 0 && h.layer < kNumLayers) mask |= 1u << h.layer;
  }
  return mask == kAllLayers;
}

std::optional<ParticleId> match_track(const RecoTrack& track, const Event& event) {
  std::array<std::optional<ParticleId>, kNumLayers> labels;
  for (int l = 0; l < kNumLayers; ++l) {
    const Hit* h = event.find_hit(track.hit_ids[l]);
    if (!h) throw DataError("track references unknown hit " + std::to_string(track.hit_ids[l]));
    labels[l] = h->truth_particle_id;
  }
  return match_labels(labels);
}

std::vector<double> default_energy_bins() { return {0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 14.0}; }

std::optional<double> efficiency(std::span<const Event> events, std::span<const RecoTrack> tracks) {
  return scalar_metrics(events, tracks).efficiency;
}

std::optional<double> fake_rate(std::span<const Event> events, std::span<const RecoTrack> tracks) {
  return scalar_metrics(events, tracks).fake_rate;
}

std::optional<double> duplication_rate(std::span<const Event> events, std::span<const RecoTrack> tracks) {
  return scalar_metrics(events, tracks).duplication_rate;
}

std::optional<double> energy_resolution(std::span<const Event> events, std::span<const RecoTrack> tracks) {
  return scalar_metrics(events, tracks).energy_resolution;
}

ScalarMetrics scalar_metrics(std::span<const Event> events, std::span<const RecoTrack> tracks) {
  const TruthIndex truth(events);
  return to_scalar(aggregate(truth, tracks));
}

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z) {
  if (n == 0) return {0.0, 0.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  const double lo = std::max(0.0, centre - half);
  const double hi = std::min(1.0, centre + half);
  return {p - lo, hi - p};
}

namespace {

BinnedCurves curves_of(const TruthIndex& truth, std::span<const RecoTrack> tracks,
                       std::span<const double> edges, const std::set<EventId>* only_events = nullptr) {
  if (edges.size() < 2) throw ContractViolation("binned_curves: need at least two bin edges");
  for (std::size_t k = 1; k < edges.size(); ++k) {
    if (!(edges[k] > edges[k - 1])) throw ContractViolation("binned_curves: edges must be strictly increasing");
  }
  const std::size_t nb = edges.size() - 1;
  auto bin_of = [&](double x) -> std::optional<std::size_t> {
    if (x < edges.front() || x > edges.back()) return std::nullopt;
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    const auto b = static_cast<std::size_t>(it - edges.begin());
    return b == 0 ? 0 : std::min(b - 1, nb - 1);
  };

  std::vector<std::size_t> eff_pass(nb), eff_total(nb), fake_pass(nb), fake_total(nb);
  std::set<ParticleKey> matched;
  for (const auto& t : tracks) {
    if (only_events && !only_events->contains(t.event_id)) continue;
    const auto tt = truth_of(t, truth.at(t.event_id));
    if (tt.match) matched.insert({t.event_id, *tt.match});
    if (t.energy) {
      if (auto b = bin_of(*t.energy)) {
        ++fake_total[*b];
        if (!tt.match) ++fake_pass[*b];
      }
    }
  }
  for (const auto& [eid, idx] : truth.all()) {
    if (only_events && !only_events->contains(eid)) continue;
    for (const auto& p : idx.event->particles) {
      auto m = idx.layer_mask.find(p.particle_id);
      if (m == idx.layer_mask.end() || m->second != kAllLayers) continue;
      if (auto b = bin_of(p.energy)) {
        ++eff_total[*b];
        if (matched.contains({eid, p.particle_id})) ++eff_pass[*b];
      }
    }
  }

  auto make = [&](const std::vector<std::size_t>& pass, const std::vector<std::size_t>& total) {
    std::vector<BinnedValue> out(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      out[b].lo = edges[b];
      out[b].hi = edges[b + 1];
      out[b].passed = pass[b];
      out[b].total = total[b];
      if (total[b] > 0) {
        out[b].value = static_cast<double>(pass[b]) / static_cast<double>(total[b]);
        std::tie(out[b].err_lo, out[b].err_hi) = wilson_interval(pass[b], total[b]);
      }
    }
    return out;
  };
  return {make(eff_pass, eff_total), make(fake_pass, fake_total)};
}

SliceMetrics slice_of(const TruthIndex& truth, std::span<const RecoTrack> tracks,
                      std::span<const double> edges, const std::set<EventId>* only_events) {
  SliceMetrics m;
  m.scalars = to_scalar(aggregate(truth, tracks, only_events));
  auto curves = curves_of(truth, tracks, edges, only_events);
  m.efficiency_vs_energy = std::move(curves.efficiency);
  m.fake_rate_vs_energy = std::move(curves.fake_rate);
  return m;
}

}  // namespace

BinnedCurves binned_curves(std::span<const Event> events, std::span<const RecoTrack> tracks,
                           std::span<const double> edges) {
  const TruthIndex truth(events);
  return curves_of(truth, tracks, edges);
}

MetricsReport evaluate(std::span<const Event> events, std::span<const RecoTrack> tracks,
                       std::span<const double> edges) {
  const TruthIndex truth(events);
  MetricsReport report;
  report.overall = slice_of(truth, tracks, edges, nullptr);
  std::map<double, std::set<EventId>> by_xi;
  for (const auto& e : events) by_xi[e.xi_label].insert(e.event_id);
  for (const auto& [xi, ids] : by_xi) report.per_xi[xi] = slice_of(truth, tracks, edges, &ids);
  return report;
}

std::vector<std::string> check_report(const MetricsReport& report) {
  std::vector<std::string> out;
  auto in_unit = [&out](const std::optional<double>& v, const std::string& name) {
    if (v && !(*v >= 0.0 && *v <= 1.0)) out.push_back(name + " outside [0, 1]");
  };
  auto check = [&](const ScalarMetrics& m, const std::string& scope) {
    in_unit(m.efficiency, scope + "efficiency");
    in_unit(m.fake_rate, scope + "fake_rate");
    in_unit(m.duplication_rate, scope + "duplication_rate");
    const auto& c = m.counts;
    if (c.matched + c.fake != c.reconstructed) out.push_back(scope + "matched + fake != reconstructed");
    if (c.matched_particles > c.generated) out.push_back(scope + "more matched particles than generated");
    if (c.combinatorial_fake > c.fake) out.push_back(scope + "combinatorial fakes exceed fakes");
  };
  auto check_slice = [&](const SliceMetrics& m, const std::string& scope) {
    check(m.scalars, scope);
    for (const auto* curve : {&m.efficiency_vs_energy, &m.fake_rate_vs_energy}) {
      for (const auto& b : *curve) {
        in_unit(b.value, scope + "binned value");
        if (b.passed > b.total) out.push_back(scope + "bin passes exceed its total");
      }
    }
  };
  check_slice(report.overall, "");
  for (const auto& [xi, m] : report.per_xi) check_slice(m, "xi=" + std::to_string(xi) + ": ");
  return out;
}

}  // namespace qtrack
