#pragma once

// File formats: events/hits/particles/tracks CSV, solve and metrics reports
// as JSON, curve and counts tables as CSV.
//
// Every CSV starts with one "# config_hash=...,seed=..." provenance line
// followed by the column header. Event data (events, hits, particles) carry 9
// significant digits; tracks and curves carry 17 so they round-trip exactly.
// Readers skip "#" lines and raise DataError naming the source and line on
// malformed rows.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qtrack/detector.hpp"
#include "qtrack/metrics.hpp"
#include "qtrack/pipeline.hpp"

namespace qtrack {

/// Provenance stamped into every artifact.
struct Stamp {
  std::string config_hash;
  std::uint64_t seed = 0;
};

void write_events_csv(std::ostream& out, std::span<const Event> events, const Stamp& stamp);
void write_hits_csv(std::ostream& out, std::span<const Event> events, const Stamp& stamp);
void write_particles_csv(std::ostream& out, std::span<const Event> events, const Stamp& stamp);
void write_tracks_csv(std::ostream& out, std::span<const RecoTrack> tracks, const Stamp& stamp);

/// Joins the three tables. Events are returned in event-id order, hits and
/// particles in file order. `*_name` labels error messages.
std::vector<Event> read_events(std::istream& events_csv, const std::string& events_name,
                               std::istream& hits_csv, const std::string& hits_name,
                               std::istream& particles_csv, const std::string& particles_name);

std::vector<RecoTrack> read_tracks(std::istream& in, const std::string& name);

/// Paths of the standard files inside a data directory.
struct DataFiles {
  std::filesystem::path events;
  std::filesystem::path hits;
  std::filesystem::path particles;

  static DataFiles in(const std::filesystem::path& dir);
};

std::vector<Event> load_events(const DataFiles& files);
std::vector<RecoTrack> load_tracks(const std::filesystem::path& path);

/// Writes `text` to `path`; throws DataError with the path on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// Per-event solve summaries plus run-level settings and calibration.
std::string solve_report_json(std::span<const EventReconstruction> events, const Calibration& calibration,
                              const SolverConfig& solver, const Stamp& stamp);

std::string metrics_report_json(const MetricsReport& report, const Stamp& stamp);
MetricsReport parse_metrics_report(const std::string& json_text, const std::string& name);

/// Columns bin_lo,bin_hi,value,err_lo,err_hi; an empty bin has an empty value.
void write_curve_csv(std::ostream& out, std::span<const BinnedValue> bins, const Stamp& stamp);

/// Pre-selection debug dump, one row per doublet and triplet:
/// event_id,id,kind,layer,dx_over_x0,theta_xz,theta_yz,delta_theta,truth_matched.
void write_features_csv(std::ostream& out, const Event& event, const EventProblem& problem, bool header,
                        const Stamp& stamp);

void write_counts_csv(std::ostream& out, const std::map<std::string, std::size_t>& counts,
                      const Stamp& stamp);
std::map<std::string, std::size_t> read_counts_csv(std::istream& in, const std::string& name);

/// Long-format rows `metric,xi_label,bin,value,err_lo,err_hi`: four scalar
/// metrics and both curves for the overall slice (xi_label "all") and each xi
/// label, then one vqe_counts row per bitstring when counts are given.
void write_plotdata_csv(std::ostream& out, std::span<const MetricsReport> reports,
                        const std::map<std::string, std::size_t>* counts);

}  // namespace qtrack
