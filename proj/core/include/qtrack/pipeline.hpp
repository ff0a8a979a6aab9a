#pragma once

// Per-event reconstruction: pre-selection -> QUBO -> solver -> track building.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qtrack/detector.hpp"
#include "qtrack/metrics.hpp"
#include "qtrack/preselect.hpp"
#include "qtrack/qubo.hpp"
#include "qtrack/solve.hpp"
#include "qtrack/trackbuild.hpp"
#include "qtrack/vqe.hpp"

namespace qtrack {

enum class SolverKind { Exact, Anneal, Vqe };

SolverKind parse_solver(const std::string& name);  // throws ConfigError
std::string to_string(SolverKind kind);

struct SolverConfig {
  SolverKind kind = SolverKind::Exact;
  IterativeOptions iterative{};
  AnnealSchedule anneal{};
  VqeConfig vqe{};
};

struct ReconstructionConfig {
  PreselectionWindow window{};
  QuboScaling scaling{};
  SolverConfig solver{};
  /// Re-derive the dx/x0 window and the b_ij spread scale from truth-labelled
  /// hits before reconstructing (when enough truth is present).
  bool calibrate_from_truth = true;
  std::uint64_t seed = 1;
};

struct Calibration {
  PreselectionWindow window;
  QuboScaling scaling;
  std::size_t truth_doublets = 0;
  std::size_t truth_chains = 0;
};

/// Dataset-level calibration over truth doublets and truth chained triplets.
/// Falls back to the configured values where truth is insufficient.
Calibration calibrate(std::span<const Event> events, const ReconstructionConfig& config);

struct EventReconstruction {
  EventId event_id = 0;
  std::size_t n_doublets = 0;
  std::size_t n_triplets = 0;
  std::size_t n_selected = 0;  // triplets chosen by the solver
  std::size_t skipped_zero_x0 = 0;
  std::optional<SolveReport> solve;
  std::vector<RecoTrack> tracks;
};

SubSolver make_subsolver(const SolverConfig& solver);

/// Reconstruct one event with an already calibrated window and scaling.
EventReconstruction reconstruct_event(const Event& event, const DetectorGeometry& geometry,
                                      const PreselectionWindow& window, const QuboScaling& scaling,
                                      const SolverConfig& solver, std::uint64_t seed);

/// Event-parallel driver; output order follows the input order and does not
/// depend on `jobs`.
std::vector<EventReconstruction> reconstruct_events(std::span<const Event> events,
                                                    const DetectorGeometry& geometry,
                                                    const Calibration& calibration,
                                                    const SolverConfig& solver, std::uint64_t seed,
                                                    unsigned jobs);

/// Intermediate products of one event, for inspection and tests.
struct EventProblem {
  std::vector<Doublet> doublets;
  std::vector<Triplet> triplets;
  std::optional<Qubo> qubo;
};

EventProblem build_problem(const Event& event, const PreselectionWindow& window,
                           const QuboScaling& scaling);

/// Final tracks from a solved assignment: candidates, fits, energies,
/// ambiguity resolution, truth match.
std::vector<RecoTrack> build_tracks(const Event& event, const DetectorGeometry& geometry,
                                    std::span<const Triplet> triplets, const Assignment& selection);

/// Counts histogram of the VQE run on the first sub-QUBO of the first
/// iteration, reproducing the seed solve_iterative would use.
VqeResult first_subqubo_vqe(const Qubo& qubo, const SolverConfig& solver, std::uint64_t seed);

/// Seed used for an event's solve.
std::uint64_t event_solver_seed(std::uint64_t run_seed, EventId event_id);

}  // namespace qtrack
