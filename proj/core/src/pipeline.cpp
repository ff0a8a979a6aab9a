#include "qtrack/pipeline.hpp"

#include <algorithm>

#include "qtrack/errors.hpp"
#include "qtrack/parallel.hpp"

namespace qtrack {

SolverKind parse_solver(const std::string& name) {
  if (name == "exact") return SolverKind::Exact;
  if (name == "anneal") return SolverKind::Anneal;
  if (name == "vqe") return SolverKind::Vqe;
  throw ConfigError("unknown solver '" + name + "' (expected exact, anneal or vqe)");
}

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::Exact: return "exact";
    case SolverKind::Anneal: return "anneal";
    case SolverKind::Vqe: return "vqe";
  }
  return "exact";
}

Calibration calibrate(std::span<const Event> events, const ReconstructionConfig& config) {
  Calibration cal{config.window, config.scaling, 0, 0};
  if (!config.calibrate_from_truth) return cal;

  std::vector<Doublet> truth;
  for (const auto& e : events) {
    auto d = truth_doublets(e);
    truth.insert(truth.end(), d.begin(), d.end());
  }
  cal.truth_doublets = truth.size();
  if (truth.size() >= 2) cal.window = window_from_calibration(calibrate_dx_window(truth), config.window);

  std::vector<double> spreads;
  for (const auto& e : events) {
    const auto doublets = build_doublets(e.hits, cal.window).doublets;
    const auto triplets = build_triplets(doublets, cal.window);
    auto s = truth_chain_spreads(triplets, e.hits);
    spreads.insert(spreads.end(), s.begin(), s.end());
  }
  cal.truth_chains = spreads.size();
  if (!spreads.empty()) {
    const double q = sample_quantile(std::move(spreads), 0.99);
    if (q > 0.0) cal.scaling.spread_max = q;
  }
  return cal;
}

SubSolver make_subsolver(const SolverConfig& solver) {
  switch (solver.kind) {
    case SolverKind::Exact: return exact_subsolver();
    case SolverKind::Anneal: return annealing_subsolver(solver.anneal);
    case SolverKind::Vqe: return vqe_subsolver(solver.vqe);
  }
  return exact_subsolver();
}

EventProblem build_problem(const Event& event, const PreselectionWindow& window,
                           const QuboScaling& scaling) {
  EventProblem p;
  p.doublets = build_doublets(event.hits, window).doublets;
  p.triplets = build_triplets(p.doublets, window);
  if (!p.triplets.empty()) p.qubo = assemble_qubo(p.triplets, scaling);
  return p;
}

std::vector<RecoTrack> build_tracks(const Event& event, const DetectorGeometry& geometry,
                                    std::span<const Triplet> triplets, const Assignment& selection) {
  if (selection.size() != triplets.size()) throw ContractViolation("build_tracks: selection size mismatch");
  std::vector<Triplet> chosen;
  for (std::size_t t = 0; t < triplets.size(); ++t) {
    if (selection.bits[t]) chosen.push_back(triplets[t]);
  }
  const auto candidates = triplets_to_candidates(chosen);
  std::vector<TrackFit> fits;
  fits.reserve(candidates.size());
  for (const auto& c : candidates) fits.push_back(fit_track(c, event.hits, geometry));
  const auto keep = resolve_ambiguities(candidates, fits);

  std::vector<RecoTrack> out;
  out.reserve(keep.size());
  for (auto k : keep) {
    RecoTrack t;
    t.event_id = event.event_id;
    t.track_id = static_cast<std::int64_t>(out.size());
    for (int l = 0; l < kNumLayers; ++l) t.hit_ids[l] = event.hits[candidates[k].hits[l]].hit_id;
    t.chi2 = fits[k].chi2;
    t.ndf = fits[k].ndf;
    try {
      t.energy = estimate_energy(fits[k], geometry);
    } catch (const DomainError&) {
      t.energy.reset();
    }
    t.matched_particle_id = match_candidate(candidates[k], event.hits);
    out.push_back(t);
  }
  return out;
}

std::uint64_t event_solver_seed(std::uint64_t run_seed, EventId event_id) {
  return mix_seed(run_seed, static_cast<std::uint64_t>(event_id));
}

EventReconstruction reconstruct_event(const Event& event, const DetectorGeometry& geometry,
                                      const PreselectionWindow& window, const QuboScaling& scaling,
                                      const SolverConfig& solver, std::uint64_t seed) {
  EventReconstruction r;
  r.event_id = event.event_id;
  const auto set = build_doublets(event.hits, window);
  r.n_doublets = set.doublets.size();
  r.skipped_zero_x0 = set.skipped_zero_x0;
  const auto triplets = build_triplets(set.doublets, window);
  r.n_triplets = triplets.size();
  if (triplets.empty()) return r;

  const Qubo qubo = assemble_qubo(triplets, scaling);
  IterativeOptions options = solver.iterative;
  options.seed = event_solver_seed(seed, event.event_id);
  r.solve = solve_iterative(qubo, make_subsolver(solver), options);

  std::size_t selected = 0;
  for (auto b : r.solve->best_assignment.bits) selected += b;
  r.tracks = build_tracks(event, geometry, triplets, r.solve->best_assignment);
  r.n_selected = selected;
  return r;
}

std::vector<EventReconstruction> reconstruct_events(std::span<const Event> events,
                                                    const DetectorGeometry& geometry,
                                                    const Calibration& calibration,
                                                    const SolverConfig& solver, std::uint64_t seed,
                                                    unsigned jobs) {
  std::vector<EventReconstruction> out(events.size());
  SolverConfig inner = solver;
  inner.iterative.jobs = 1;
  parallel_for(events.size(), jobs, [&](std::size_t k) {
    out[k] = reconstruct_event(events[k], geometry, calibration.window, calibration.scaling, inner, seed);
  });
  return out;
}

VqeResult first_subqubo_vqe(const Qubo& qubo, const SolverConfig& solver, std::uint64_t seed) {
  const Assignment start(qubo.size(), 1);
  const auto subs = extract_subqubos(qubo, start, solver.iterative.subqubo_size, solver.iterative.grouping);
  if (subs.empty()) throw ContractViolation("first_subqubo_vqe: empty QUBO");
  VqeConfig cfg = solver.vqe;
  cfg.seed = mix_seed(mix_seed(seed, 0), 0);
  return run_vqe(to_ising(subs.front().to_qubo()), cfg);
}

}  // namespace qtrack
