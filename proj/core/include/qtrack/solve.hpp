#pragma once

// QUBO minimisation: exhaustive enumeration, simulated annealing, and the
// iterative impact-ordered sub-QUBO scheme that drives any of them on
// problems too large to solve in one piece.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qtrack/qubo.hpp"

namespace qtrack {

inline constexpr std::size_t kMaxExactSize = 24;

/// Global minimum by enumeration. Among states tied within 1e-12 the one with
/// the smallest index sum_i bit_i 2^i wins (so the all-zero state wins a full
/// tie, and "10" beats "01"). Throws SizeError for n > 24.
Assignment solve_exact(const Qubo& qubo);

struct AnnealSchedule {
  double t_initial = 2.0;
  double t_final = 0.02;
  int sweeps = 1000;
};

/// Single-flip Metropolis with geometric cooling from a random start; returns
/// the best state visited. Deterministic for a given seed.
Assignment solve_annealing(const Qubo& qubo, const AnnealSchedule& schedule, std::uint64_t seed);

/// Restriction of a QUBO to a subset of variables with the rest frozen.
struct SubQubo {
  std::vector<std::size_t> indices;
  /// a_i + sum over outside j of b_ij T_j, at extraction time.
  std::vector<double> linear_effective;
  /// Couplings inside the subset, in local indices.
  std::vector<Coupling> quadratic;

  [[nodiscard]] Qubo to_qubo() const { return Qubo(linear_effective, quadratic); }
};

enum class Grouping {
  /// Consecutive chunks of the |impact| ordering.
  ImpactOrder,
  /// Each group is seeded with the highest-|impact| free variable and grown
  /// through couplings, taking neighbours in |impact| order. Once no coupled
  /// free variable is left, the group is topped up in |impact| order with
  /// whole free components that fit, and closed early when none does.
  ImpactConnected,
};

/// Variables ordered by descending |impact| (ties by index), split into
/// groups of at most k.
std::vector<SubQubo> extract_subqubos(const Qubo& qubo, const Assignment& assignment,
                                      std::size_t k, Grouping grouping = Grouping::ImpactConnected);

/// Sub-problem solver. Returns nullopt on failure. The seed is derived from
/// the run seed, the iteration and the group index.
using SubSolver = std::function<std::optional<Assignment>(const Qubo&, std::uint64_t seed)>;

SubSolver exact_subsolver();
SubSolver annealing_subsolver(AnnealSchedule schedule = {});

enum class UpdateMode {
  /// Boundary terms frozen for the whole iteration, sub-problems independent.
  Jacobi,
  /// Boundary terms refreshed after each accepted sub-solution.
  GaussSeidel,
};

struct IterativeOptions {
  std::size_t subqubo_size = 7;
  int max_iterations = 10;
  Grouping grouping = Grouping::ImpactConnected;
  UpdateMode update = UpdateMode::Jacobi;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

struct SolveReport {
  Assignment best_assignment;
  double best_objective = 0.0;
  int iterations_run = 0;
  std::size_t subqubo_count = 0;
  /// Objective of the all-ones start followed by one entry per iteration.
  std::vector<double> objective_trace;
  bool warning = false;
  std::string message;
};

/// Starts from all ones and repeatedly solves the sub-QUBOs, keeping a merged
/// solution only when it does not raise the global objective. Stops after
/// max_iterations or at the first iteration that changes nothing.
SolveReport solve_iterative(const Qubo& qubo, const SubSolver& subsolver,
                            const IterativeOptions& options = {});

/// Deterministic 64-bit mix for deriving sub-seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace qtrack
