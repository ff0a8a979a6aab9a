#pragma once

// Triplet-selection QUBO
//
//   O(T) = sum_{i} sum_{j<i} b_ij T_i T_j + sum_i a_i T_i,   T_i in {0, 1}
//
// a_i rates a single triplet by its kink angle (-1 best, +1 worst); b_ij is
// negative for triplet pairs that chain into a 4-hit candidate, +1 for pairs
// competing for a hit, 0 otherwise.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qtrack/detector.hpp"
#include "qtrack/preselect.hpp"

namespace qtrack {

struct Coupling {
  std::size_t i = 0;
  std::size_t j = 0;
  double value = 0.0;

  friend bool operator==(const Coupling&, const Coupling&) = default;
};

/// Binary quadratic objective with sparse symmetric couplings stored once (i < j).
class Qubo {
 public:
  Qubo() = default;
  /// Couplings may be given in any order with i != j; they are normalised to
  /// i < j and sorted. Zero entries are dropped. Duplicate pairs throw.
  Qubo(std::vector<double> linear, std::vector<Coupling> couplings);

  [[nodiscard]] std::size_t size() const { return linear_.size(); }
  [[nodiscard]] std::span<const double> linear() const { return linear_; }
  [[nodiscard]] std::span<const Coupling> couplings() const { return couplings_; }

  /// Neighbours of variable i as (j, b_ij).
  [[nodiscard]] std::span<const std::pair<std::size_t, double>> neighbours(std::size_t i) const {
    return adjacency_[i];
  }
  /// b_ij, zero when absent; symmetric in (i, j).
  [[nodiscard]] double coupling(std::size_t i, std::size_t j) const;

  /// Triplet index per variable (empty for synthetic problems).
  std::vector<std::size_t> triplet_refs;

  friend bool operator==(const Qubo& a, const Qubo& b) {
    return a.linear_ == b.linear_ && a.couplings_ == b.couplings_;
  }

 private:
  std::vector<double> linear_;
  std::vector<Coupling> couplings_;
  std::vector<std::vector<std::pair<std::size_t, double>>> adjacency_;
};

struct Assignment {
  std::vector<std::uint8_t> bits;

  Assignment() = default;
  explicit Assignment(std::size_t n, std::uint8_t value = 0) : bits(n, value) {}
  explicit Assignment(std::vector<std::uint8_t> b) : bits(std::move(b)) {}
  /// Parses "0110" with variable 0 leftmost.
  static Assignment from_string(const std::string& s);

  [[nodiscard]] std::size_t size() const { return bits.size(); }
  [[nodiscard]] std::string to_string() const;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Diagonal spin Hamiltonian H = c + sum h_i Z_i + sum J_ij Z_i Z_j.
struct IsingHamiltonian {
  double constant = 0.0;
  std::vector<double> field;
  std::vector<Coupling> coupling;

  [[nodiscard]] std::size_t size() const { return field.size(); }
  /// Energy for Z eigenvalues z_i = +1 / -1.
  [[nodiscard]] double energy_spins(std::span<const int> spins) const;
  /// Energy of a computational basis state; bit k of `basis` is qubit k, and
  /// a measured 0 means Z = +1.
  [[nodiscard]] double energy_basis(std::uint64_t basis) const;
};

struct QuboScaling {
  /// Kink angle mapped to a_i = +1.
  double theta_scale = 1e-3;
  /// Angle spread mapped to b_ij = -0.9.
  double spread_max = 1e-3;
};

/// clamp(2 delta_theta / theta_scale - 1, -1, 1).
double linear_coefficient(const Triplet& t, double theta_scale);

/// True when the two triplets chain into one 4-hit candidate (in either order).
bool triplets_chain(const Triplet& a, const Triplet& b);
/// True when the triplets share at least one hit.
bool triplets_connected(const Triplet& a, const Triplet& b);

/// Root-sum-square of the population standard deviations of theta_xz and
/// theta_yz over the three distinct doublets of a chained pair.
double chain_angle_spread(const Triplet& a, const Triplet& b);

/// -1 + 0.1 clamp(s / spread_max, 0, 1) for chained pairs, +1 for conflicts, 0 otherwise.
double quadratic_coefficient(const Triplet& a, const Triplet& b, const QuboScaling& scaling);

/// One variable per triplet. Throws ContractViolation for an empty list.
Qubo assemble_qubo(std::span<const Triplet> triplets, const QuboScaling& scaling = {});

/// Chained angle spreads of every truth-matched chained pair (both triplets
/// from the same particle).
std::vector<double> truth_chain_spreads(std::span<const Triplet> triplets, std::span<const Hit> hits);

/// Linearly interpolated sample quantile; throws ContractViolation on empty input.
double sample_quantile(std::vector<double> values, double q);

/// 99th percentile of the chained angle spread over truth-matched chained
/// pairs; nullopt when there are none.
std::optional<double> calibrate_spread_scale(std::span<const Triplet> triplets,
                                             std::span<const Hit> hits,
                                             double quantile = 0.99);

/// Objective value. Throws ContractViolation on length mismatch.
double objective(const Qubo& qubo, const Assignment& assignment);

/// Substitutes T_i = (1 + Z_i) / 2.
IsingHamiltonian to_ising(const Qubo& qubo);

/// objective(with bit i flipped) - objective(current).
double impact(const Qubo& qubo, const Assignment& assignment, std::size_t i);

/// Text dump: "n", then "i a_i" per variable, then "i j b_ij" for nonzero couplings.
void write_qubo(std::ostream& os, const Qubo& qubo);
Qubo read_qubo(std::istream& is);

/// Structural check of the coefficient ranges produced by assemble_qubo.
std::vector<std::string> check_coefficient_ranges(const Qubo& qubo);

}  // namespace qtrack
