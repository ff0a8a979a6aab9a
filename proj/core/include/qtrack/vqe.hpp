#pragma once

// Statevector simulation of the hardware-efficient ansatz
//
//   |0...0> -> R_Y(theta_0..theta_{n-1}) -> CNOT(0,1) CNOT(1,2) ... -> R_Y(theta_n..theta_{2n-1})
//
// and a VQE loop driven by the Nakanishi-Fujii-Todo sequential optimiser.
// Qubit q is bit q of the basis index; R_Y(t) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]].

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qtrack/qubo.hpp"
#include "qtrack/solve.hpp"

namespace qtrack {

inline constexpr std::size_t kMaxQubits = 20;

class Statevector {
 public:
  /// |0...0> on n qubits. Throws SizeError for n > kMaxQubits.
  explicit Statevector(std::size_t n);

  [[nodiscard]] std::size_t qubits() const { return n_; }
  [[nodiscard]] std::span<const std::complex<double>> amplitudes() const { return amps_; }
  [[nodiscard]] double norm_squared() const;
  [[nodiscard]] std::vector<double> probabilities() const;

  void apply_ry(std::size_t qubit, double theta);
  void apply_cnot(std::size_t control, std::size_t target);

 private:
  std::size_t n_;
  std::vector<std::complex<double>> amps_;
};

/// 2n rotation angles: the first R_Y layer, then the second.
struct AnsatzParams {
  std::vector<double> thetas;
};

Statevector prepare_state(const AnsatzParams& params, std::size_t n);

/// Diagonal of the Hamiltonian over all 2^n basis states.
std::vector<double> basis_energies(const IsingHamiltonian& ising);

/// shots == 0: exact sum_z |psi(z)|^2 E(z). Otherwise the sample mean over
/// `shots` measured basis states.
double energy_expectation(const Statevector& state, const IsingHamiltonian& ising,
                          std::size_t shots, std::mt19937_64& rng);

/// Draws `shots` basis indices from |psi|^2.
std::vector<std::uint64_t> sample_basis(const Statevector& state, std::size_t shots,
                                        std::mt19937_64& rng);

struct NftStep {
  double theta = 0.0;
  /// Reconstructed cost at the new angle, c0 - |c1|.
  double predicted_cost = 0.0;
  int evaluations = 0;
};

/// One NFT coordinate update. The cost along a single rotation angle is
/// c0 + c1 cos(theta - c2); it is sampled at theta and theta +- pi/2 and the
/// angle jumps to the reconstructed minimum. A flat direction leaves theta unchanged.
NftStep nft_update(const std::function<double(double)>& cost, double theta);

struct VqeConfig {
  std::size_t shots = 512;
  int max_evaluations = 300;
  std::uint64_t seed = 1;
  /// Independent bit-flip probability applied to each sampled bit.
  double readout_error = 0.0;
};

struct VqeResult {
  /// Triplet-selection bits (1 = selected), variable 0 leftmost.
  Assignment best_bitstring;
  double best_energy = 0.0;
  /// Final-state histogram in the same bit convention; empty when shots == 0.
  std::map<std::string, std::size_t> counts;
  AnsatzParams params;
  int evaluations = 0;
  double final_expectation = 0.0;
};

/// Measured bit 0 means Z = +1, i.e. T = 1; this converts a basis index to the
/// triplet-selection assignment.
Assignment readout_to_assignment(std::uint64_t basis, std::size_t n);

/// Starting point of the optimiser: first-layer angles pi/2, second layer 0.
/// The CNOT chain leaves the resulting |+>^n unchanged, so the first
/// measurements sample every basis state uniformly.
AnsatzParams initial_params(std::size_t n);

/// Cycles NFT updates over all 2n angles until the evaluation budget is
/// spent. With shots == 0 a sweep that lowers the cost by less than 1e-4
/// (relative) triggers a restart from seeded random angles, and the best
/// parameters seen are kept. With shots > 0 the result is the lowest-energy bitstring sampled at
/// any point; with shots == 0 it is the most probable basis state of the
/// final state.
VqeResult run_vqe(const IsingHamiltonian& ising, const VqeConfig& config);

/// Sub-QUBO solver backed by run_vqe; the per-call seed replaces config.seed.
SubSolver vqe_subsolver(VqeConfig config);

/// Most frequent entry of a counts map (ties: lexicographically smallest).
std::string most_frequent(const std::map<std::string, std::size_t>& counts);

}  // namespace qtrack
