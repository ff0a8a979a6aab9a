#include "qtrack/vqe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qtrack/errors.hpp"

namespace qtrack {

Statevector::Statevector(std::size_t n) : n_(n) {
  if (n > kMaxQubits) {
    throw SizeError("statevector: " + std::to_string(n) + " qubits exceed the limit of " +
                    std::to_string(kMaxQubits));
  }
  amps_.assign(std::size_t{1} << n, {0.0, 0.0});
  amps_[0] = 1.0;
}

double Statevector::norm_squared() const {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return s;
}

std::vector<double> Statevector::probabilities() const {
  std::vector<double> p(amps_.size());
  for (std::size_t k = 0; k < amps_.size(); ++k) p[k] = std::norm(amps_[k]);
  return p;
}

void Statevector::apply_ry(std::size_t qubit, double theta) {
  if (qubit >= n_) throw ContractViolation("apply_ry: qubit out of range");
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const std::size_t bit = std::size_t{1} << qubit;
  for (std::size_t k = 0; k < amps_.size(); ++k) {
    if (k & bit) continue;
    const auto a0 = amps_[k];
    const auto a1 = amps_[k | bit];
    amps_[k] = c * a0 - s * a1;
    amps_[k | bit] = s * a0 + c * a1;
  }
}

void Statevector::apply_cnot(std::size_t control, std::size_t target) {
  if (control >= n_ || target >= n_ || control == target) {
    throw ContractViolation("apply_cnot: invalid qubit pair");
  }
  const std::size_t cbit = std::size_t{1} << control;
  const std::size_t tbit = std::size_t{1} << target;
  for (std::size_t k = 0; k < amps_.size(); ++k) {
    if ((k & cbit) && !(k & tbit)) std::swap(amps_[k], amps_[k | tbit]);
  }
}

Statevector prepare_state(const AnsatzParams& params, std::size_t n) {
  if (params.thetas.size() != 2 * n) {
    throw ContractViolation("prepare_state: expected " + std::to_string(2 * n) + " angles, got " +
                            std::to_string(params.thetas.size()));
  }
  Statevector psi(n);
  for (std::size_t q = 0; q < n; ++q) psi.apply_ry(q, params.thetas[q]);
  for (std::size_t q = 0; q + 1 < n; ++q) psi.apply_cnot(q, q + 1);
  for (std::size_t q = 0; q < n; ++q) psi.apply_ry(q, params.thetas[n + q]);
  return psi;
}

std::vector<double> basis_energies(const IsingHamiltonian& ising) {
  const std::size_t n = ising.size();
  if (n > kMaxQubits) throw SizeError("basis_energies: too many qubits");
  std::vector<double> e(std::size_t{1} << n);
  for (std::size_t z = 0; z < e.size(); ++z) e[z] = ising.energy_basis(z);
  return e;
}

std::vector<std::uint64_t> sample_basis(const Statevector& state, std::size_t shots,
                                        std::mt19937_64& rng) {
  const auto probs = state.probabilities();
  std::vector<double> cdf(probs.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) cdf[k] = (acc += probs[k]);
  std::uniform_real_distribution<double> uniform(0.0, acc);
  std::vector<std::uint64_t> out(shots);
  for (auto& s : out) {
    const double u = uniform(rng);
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    // skip zero-probability entries sitting on the boundary
    while (it != cdf.begin() && probs[static_cast<std::size_t>(it - cdf.begin())] == 0.0) --it;
    s = static_cast<std::uint64_t>(it - cdf.begin());
  }
  return out;
}

namespace {

double exact_expectation(const Statevector& state, std::span<const double> energies) {
  double e = 0.0;
  const auto amps = state.amplitudes();
  for (std::size_t z = 0; z < amps.size(); ++z) e += std::norm(amps[z]) * energies[z];
  return e;
}

}  // namespace

double energy_expectation(const Statevector& state, const IsingHamiltonian& ising,
                          std::size_t shots, std::mt19937_64& rng) {
  if (ising.size() != state.qubits()) throw ContractViolation("energy_expectation: size mismatch");
  if (shots == 0) {
    double e = 0.0;
    const auto amps = state.amplitudes();
    for (std::size_t z = 0; z < amps.size(); ++z) {
      const double p = std::norm(amps[z]);
      if (p != 0.0) e += p * ising.energy_basis(z);
    }
    return e;
  }
  double sum = 0.0;
  for (auto z : sample_basis(state, shots, rng)) sum += ising.energy_basis(z);
  return sum / static_cast<double>(shots);
}

NftStep nft_update(const std::function<double(double)>& cost, double theta) {
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  const double c_mid = cost(theta);
  const double c_plus = cost(theta + kHalfPi);
  const double c_minus = cost(theta - kHalfPi);
  const double c0 = 0.5 * (c_plus + c_minus);
  const double a = c_mid - c0;                 // c1 cos(theta - c2)
  const double b = 0.5 * (c_minus - c_plus);   // c1 sin(theta - c2)
  const double c1 = std::hypot(a, b);
  NftStep step;
  step.evaluations = 3;
  if (c1 <= 1e-12 * (1.0 + std::abs(c0))) {
    step.theta = theta;
    step.predicted_cost = c_mid;
    return step;
  }
  step.theta = theta - std::atan2(b, a) + std::numbers::pi;
  step.predicted_cost = c0 - c1;
  return step;
}

Assignment readout_to_assignment(std::uint64_t basis, std::size_t n) {
  Assignment a(n);
  for (std::size_t q = 0; q < n; ++q) a.bits[q] = ((basis >> q) & 1u) ? 0 : 1;
  return a;
}

namespace {
constexpr double kStallTolerance = 1e-4;
}  // namespace

AnsatzParams initial_params(std::size_t n) {
  AnsatzParams p;
  p.thetas.assign(2 * n, 0.0);
  for (std::size_t q = 0; q < n; ++q) p.thetas[q] = std::numbers::pi / 2;
  return p;
}

VqeResult run_vqe(const IsingHamiltonian& ising, const VqeConfig& config) {
  const std::size_t n = ising.size();
  if (n == 0) throw ContractViolation("run_vqe: empty Hamiltonian");
  if (n > kMaxQubits) throw SizeError("run_vqe: too many qubits");
  if (!(config.readout_error >= 0.0 && config.readout_error <= 0.5)) {
    throw ConfigError("run_vqe: readout_error must lie in [0, 0.5]");
  }
  std::mt19937_64 rng(config.seed);
  std::bernoulli_distribution flip(config.readout_error);
  const auto energies = basis_energies(ising);

  VqeResult result;
  result.params = initial_params(n);
  std::uint64_t best_basis = 0;
  double best_energy = INFINITY;

  auto measure = [&](const Statevector& psi) -> std::vector<std::uint64_t> {
    auto samples = sample_basis(psi, config.shots, rng);
    if (config.readout_error > 0.0) {
      for (auto& s : samples) {
        for (std::size_t q = 0; q < n; ++q) {
          if (flip(rng)) s ^= std::uint64_t{1} << q;
        }
      }
    }
    return samples;
  };

  auto evaluate = [&](const AnsatzParams& p) {
    ++result.evaluations;
    const Statevector psi = prepare_state(p, n);
    if (config.shots == 0) return exact_expectation(psi, energies);
    double sum = 0.0;
    for (auto z : measure(psi)) {
      sum += energies[z];
      if (energies[z] < best_energy - 1e-12 || (energies[z] <= best_energy + 1e-12 && z < best_basis)) {
        best_energy = energies[z];
        best_basis = z;
      }
    }
    return sum / static_cast<double>(config.shots);
  };

  AnsatzParams params = result.params;
  // Exact mode only: a sweep that barely moves the cost sits at a stationary
  // point, so restart from random angles and keep the best parameters seen.
  const bool restarts = config.shots == 0;
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  double cost_now = restarts ? evaluate(params) : 0.0;
  AnsatzParams best_params = params;
  double best_cost = cost_now;

  bool budget_left = config.max_evaluations >= 3;
  while (budget_left) {
    const double sweep_start = cost_now;
    for (std::size_t d = 0; d < 2 * n; ++d) {
      if (result.evaluations + 3 > config.max_evaluations) {
        budget_left = false;
        break;
      }
      auto cost = [&](double t) {
        AnsatzParams trial = params;
        trial.thetas[d] = t;
        return evaluate(trial);
      };
      const NftStep step = nft_update(cost, params.thetas[d]);
      params.thetas[d] = std::remainder(step.theta, 2.0 * std::numbers::pi);
      cost_now = step.predicted_cost;
      if (restarts && cost_now < best_cost) {
        best_cost = cost_now;
        best_params = params;
      }
    }
    if (restarts && budget_left && sweep_start - cost_now < kStallTolerance * (1.0 + std::abs(sweep_start))) {
      for (auto& t : params.thetas) t = angle(rng);
      if (result.evaluations + 1 > config.max_evaluations) break;
      cost_now = evaluate(params);
    }
  }
  if (restarts) params = best_params;
  result.params = params;

  const Statevector final_state = prepare_state(params, n);
  result.final_expectation = exact_expectation(final_state, energies);
  if (config.shots == 0) {
    const auto probs = final_state.probabilities();
    best_basis = static_cast<std::uint64_t>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
    best_energy = energies[best_basis];
  } else {
    for (auto z : measure(final_state)) {
      ++result.counts[readout_to_assignment(z, n).to_string()];
      if (energies[z] < best_energy - 1e-12 || (energies[z] <= best_energy + 1e-12 && z < best_basis)) {
        best_energy = energies[z];
        best_basis = z;
      }
    }
  }
  result.best_bitstring = readout_to_assignment(best_basis, n);
  result.best_energy = best_energy;
  return result;
}

SubSolver vqe_subsolver(VqeConfig config) {
  return [config](const Qubo& q, std::uint64_t seed) -> std::optional<Assignment> {
    if (q.size() == 0 || q.size() > kMaxQubits) return std::nullopt;
    VqeConfig c = config;
    c.seed = seed;
    return run_vqe(to_ising(q), c).best_bitstring;
  };
}

std::string most_frequent(const std::map<std::string, std::size_t>& counts) {
  std::string best;
  std::size_t best_count = 0;
  for (const auto& [bits, c] : counts) {
    if (c > best_count) {
      best = bits;
      best_count = c;
    }
  }
  return best;
}

}  // namespace qtrack
