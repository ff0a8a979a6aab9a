#include "qtrack/qubo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "qtrack/errors.hpp"

namespace qtrack {

Qubo::Qubo(std::vector<double> linear, std::vector<Coupling> couplings)
    : linear_(std::move(linear)) {
  const std::size_t n = linear_.size();
  for (auto c : couplings) {
    if (c.i == c.j) throw ContractViolation("Qubo: self-coupling on variable " + std::to_string(c.i));
    if (c.i >= n || c.j >= n) throw ContractViolation("Qubo: coupling index out of range");
    if (c.i > c.j) std::swap(c.i, c.j);
    if (c.value != 0.0) couplings_.push_back(c);
  }
  std::sort(couplings_.begin(), couplings_.end(),
            [](const Coupling& a, const Coupling& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });
  for (std::size_t k = 1; k < couplings_.size(); ++k) {
    if (couplings_[k].i == couplings_[k - 1].i && couplings_[k].j == couplings_[k - 1].j) {
      throw ContractViolation("Qubo: duplicate coupling (" + std::to_string(couplings_[k].i) + ", " +
                              std::to_string(couplings_[k].j) + ")");
    }
  }
  adjacency_.resize(n);
  for (const auto& c : couplings_) {
    adjacency_[c.i].emplace_back(c.j, c.value);
    adjacency_[c.j].emplace_back(c.i, c.value);
  }
  for (auto& row : adjacency_) std::sort(row.begin(), row.end());
}

double Qubo::coupling(std::size_t i, std::size_t j) const {
  if (i == j || i >= size() || j >= size()) return 0.0;
  const auto& row = adjacency_[i];
  auto it = std::lower_bound(row.begin(), row.end(), std::make_pair(j, -std::numeric_limits<double>::infinity()));
  return (it != row.end() && it->first == j) ? it->second : 0.0;
}

Assignment Assignment::from_string(const std::string& s) {
  Assignment a(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] != '0' && s[k] != '1') throw DataError("bitstring must contain only 0/1: '" + s + "'");
    a.bits[k] = static_cast<std::uint8_t>(s[k] - '0');
  }
  return a;
}

std::string Assignment::to_string() const {
  std::string s(bits.size(), '0');
  for (std::size_t k = 0; k < bits.size(); ++k) s[k] = bits[k] ? '1' : '0';
  return s;
}

double IsingHamiltonian::energy_spins(std::span<const int> spins) const {
  double e = constant;
  for (std::size_t i = 0; i < field.size(); ++i) e += field[i] * spins[i];
  for (const auto& c : coupling) e += c.value * spins[c.i] * spins[c.j];
  return e;
}

double IsingHamiltonian::energy_basis(std::uint64_t basis) const {
  auto z = [basis](std::size_t q) { return ((basis >> q) & 1u) ? -1.0 : 1.0; };
  double e = constant;
  for (std::size_t i = 0; i < field.size(); ++i) e += field[i] * z(i);
  for (const auto& c : coupling) e += c.value * z(c.i) * z(c.j);
  return e;
}

double linear_coefficient(const Triplet& t, double theta_scale) {
  if (!(theta_scale > 0.0)) throw ContractViolation("linear_coefficient: theta_scale must be > 0");
  return std::clamp(2.0 * (t.delta_theta / theta_scale) - 1.0, -1.0, 1.0);
}

bool triplets_chain(const Triplet& a, const Triplet& b) {
  const auto chained = [](const Triplet& lo, const Triplet& hi) {
    return hi.first_layer() == lo.first_layer() + 1 && lo.second.inner == hi.first.inner &&
           lo.second.outer == hi.first.outer;
  };
  return chained(a, b) || chained(b, a);
}

bool triplets_connected(const Triplet& a, const Triplet& b) {
  const auto ha = a.hits();
  const auto hb = b.hits();
  for (auto x : ha) {
    for (auto y : hb) {
      if (x == y) return true;
    }
  }
  return false;
}

double chain_angle_spread(const Triplet& a, const Triplet& b) {
  const Triplet& lo = a.first_layer() < b.first_layer() ? a : b;
  const Triplet& hi = a.first_layer() < b.first_layer() ? b : a;
  const std::array<const Doublet*, 3> ds{&lo.first, &lo.second, &hi.second};
  auto pop_var = [&ds](auto member) {
    double mean = 0.0;
    for (const auto* d : ds) mean += d->*member;
    mean /= 3.0;
    double ss = 0.0;
    for (const auto* d : ds) ss += (d->*member - mean) * (d->*member - mean);
    return ss / 3.0;
  };
  return std::sqrt(pop_var(&Doublet::theta_xz) + pop_var(&Doublet::theta_yz));
}

double quadratic_coefficient(const Triplet& a, const Triplet& b, const QuboScaling& scaling) {
  if (triplets_chain(a, b)) {
    const double s = chain_angle_spread(a, b);
    return -1.0 + 0.1 * std::clamp(s / scaling.spread_max, 0.0, 1.0);
  }
  if (triplets_connected(a, b)) return 1.0;
  return 0.0;
}

namespace {

/// Unordered pairs of triplets that share at least one hit, sorted.
std::vector<std::pair<std::size_t, std::size_t>> connected_pairs(std::span<const Triplet> triplets) {
  std::vector<std::pair<std::size_t, std::size_t>> hit_to_triplet;
  for (std::size_t t = 0; t < triplets.size(); ++t) {
    for (auto h : triplets[t].hits()) hit_to_triplet.emplace_back(h, t);
  }
  std::sort(hit_to_triplet.begin(), hit_to_triplet.end());
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < hit_to_triplet.size();) {
    std::size_t b = a;
    while (b < hit_to_triplet.size() && hit_to_triplet[b].first == hit_to_triplet[a].first) ++b;
    for (std::size_t p = a; p < b; ++p) {
      for (std::size_t q = p + 1; q < b; ++q) {
        pairs.emplace_back(hit_to_triplet[p].second, hit_to_triplet[q].second);
      }
    }
    a = b;
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

}  // namespace

Qubo assemble_qubo(std::span<const Triplet> triplets, const QuboScaling& scaling) {
  if (triplets.empty()) throw ContractViolation("assemble_qubo: empty triplet list");
  std::vector<double> linear(triplets.size());
  for (std::size_t t = 0; t < triplets.size(); ++t) {
    linear[t] = linear_coefficient(triplets[t], scaling.theta_scale);
  }
  std::vector<Coupling> couplings;
  for (auto [i, j] : connected_pairs(triplets)) {
    couplings.push_back({i, j, quadratic_coefficient(triplets[i], triplets[j], scaling)});
  }
  Qubo q(std::move(linear), std::move(couplings));
  q.triplet_refs.resize(triplets.size());
  for (std::size_t t = 0; t < triplets.size(); ++t) q.triplet_refs[t] = t;
  return q;
}

std::vector<double> truth_chain_spreads(std::span<const Triplet> triplets, std::span<const Hit> hits) {
  std::vector<double> spreads;
  for (auto [i, j] : connected_pairs(triplets)) {
    if (!triplets_chain(triplets[i], triplets[j])) continue;
    const auto hi = triplets[i].hits();
    const auto hj = triplets[j].hits();
    const auto pi = common_particle(hits, hi);
    if (!pi || pi != common_particle(hits, hj)) continue;
    spreads.push_back(chain_angle_spread(triplets[i], triplets[j]));
  }
  return spreads;
}

double sample_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ContractViolation("sample_quantile: empty input");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::optional<double> calibrate_spread_scale(std::span<const Triplet> triplets,
                                             std::span<const Hit> hits, double quantile) {
  auto spreads = truth_chain_spreads(triplets, hits);
  if (spreads.empty()) return std::nullopt;
  return sample_quantile(std::move(spreads), quantile);
}

double objective(const Qubo& qubo, const Assignment& assignment) {
  if (assignment.size() != qubo.size()) {
    throw ContractViolation("objective: assignment length " + std::to_string(assignment.size()) +
                            " does not match QUBO size " + std::to_string(qubo.size()));
  }
  double value = 0.0;
  const auto linear = qubo.linear();
  for (std::size_t i = 0; i < qubo.size(); ++i) {
    if (assignment.bits[i]) value += linear[i];
  }
  for (const auto& c : qubo.couplings()) {
    if (assignment.bits[c.i] && assignment.bits[c.j]) value += c.value;
  }
  return value;
}

IsingHamiltonian to_ising(const Qubo& qubo) {
  // T_i = (1 + Z_i)/2:  a T_i -> a/2 + a/2 Z_i,
  // b T_i T_j -> b/4 (1 + Z_i + Z_j + Z_i Z_j).
  IsingHamiltonian h;
  h.field.assign(qubo.size(), 0.0);
  const auto linear = qubo.linear();
  for (std::size_t i = 0; i < qubo.size(); ++i) {
    h.constant += 0.5 * linear[i];
    h.field[i] += 0.5 * linear[i];
  }
  for (const auto& c : qubo.couplings()) {
    const double q = 0.25 * c.value;
    h.constant += q;
    h.field[c.i] += q;
    h.field[c.j] += q;
    h.coupling.push_back({c.i, c.j, q});
  }
  return h;
}

double impact(const Qubo& qubo, const Assignment& assignment, std::size_t i) {
  if (i >= qubo.size()) throw ContractViolation("impact: variable index out of range");
  if (assignment.size() != qubo.size()) throw ContractViolation("impact: length mismatch");
  double local = qubo.linear()[i];
  for (auto [j, b] : qubo.neighbours(i)) {
    if (assignment.bits[j]) local += b;
  }
  return assignment.bits[i] ? -local : local;
}

namespace {

std::string lossless(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_qubo(std::ostream& os, const Qubo& qubo) {
  os << qubo.size() << '\n';
  const auto linear = qubo.linear();
  for (std::size_t i = 0; i < qubo.size(); ++i) os << i << ' ' << lossless(linear[i]) << '\n';
  for (const auto& c : qubo.couplings()) {
    os << c.i << ' ' << c.j << ' ' << lossless(c.value) << '\n';
  }
}

Qubo read_qubo(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&line_no](const std::string& what) {
    throw DataError("qubo dump line " + std::to_string(line_no) + ": " + what);
  };
  std::size_t n = 0;
  bool have_n = false;
  std::vector<double> linear;
  std::vector<Coupling> couplings;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    try {
      if (!have_n) {
        if (tok.size() != 1) fail("expected variable count");
        n = std::stoull(tok[0]);
        linear.assign(n, 0.0);
        have_n = true;
      } else if (tok.size() == 2) {
        const auto i = std::stoull(tok[0]);
        if (i >= n) fail("variable index out of range");
        linear[i] = std::stod(tok[1]);
      } else if (tok.size() == 3) {
        couplings.push_back({std::stoull(tok[0]), std::stoull(tok[1]), std::stod(tok[2])});
      } else {
        fail("unexpected token count");
      }
    } catch (const std::logic_error&) {
      fail("unparsable number");
    }
  }
  if (!have_n) throw DataError("qubo dump: missing variable count");
  try {
    return Qubo(std::move(linear), std::move(couplings));
  } catch (const ContractViolation& e) {
    throw DataError(std::string("qubo dump: ") + e.what());
  }
}

std::vector<std::string> check_coefficient_ranges(const Qubo& qubo) {
  std::vector<std::string> out;
  const auto linear = qubo.linear();
  for (std::size_t i = 0; i < qubo.size(); ++i) {
    if (linear[i] < -1.0 || linear[i] > 1.0) out.push_back("a_" + std::to_string(i) + " outside [-1, 1]");
  }
  for (const auto& c : qubo.couplings()) {
    const bool chained = c.value >= -1.0 && c.value <= -0.9;
    if (!chained && c.value != 1.0) {
      out.push_back("b_" + std::to_string(c.i) + "," + std::to_string(c.j) + " outside allowed set");
    }
  }
  return out;
}

}  // namespace qtrack
