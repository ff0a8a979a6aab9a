#include "qtrack/solve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <set>

#include "qtrack/errors.hpp"
#include "qtrack/parallel.hpp"

namespace qtrack {

namespace {

constexpr double kTieTolerance = 1e-12;

Assignment from_index(std::uint64_t index, std::size_t n) {
  Assignment a(n);
  for (std::size_t i = 0; i < n; ++i) a.bits[i] = static_cast<std::uint8_t>((index >> i) & 1u);
  return a;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finaliser over a combined word
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Assignment solve_exact(const Qubo& qubo) {
  const std::size_t n = qubo.size();
  if (n > kMaxExactSize) {
    throw SizeError("solve_exact: " + std::to_string(n) + " variables exceed the enumeration bound of " +
                    std::to_string(kMaxExactSize));
  }
  if (n == 0) return Assignment{};

  // Gray-code walk with incremental energies. States that come within 1e-9
  // of the incumbent are re-evaluated from scratch before the tie rule is
  // applied, so accumulated rounding never decides the winner.
  Assignment state(n);
  double energy = 0.0;
  std::uint64_t best_index = 0;
  double best_exact = 0.0;
  const std::uint64_t total = std::uint64_t{1} << n;
  std::uint64_t index = 0;
  for (std::uint64_t step = 1; step < total; ++step) {
    const auto flip = static_cast<std::size_t>(std::countr_zero(step));
    energy += impact(qubo, state, flip);
    state.bits[flip] ^= 1u;
    index ^= std::uint64_t{1} << flip;
    if (energy < best_exact + 1e-9) {
      const double exact = objective(qubo, state);
      energy = exact;
      if (exact < best_exact - kTieTolerance ||
          (exact <= best_exact + kTieTolerance && index < best_index)) {
        best_exact = exact;
        best_index = index;
      }
    }
  }
  return from_index(best_index, n);
}

Assignment solve_annealing(const Qubo& qubo, const AnnealSchedule& schedule, std::uint64_t seed) {
  if (!(schedule.t_initial > 0.0) || !(schedule.t_final > 0.0) || schedule.sweeps < 1) {
    throw ConfigError("solve_annealing: temperatures must be positive and sweeps >= 1");
  }
  const std::size_t n = qubo.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Assignment state(n);
  for (auto& b : state.bits) b = static_cast<std::uint8_t>(rng() & 1u);
  if (n == 0) return state;

  // local[i] = a_i + sum_j b_ij T_j, so flipping i changes O by (1 - 2 T_i) local[i]
  std::vector<double> local(qubo.linear().begin(), qubo.linear().end());
  for (std::size_t i = 0; i < n; ++i) {
    for (auto [j, b] : qubo.neighbours(i)) {
      if (state.bits[j]) local[i] += b;
    }
  }
  double energy = objective(qubo, state);
  Assignment best = state;
  double best_energy = energy;

  const double ratio = schedule.sweeps > 1
                           ? std::pow(schedule.t_final / schedule.t_initial,
                                      1.0 / static_cast<double>(schedule.sweeps - 1))
                           : 1.0;
  double temperature = schedule.t_initial;
  for (int sweep = 0; sweep < schedule.sweeps; ++sweep) {
    for (std::size_t i = 0; i < n; ++i) {
      const double delta = state.bits[i] ? -local[i] : local[i];
      if (delta <= 0.0 || uniform(rng) < std::exp(-delta / temperature)) {
        const double sign = state.bits[i] ? -1.0 : 1.0;
        state.bits[i] ^= 1u;
        for (auto [j, b] : qubo.neighbours(i)) local[j] += sign * b;
        energy += delta;
        if (energy < best_energy - kTieTolerance) {
          best_energy = energy;
          best = state;
        }
      }
    }
    temperature *= ratio;
  }
  return best;
}

std::vector<SubQubo> extract_subqubos(const Qubo& qubo, const Assignment& assignment,
                                      std::size_t k, Grouping grouping) {
  if (k < 1) throw ContractViolation("extract_subqubos: k must be >= 1");
  const std::size_t n = qubo.size();
  if (assignment.size() != n) throw ContractViolation("extract_subqubos: length mismatch");

  std::vector<double> magnitude(n);
  for (std::size_t i = 0; i < n; ++i) magnitude[i] = std::abs(impact(qubo, assignment, i));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return magnitude[a] > magnitude[b]; });

  std::vector<std::vector<std::size_t>> groups;
  if (grouping == Grouping::ImpactOrder) {
    for (std::size_t s = 0; s < n; s += k) {
      groups.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s),
                          order.begin() + static_cast<std::ptrdiff_t>(std::min(n, s + k)));
    }
  } else {
    std::vector<std::size_t> rank(n);
    for (std::size_t r = 0; r < n; ++r) rank[order[r]] = r;

    // Connected components of the coupling graph. Components of at most k
    // variables are only ever taken whole, so their sizes stay exact.
    std::vector<std::size_t> comp(n, n), comp_size;
    for (std::size_t v = 0; v < n; ++v) {
      if (comp[v] != n) continue;
      const std::size_t id = comp_size.size();
      comp_size.push_back(0);
      std::vector<std::size_t> stack{v};
      comp[v] = id;
      while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        ++comp_size[id];
        for (auto [j, b] : qubo.neighbours(u)) {
          if (comp[j] == n) {
            comp[j] = id;
            stack.push_back(j);
          }
        }
      }
    }
    std::vector<std::set<std::size_t>> small(k + 1);  // ranks of free variables by component size
    std::vector<char> is_free(n, 1);                   // indexed by rank
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t size = comp_size[comp[order[r]]];
      if (size <= k) small[size].insert(r);
    }
    std::size_t cursor = 0;  // every rank below it is taken
    std::size_t remaining = n;

    while (remaining > 0) {
      std::vector<std::size_t> group;
      // Ranks of free variables coupled to the group; taken entries are skipped lazily.
      std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> frontier;
      auto take = [&](std::size_t r) {
        is_free[r] = 0;
        --remaining;
        const std::size_t v = order[r];
        const std::size_t size = comp_size[comp[v]];
        if (size <= k) small[size].erase(r);
        group.push_back(v);
        for (auto [j, b] : qubo.neighbours(v)) {
          if (is_free[rank[j]]) frontier.push(rank[j]);
        }
      };
      while (!is_free[cursor]) ++cursor;
      take(cursor);
      while (group.size() < k && remaining > 0) {
        while (!frontier.empty() && !is_free[frontier.top()]) frontier.pop();
        if (!frontier.empty()) {
          take(frontier.top());
          continue;
        }
        // Group is closed: add the highest-ranked whole component that fits.
        std::optional<std::size_t> next;
        for (std::size_t size = 1; size <= k - group.size(); ++size) {
          if (!small[size].empty() && (!next || *small[size].begin() < *next)) next = *small[size].begin();
        }
        if (!next) break;
        take(*next);
      }
      groups.push_back(std::move(group));
    }
  }

  std::vector<int> local_index(n, -1);
  std::vector<SubQubo> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    SubQubo sub;
    sub.indices = g;
    for (std::size_t p = 0; p < g.size(); ++p) local_index[g[p]] = static_cast<int>(p);
    for (std::size_t p = 0; p < g.size(); ++p) {
      double eff = qubo.linear()[g[p]];
      for (auto [j, b] : qubo.neighbours(g[p])) {
        if (local_index[j] < 0) {
          if (assignment.bits[j]) eff += b;
        } else if (static_cast<std::size_t>(local_index[j]) > p) {
          sub.quadratic.push_back({p, static_cast<std::size_t>(local_index[j]), b});
        }
      }
      sub.linear_effective.push_back(eff);
    }
    for (auto v : g) local_index[v] = -1;
    out.push_back(std::move(sub));
  }
  return out;
}

SubSolver exact_subsolver() {
  return [](const Qubo& q, std::uint64_t) -> std::optional<Assignment> { return solve_exact(q); };
}

SubSolver annealing_subsolver(AnnealSchedule schedule) {
  return [schedule](const Qubo& q, std::uint64_t seed) -> std::optional<Assignment> {
    return solve_annealing(q, schedule, seed);
  };
}

namespace {

Assignment apply(const Assignment& base, const SubQubo& sub, const Assignment& local) {
  Assignment out = base;
  for (std::size_t p = 0; p < sub.indices.size(); ++p) out.bits[sub.indices[p]] = local.bits[p];
  return out;
}

/// Writes a sub-solution into `a` one flip at a time and keeps it when the
/// objective does not rise; otherwise restores `a`. Returns the change kept.
double try_apply(const Qubo& qubo, Assignment& a, const SubQubo& sub, const Assignment& local) {
  std::vector<std::size_t> flipped;
  double delta = 0.0;
  for (std::size_t p = 0; p < sub.indices.size(); ++p) {
    const std::size_t i = sub.indices[p];
    if (a.bits[i] == local.bits[p]) continue;
    delta += impact(qubo, a, i);
    a.bits[i] ^= 1u;
    flipped.push_back(i);
  }
  if (delta <= 0.0) return delta;
  for (auto i : flipped) a.bits[i] ^= 1u;
  return 0.0;
}

SubQubo refresh_boundary(const Qubo& qubo, const Assignment& assignment, SubQubo sub) {
  auto inside = [&](std::size_t j) {
    return std::find(sub.indices.begin(), sub.indices.end(), j) != sub.indices.end();
  };
  for (std::size_t p = 0; p < sub.indices.size(); ++p) {
    double eff = qubo.linear()[sub.indices[p]];
    for (auto [j, b] : qubo.neighbours(sub.indices[p])) {
      if (assignment.bits[j] && !inside(j)) eff += b;
    }
    sub.linear_effective[p] = eff;
  }
  return sub;
}

}  // namespace

SolveReport solve_iterative(const Qubo& qubo, const SubSolver& subsolver,
                            const IterativeOptions& options) {
  if (options.subqubo_size < 1) throw ContractViolation("solve_iterative: subqubo size must be >= 1");
  if (options.max_iterations < 1) throw ContractViolation("solve_iterative: max_iterations must be >= 1");

  SolveReport report;
  Assignment current(qubo.size(), 1);
  double current_value = objective(qubo, current);
  report.objective_trace.push_back(current_value);

  for (int it = 0; it < options.max_iterations; ++it) {
    auto subs = extract_subqubos(qubo, current, options.subqubo_size, options.grouping);
    report.subqubo_count += subs.size();
    const std::uint64_t iteration_seed = mix_seed(options.seed, static_cast<std::uint64_t>(it));
    Assignment next = current;
    bool failed = false;

    if (options.update == UpdateMode::Jacobi) {
      std::vector<std::optional<Assignment>> solutions(subs.size());
      parallel_for(subs.size(), options.jobs, [&](std::size_t g) {
        solutions[g] = subsolver(subs[g].to_qubo(), mix_seed(iteration_seed, g));
      });
      for (std::size_t g = 0; g < subs.size() && !failed; ++g) {
        if (!solutions[g] || solutions[g]->size() != subs[g].indices.size()) failed = true;
      }
      if (!failed) {
        Assignment merged = current;
        for (std::size_t g = 0; g < subs.size(); ++g) merged = apply(merged, subs[g], *solutions[g]);
        if (objective(qubo, merged) <= current_value) {
          next = std::move(merged);
        } else {
          // The simultaneous merge lost to cross-group couplings; fall back
          // to accepting sub-solutions one at a time.
          for (std::size_t g = 0; g < subs.size(); ++g) try_apply(qubo, next, subs[g], *solutions[g]);
        }
      }
    } else {
      for (std::size_t g = 0; g < subs.size(); ++g) {
        const SubQubo sub = refresh_boundary(qubo, next, subs[g]);
        auto sol = subsolver(sub.to_qubo(), mix_seed(iteration_seed, g));
        if (!sol || sol->size() != sub.indices.size()) {
          failed = true;
          break;
        }
        try_apply(qubo, next, sub, *sol);
      }
    }

    if (failed) {
      report.warning = true;
      report.message = "sub-solver failed in iteration " + std::to_string(it) +
                       "; returning last accepted assignment";
      break;
    }

    ++report.iterations_run;
    // Summed flip deltas can drift from the recomputed objective by rounding.
    const double next_value = objective(qubo, next);
    if (next_value > current_value) next = current;
    const bool changed = next != current;
    current = std::move(next);
    current_value = changed ? next_value : current_value;
    report.objective_trace.push_back(current_value);
    if (!changed) break;
  }

  report.best_assignment = current;
  report.best_objective = current_value;
  return report;
}

}  // namespace qtrack
