#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "qtrack/errors.hpp"
#include "qtrack/solve.hpp"

using namespace qtrack;

namespace {

Assignment as_assignment(const std::vector<int>& bits) {
  return Assignment(std::vector<std::uint8_t>(bits.begin(), bits.end()));
}

/// `blocks` independent random blocks of size m on consecutive variables.
Qubo block_diagonal(std::size_t blocks, std::size_t m, std::mt19937_64& rng) {
  std::vector<double> a;
  std::vector<Coupling> c;
  for (std::size_t b = 0; b < blocks; ++b) {
    const auto q = oracle::random_qubo(m, rng);
    for (double v : q.linear()) a.push_back(v);
    for (const auto& x : q.couplings()) c.push_back({x.i + b * m, x.j + b * m, x.value});
  }
  return Qubo(std::move(a), std::move(c));
}

bool non_increasing(const std::vector<double>& trace) {
  for (std::size_t k = 1; k < trace.size(); ++k) {
    if (trace[k] > trace[k - 1]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("exact solver examples") {
  const Qubo q({-1.0, 0.5}, {{0, 1, -0.95}});
  const auto s = solve_exact(q);
  CHECK(s.to_string() == "11");
  CHECK(objective(q, s) == doctest::Approx(-1.45));

  CHECK(solve_exact(Qubo({-0.5, -0.5}, {{0, 1, 1.0}})).to_string() == "10");
  CHECK(solve_exact(Qubo({0.0, 0.0, 0.0}, {})).to_string() == "000");
  CHECK(solve_exact(Qubo()).size() == 0);
  CHECK_THROWS_AS(solve_exact(Qubo(std::vector<double>(25, 0.0), {})), SizeError);
}

TEST_CASE("exact solver matches enumeration") {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 60; ++k) {
    const std::size_t n = 1 + rng() % 12;
    const auto q = oracle::random_qubo(n, rng);
    const auto ref = oracle::enumerate_minimum(q);
    CHECK(oracle::to_ints(solve_exact(q)) == ref.bits);
  }
  // ties on a structured problem with repeated coefficients
  const Qubo tied({-1, -1, -1, -1}, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {0, 3, 1}});
  CHECK(oracle::to_ints(solve_exact(tied)) == oracle::enumerate_minimum(tied).bits);
}

TEST_CASE("sub-QUBO extraction") {
  std::mt19937_64 rng(22);
  const auto q7 = oracle::random_qubo(7, rng);
  const auto one = extract_subqubos(q7, Assignment(7, 1), 7);
  REQUIRE(one.size() == 1);
  auto idx = one[0].indices;
  std::sort(idx.begin(), idx.end());
  CHECK(idx == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6});

  // impacts at all-ones are -a_i: (0.1, 5, 2)
  const Qubo q3({-0.1, -5.0, -2.0}, {});
  for (auto grouping : {Grouping::ImpactOrder, Grouping::ImpactConnected}) {
    const auto subs = extract_subqubos(q3, Assignment(3, 1), 2, grouping);
    REQUIRE(subs.size() == 2);
    CHECK(subs[0].indices == std::vector<std::size_t>{1, 2});
    CHECK(subs[1].indices == std::vector<std::size_t>{0});
  }
  CHECK_THROWS_AS(extract_subqubos(q3, Assignment(3, 1), 0), ContractViolation);
}

TEST_CASE("boundary terms reproduce the full objective up to a constant") {
  std::mt19937_64 rng(23);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 4 + rng() % 14;
    const auto q = oracle::random_qubo(n, rng);
    Assignment outside(n);
    for (auto& b : outside.bits) b = rng() & 1u;
    const std::size_t size = 1 + rng() % 6;
    for (auto grouping : {Grouping::ImpactOrder, Grouping::ImpactConnected}) {
      for (const auto& sub : extract_subqubos(q, outside, size, grouping)) {
        CHECK(sub.indices.size() <= size);
        const auto local = sub.to_qubo();
        const oracle::Dense full(q);
        double offset = 0.0;
        for (std::uint64_t s = 0; s < (1u << sub.indices.size()); ++s) {
          const auto bits = oracle::bits_of_index(s, sub.indices.size());
          auto merged = oracle::to_ints(outside);
          for (std::size_t p = 0; p < bits.size(); ++p) merged[sub.indices[p]] = bits[p];
          const double diff = full.value(merged) - objective(local, as_assignment(bits));
          if (s == 0) offset = diff;
          CHECK(diff == doctest::Approx(offset).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("iterative solver") {
  std::mt19937_64 rng(24);

  SUBCASE("single sub-problem equals the exact solution") {
    for (int k = 0; k < 30; ++k) {
      const std::size_t n = 1 + rng() % 9;
      const auto q = oracle::random_qubo(n, rng);
      IterativeOptions o;
      o.subqubo_size = 9;
      const auto r = solve_iterative(q, exact_subsolver(), o);
      CHECK(r.best_assignment == solve_exact(q));
      CHECK(r.best_objective == doctest::Approx(objective(q, r.best_assignment)));
    }
  }

  SUBCASE("two independent blocks") {
    for (int k = 0; k < 50; ++k) {
      const auto q = block_diagonal(2, 7, rng);
      const auto r = solve_iterative(q, exact_subsolver(), {});
      const double best = oracle::enumerate_minimum(q).value;
      REQUIRE(r.objective_trace.size() >= 2);
      const double by_two = *std::min_element(r.objective_trace.begin(),
                                              r.objective_trace.begin() + std::min<std::size_t>(3, r.objective_trace.size()));
      CHECK(by_two == doctest::Approx(best).epsilon(1e-12));
    }
  }

  SUBCASE("monotone traces") {
    for (int k = 0; k < 100; ++k) {
      const auto q = oracle::random_qubo(30 + rng() % 20, rng);
      for (auto update : {UpdateMode::Jacobi, UpdateMode::GaussSeidel}) {
        IterativeOptions o;
        o.update = update;
        o.grouping = k % 2 ? Grouping::ImpactOrder : Grouping::ImpactConnected;
        o.seed = k;
        const auto r = solve_iterative(q, annealing_subsolver({2.0, 0.02, 50}), o);
        CHECK(non_increasing(r.objective_trace));
        CHECK(r.objective_trace.front() == doctest::Approx(objective(q, Assignment(q.size(), 1))));
        CHECK(r.objective_trace.back() == r.best_objective);
        CHECK(r.iterations_run <= o.max_iterations);
        CHECK_FALSE(r.warning);
      }
    }
  }

  SUBCASE("parallel sub-solves give the same answer") {
    const auto q = oracle::random_qubo(60, rng);
    IterativeOptions o;
    o.seed = 5;
    const auto a = solve_iterative(q, annealing_subsolver({2.0, 0.02, 100}), o);
    o.jobs = 4;
    const auto b = solve_iterative(q, annealing_subsolver({2.0, 0.02, 100}), o);
    CHECK(a.best_assignment == b.best_assignment);
    CHECK(a.objective_trace == b.objective_trace);
  }

  SUBCASE("sub-solver failure keeps the last accepted state") {
    const auto q = oracle::random_qubo(20, rng);
    int calls = 0;
    SubSolver flaky = [&](const Qubo& sub, std::uint64_t) -> std::optional<Assignment> {
      if (++calls > 3) return std::nullopt;
      return solve_exact(sub);
    };
    const auto r = solve_iterative(q, flaky, {});
    CHECK(r.warning);
    CHECK_FALSE(r.message.empty());
    CHECK(r.best_objective == doctest::Approx(objective(q, r.best_assignment)));
    CHECK(r.best_objective <= objective(q, Assignment(20, 1)));
  }
}

TEST_CASE("simulated annealing") {
  int correct = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    correct += solve_annealing(Qubo({-1.0}, {}), {}, seed).to_string() == "1";
  }
  CHECK(correct >= 99);

  std::mt19937_64 rng(25);
  int matches = 0;
  for (int k = 0; k < 100; ++k) {
    const auto q = oracle::random_qubo(10, rng);
    const auto best = oracle::enumerate_minimum(q);
    const auto a = solve_annealing(q, {}, k);
    CHECK(objective(q, a) >= best.value - 1e-12);
    matches += oracle::to_ints(a) == best.bits;
    CHECK(solve_annealing(q, {}, k) == a);
  }
  CHECK(matches >= 95);
  CHECK_THROWS_AS(solve_annealing(Qubo({1.0}, {}), {0.0, 0.1, 10}, 1), ConfigError);
}

TEST_CASE("no solver beats the enumerated minimum") {
  std::mt19937_64 rng(26);
  for (int k = 0; k < 30; ++k) {
    const auto q = oracle::random_qubo(8 + rng() % 9, rng);
    const double best = oracle::enumerate_minimum(q).value;
    CHECK(objective(q, solve_exact(q)) == doctest::Approx(best).epsilon(1e-12));
    CHECK(objective(q, solve_annealing(q, {}, k)) >= best - 1e-12);
    CHECK(solve_iterative(q, exact_subsolver(), {}).best_objective >= best - 1e-12);
  }
}

TEST_CASE("seed mixing") {
  CHECK(mix_seed(1, 2) == mix_seed(1, 2));
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  CHECK(mix_seed(1, 0) != mix_seed(1, 1));
}
