#include <benchmark/benchmark.h>

#include <random>

#include "qtrack/fastsim.hpp"
#include "qtrack/pipeline.hpp"
#include "qtrack/solve.hpp"
#include "qtrack/vqe.hpp"

using namespace qtrack;

namespace {

/// Sparse random QUBO shaped like a triplet-selection problem.
Qubo random_qubo(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> a(-1.0, 1.0), chain(-1.0, -0.9), u(0.0, 1.0);
  std::vector<double> linear(n);
  for (auto& v : linear) v = a(rng);
  std::vector<Coupling> c;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = u(rng) * n;
      if (r < 1.0) c.push_back({i, j, chain(rng)});
      else if (r < 2.0) c.push_back({i, j, 1.0});
    }
  }
  return Qubo(std::move(linear), std::move(c));
}

void BM_SolveExact(benchmark::State& state) {
  const auto q = random_qubo(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(solve_exact(q));
}
BENCHMARK(BM_SolveExact)->DenseRange(8, 20, 4);

void BM_Vqe(benchmark::State& state) {
  const auto h = to_ising(random_qubo(static_cast<std::size_t>(state.range(0)), 2));
  VqeConfig c;
  c.shots = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(run_vqe(h, c));
}
BENCHMARK(BM_Vqe)->Args({4, 0})->Args({7, 0})->Args({7, 512})->Args({10, 512})->Unit(benchmark::kMillisecond);

void BM_SolveIterative(benchmark::State& state) {
  const auto q = random_qubo(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(solve_iterative(q, exact_subsolver()));
}
BENCHMARK(BM_SolveIterative)->RangeMultiplier(4)->Range(50, 800)->Unit(benchmark::kMillisecond);

void BM_ReconstructEvent(benchmark::State& state) {
  const auto g = build_geometry();
  SimConfig s;
  s.fixed_multiplicity = static_cast<int>(state.range(0));
  const std::vector<Event> events{generate_event(s, g, 0)};
  ReconstructionConfig rc;
  const auto cal = calibrate(events, rc);
  for (auto _ : state) {
    benchmark::DoNotOptimize(reconstruct_event(events[0], g, cal.window, cal.scaling, rc.solver, rc.seed));
  }
}
BENCHMARK(BM_ReconstructEvent)->Arg(100)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
