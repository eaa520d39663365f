// OpenMP kernels against their serial references.
#include <benchmark/benchmark.h>

#include <vector>

#include "mfw/instances.hpp"
#include "mfw/oracle.hpp"
#include "mfw/subsolver.hpp"

using namespace mfw;

namespace {

// A p-means influence bound to a 16-atom measure: the field the FW subproblem scans.
struct Field {
  ProblemInstance inst = make_instance("pmeans", {{"demands", "0.2 0.3; 0.7 0.8; 0.5 0.1"},
                                                  {"lower", "0 0"},
                                                  {"upper", "1 1"}});
  ScalarField h;
  Field() {
    RngStream rng(1);
    h = inst.influence(random_measure(inst, rng, 16));
  }
};

const Field& field() {
  static const Field f;
  return f;
}

template <bool Parallel>
void BM_evaluate_grid(benchmark::State& state) {
  const auto& f = field();
  const int n = static_cast<int>(state.range(0));
  std::vector<double> values(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::evaluate_grid(f.h, f.inst.domain, n, values);
    else
      kernels::evaluate_grid_serial(f.h, f.inst.domain, n, values);
    benchmark::DoNotOptimize(values.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(values.size()));
}

template <bool Parallel>
void BM_map_sum(benchmark::State& state) {
  const auto& f = field();
  RngStream rng(2);
  const auto mu = random_measure(f.inst, rng, 16);
  const auto draws = draw_batch(f.inst, static_cast<std::size_t>(state.range(0)), rng);
  const auto F = f.inst.sample_objective;
  auto term = [&](std::size_t j) { return F(mu, draws[j]); };
  for (auto _ : state) {
    double s = Parallel ? kernels::map_sum(draws.size(), term) : kernels::map_sum_serial(draws.size(), term);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_evaluate_grid<false>)->Arg(32)->Arg(128);
BENCHMARK(BM_evaluate_grid<true>)->Arg(32)->Arg(128);
BENCHMARK(BM_map_sum<false>)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_map_sum<true>)->Arg(1 << 12)->Arg(1 << 16);

BENCHMARK_MAIN();
