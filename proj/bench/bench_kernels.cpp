// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <map>
#include <set>
#include <tuple>

#include "mdvt/kernels.hpp"
#include "mdvt/rng.hpp"

using namespace mdvt;

namespace {

struct Problem {
  InteractionGraph graph;
  std::vector<double> coef;
  Matrix table;
  Matrix users;
  Matrix items;
  std::vector<double> item_norms;
};

// Bipartite graph with ~deg edges per user, dense tables of width d.
const Problem& problem(std::size_t nu, std::size_t ni, std::size_t deg, std::size_t d) {
  static std::map<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>, Problem> cache;
  auto& p = cache[{nu, ni, deg, d}];
  if (p.table.rows) return p;
  Rng rng(7);
  std::vector<Interaction> edges;
  for (std::uint32_t u = 0; u < nu; ++u) {
    std::set<std::uint32_t> picked;
    while (picked.size() < deg) picked.insert(static_cast<std::uint32_t>(rng.below(ni)));
    for (auto i : picked) edges.push_back({u, i});
  }
  p.graph = InteractionGraph(nu, ni, edges);
  p.coef = kernels::propagation_coefficients(p.graph, kernels::Norm::kInvDegree);
  p.table = Matrix(nu + ni, d);
  for (auto& x : p.table.data) x = rng.normal();
  p.users = Matrix(256, d);
  for (auto& x : p.users.data) x = rng.normal();
  p.items = Matrix(ni, d);
  for (auto& x : p.items.data) x = rng.normal();
  p.item_norms = kernels::row_norms(p.items);
  return p;
}

template <bool Parallel>
void BM_Propagate(benchmark::State& state) {
  const auto& p = problem(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(0)) / 2, 20, 64);
  Matrix out;
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::parallel::propagate(p.graph, p.coef, p.table, out);
    else
      kernels::serial::propagate(p.graph, p.coef, p.table, out);
    benchmark::DoNotOptimize(out.data.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.graph.num_edges()) * 2);
}

template <bool Parallel>
void BM_DotRows(benchmark::State& state) {
  const auto& p = problem(1000, static_cast<std::size_t>(state.range(0)), 5, 64);
  Matrix out;
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::parallel::dot_rows(p.users, p.items, out);
    else
      kernels::serial::dot_rows(p.users, p.items, out);
    benchmark::DoNotOptimize(out.data.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.users.rows * p.items.rows));
}

template <bool Parallel>
void BM_CosineRows(benchmark::State& state) {
  const auto& p = problem(1000, static_cast<std::size_t>(state.range(0)), 5, 64);
  Matrix out;
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::parallel::cosine_rows(p.users, p.items, p.item_norms, out);
    else
      kernels::serial::cosine_rows(p.users, p.items, p.item_norms, out);
    benchmark::DoNotOptimize(out.data.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.users.rows * p.items.rows));
}

}  // namespace

BENCHMARK(BM_Propagate<false>)->Name("propagate/serial")->Arg(2000)->Arg(20000);
BENCHMARK(BM_Propagate<true>)->Name("propagate/parallel")->Arg(2000)->Arg(20000);
BENCHMARK(BM_DotRows<false>)->Name("dot_rows/serial")->Arg(1000)->Arg(10000);
BENCHMARK(BM_DotRows<true>)->Name("dot_rows/parallel")->Arg(1000)->Arg(10000);
BENCHMARK(BM_CosineRows<false>)->Name("cosine_rows/serial")->Arg(1000)->Arg(10000);
BENCHMARK(BM_CosineRows<true>)->Name("cosine_rows/parallel")->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
