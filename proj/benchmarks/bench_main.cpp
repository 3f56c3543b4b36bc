#include <benchmark/benchmark.h>

#include "s2fgl/federation.hpp"
#include "s2fgl/graph.hpp"
#include "s2fgl/louvain.hpp"
#include "s2fgl/ppr.hpp"
#include "s2fgl/spectral.hpp"
#include "s2fgl/warnings.hpp"

namespace {

s2fgl::Graph make_graph(int n) {
  const int block = n / 4;
  return s2fgl::sbm_generate({block, block, block, n - 3 * block}, 0.08, 0.01, 16,
                             1234);
}

void BM_ppr_direct(benchmark::State& state) {
  const s2fgl::Graph g = make_graph(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(s2fgl::ppr(g, 0.85, false).values.data().data());
  }
}
BENCHMARK(BM_ppr_direct)->Arg(100)->Arg(300)->Arg(600);

void BM_ppr_iterative(benchmark::State& state) {
  const s2fgl::Graph g = make_graph(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(s2fgl::ppr_iterative(g, 0.85, false, 1e-8).values.data().data());
  }
}
BENCHMARK(BM_ppr_iterative)->Arg(100)->Arg(300)->Arg(600);

void BM_jacobi_extremes(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  s2fgl::Rng rng(7);
  s2fgl::DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double v = rng.normal();
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(s2fgl::extreme_eigenpairs(m, 4).low_vals.data());
  }
}
BENCHMARK(BM_jacobi_extremes)->Arg(32)->Arg(64)->Arg(128);

void BM_louvain_partition(benchmark::State& state) {
  const s2fgl::Graph g = make_graph(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(s2fgl::louvain_partition(g, 10, 99).assignment.data());
  }
}
BENCHMARK(BM_louvain_partition)->Arg(300)->Arg(1000);

void BM_sparse_self_similarity(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  s2fgl::Rng rng(11);
  s2fgl::DenseMatrix features(n, 32);
  for (double& v : features.data()) v = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(s2fgl::sparse_self_similarity(features, 10).s_prime.data().data());
  }
}
BENCHMARK(BM_sparse_self_similarity)->Arg(64)->Arg(256);

void BM_federated_round(benchmark::State& state) {
  s2fgl::set_warning_handler([](const std::string&) {});
  const s2fgl::Graph g = make_graph(200);
  s2fgl::RunConfig cfg;
  cfg.method = state.range(0) == 0 ? s2fgl::Method::kFedAvg : s2fgl::Method::kS2fgl;
  cfg.num_clients = 4;
  cfg.hidden = 32;
  s2fgl::Federation fed = s2fgl::setup_federation(g, cfg, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        s2fgl::run_round(fed.server, fed.clients, cfg, 5, fed.sis_value).accuracy);
  }
}
BENCHMARK(BM_federated_round)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
