#include <benchmark/benchmark.h>

#include <vector>

#include "pdfscan/cluster.hpp"
#include "pdfscan/rng.hpp"

namespace {

using namespace pdfscan;

// Gaussian-ish blobs in 128 dimensions, the clustering feature width.
cluster::FeatureMatrix make_blobs(int n, int dims, std::uint64_t seed) {
  Rng rng(seed);
  cluster::FeatureMatrix X(static_cast<std::size_t>(n),
                           std::vector<double>(static_cast<std::size_t>(dims)));
  for (int i = 0; i < n; ++i) {
    const double center = (i % 4) * 10.0;
    for (int d = 0; d < dims; ++d) {
      X[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] =
          center + rng.next_double() - 0.5;
    }
  }
  return X;
}

void bench_hdbscan(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto X = make_blobs(n, 128, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cluster::hdbscan(X, 10));
  }
}
BENCHMARK(bench_hdbscan)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);

void bench_mst(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto X = make_blobs(n, 128, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cluster::mutual_reachability_mst(X, 10));
  }
}
BENCHMARK(bench_mst)->Arg(500)->Unit(benchmark::kMillisecond);

void bench_project_2d(benchmark::State& state) {
  const auto X = make_blobs(static_cast<int>(state.range(0)), 128, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cluster::project_2d(X));
  }
}
BENCHMARK(bench_project_2d)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace
