#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "pdfscan/model.hpp"
#include "pdfscan/rng.hpp"

namespace {

using namespace pdfscan;

std::vector<std::uint8_t> random_bytes(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> bytes(n);
  for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.next_u64() & 0xff);
  return bytes;
}

// End-to-end single-file scoring per architecture, at a desk-scale input
// window (the full 200 kB window scales linearly from here).
void bench_score(benchmark::State& state, models::ArchitectureId arch) {
  models::ModelConfig cfg = models::ModelConfig::canonical(arch);
  cfg.input_length = static_cast<int>(state.range(0));
  const models::Network net(cfg, 7);
  const auto bytes =
      random_bytes(static_cast<std::size_t>(cfg.input_length), 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.score(bytes));
  }
  state.SetBytesProcessed(state.iterations() * cfg.input_length);
}

void bench_score_arch_a(benchmark::State& state) {
  bench_score(state, models::ArchitectureId::A);
}
void bench_score_arch_b(benchmark::State& state) {
  bench_score(state, models::ArchitectureId::B);
}
void bench_score_arch_c(benchmark::State& state) {
  bench_score(state, models::ArchitectureId::C);
}
BENCHMARK(bench_score_arch_a)->Arg(20'000)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_score_arch_b)->Arg(20'000)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_score_arch_c)->Arg(20'000)->Unit(benchmark::kMillisecond);

}  // namespace
