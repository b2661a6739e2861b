#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "pdfscan/layers.hpp"
#include "pdfscan/rng.hpp"

namespace {

using namespace pdfscan;
using namespace pdfscan::nn;

std::vector<std::uint8_t> random_bytes(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> bytes(n);
  for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.next_u64() & 0xff);
  return bytes;
}

// Byte embedding lookup over a full-length input window.
void bench_embedding_forward(benchmark::State& state) {
  const int length = static_cast<int>(state.range(0));
  Embedding embed;
  Rng rng(1);
  embed.init(rng);
  const auto bytes = random_bytes(static_cast<std::size_t>(length), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(embed.forward(bytes, length));
  }
  state.SetBytesProcessed(state.iterations() * length);
}
BENCHMARK(bench_embedding_forward)->Arg(20'000)->Arg(200'000);

// The dominant cost of scoring: the first conv stage at production shape
// (window 16, stride 4, 128 kernels over 16 embedding channels).
void bench_conv_forward(benchmark::State& state) {
  const int length = static_cast<int>(state.range(0));
  Embedding embed;
  Conv1D conv;
  conv.window = 16;
  conv.stride = 4;
  conv.kernels = 128;
  conv.in_channels = 16;
  Rng rng(1);
  embed.init(rng);
  conv.init(rng);
  const auto bytes = random_bytes(static_cast<std::size_t>(length), 2);
  const Tensor2D x = embed.forward(bytes, length);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv.forward(x));
  }
  state.SetBytesProcessed(state.iterations() * length);
}
BENCHMARK(bench_conv_forward)->Arg(20'000)->Arg(200'000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
