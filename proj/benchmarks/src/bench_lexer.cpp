#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "pdfscan/baseline.hpp"
#include "pdfscan/rng.hpp"

namespace {

using namespace pdfscan;

// Tag-dense input: the worst case for the name lexer.
std::vector<std::uint8_t> tag_soup(std::size_t n, std::uint64_t seed) {
  static const char* tags[] = {"/Type ", "/Page ", "/JavaScript ", "/Count ",
                               "/J#61vaScript ", "<</Kids [1 0 R]>> "};
  Rng rng(seed);
  std::vector<std::uint8_t> bytes;
  bytes.reserve(n + 32);
  while (bytes.size() < n) {
    const char* t = tags[rng.next_u64() % (sizeof(tags) / sizeof(tags[0]))];
    while (*t) bytes.push_back(static_cast<std::uint8_t>(*t++));
  }
  bytes.resize(n);
  return bytes;
}

void bench_lex_tags(benchmark::State& state) {
  const auto bytes = tag_soup(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(baseline::lex_tags(bytes));
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bench_lex_tags)->Arg(4'096)->Arg(200'000);

void bench_tag_histogram(benchmark::State& state) {
  const auto bytes = tag_soup(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(baseline::tag_histogram(bytes));
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bench_tag_histogram)->Arg(200'000);

}  // namespace
