#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "autopk/embedding.hpp"
#include "autopk/similarity.hpp"

using namespace autopk;

namespace {

std::vector<std::string> words(std::size_t n, std::size_t len) {
  std::mt19937 rng(1);
  std::uniform_int_distribution<int> ch('a', 'z');
  std::vector<std::string> out(n);
  for (auto& w : out) {
    for (std::size_t i = 0; i < len; ++i) w.push_back(static_cast<char>(ch(rng)));
  }
  return out;
}

void BM_Levenshtein(benchmark::State& state) {
  const auto w = words(64, static_cast<std::size_t>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(levenshtein_similarity(w[i % 64], w[(i + 1) % 64]));
    ++i;
  }
}
BENCHMARK(BM_Levenshtein)->Arg(8)->Arg(32)->Arg(128);

void BM_TokenOverlap(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(token_overlap("elimination half-life (h)", "half_life t1/2 el"));
  }
}
BENCHMARK(BM_TokenOverlap);

void BM_HashedEmbed(benchmark::State& state) {
  HashedNgramEmbedder embed;
  for (auto _ : state) benchmark::DoNotOptimize(embed.embed("terminal elimination half-life"));
}
BENCHMARK(BM_HashedEmbed);

void BM_Hybrid(benchmark::State& state) {
  HashedNgramEmbedder inner;
  const SimilarityWeights w;
  for (auto _ : state) {
    benchmark::DoNotOptimize(hybrid_similarity("T1/2 el (h)", "Half-life", w, inner));
  }
}
BENCHMARK(BM_Hybrid);

}  // namespace
