#include <benchmark/benchmark.h>

#include <random>

#include "autopk/embedding.hpp"
#include "autopk/evaluation.hpp"
#include "autopk/pk_record.hpp"
#include "autopk/variant_pipeline.hpp"

using namespace autopk;

namespace {

NormalizedTable synthetic_table(std::size_t rows, std::size_t cols, unsigned seed) {
  std::mt19937 rng(seed);
  const std::vector<std::string> pool{"T1/2", "Half-life (h)", "Cmax", "AUC0-inf", "12.5",
                                      "oral", "plasma", "chicken", "10 mg/kg", "Tmax"};
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  NormalizedTable t;
  t.provenance_id = "bench";
  for (std::size_t c = 0; c < cols; ++c) t.header.push_back("col" + std::to_string(c));
  for (std::size_t r = 0; r < rows; ++r) {
    csv::Row row;
    for (std::size_t c = 0; c < cols; ++c) row.push_back(pool[pick(rng)]);
    t.rows.push_back(row);
  }
  return t;
}

void BM_ScanTable(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto table = synthetic_table(rows, 8, 3);
  VariantRegistry registry(PkParameter{"half_life", "half-life", {}, {}});
  for (const char* v : {"T1/2", "Half-life", "HL", "T1/2 el", "elimination half-life"}) {
    registry.add({v, VariantProvenance::kSeed, 1.0, ""}, "seeded");
  }
  HashedNgramEmbedder inner;
  CachingEmbeddingProvider embed(std::shared_ptr<EmbeddingProvider>(&inner, [](auto*) {}));
  for (auto _ : state) {
    ComponentCache cache;
    benchmark::DoNotOptimize(scan_table(table, registry, {}, embed, &cache));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(rows * 8));
}
BENCHMARK(BM_ScanTable)->Arg(10)->Arg(100);

void BM_EvaluateTable(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  auto gt = synthetic_table(rows, kPkFieldCount, 5);
  gt.header = pk_header();
  auto gen = gt;
  std::mt19937 rng(7);
  std::shuffle(gen.rows.begin(), gen.rows.end(), rng);
  HashedNgramEmbedder embed;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_table(gen, gt, {}, embed));
}
BENCHMARK(BM_EvaluateTable)->Arg(10)->Arg(50);

}  // namespace
BENCHMARK_MAIN();
