#include <benchmark/benchmark.h>

#include "abmgp/hawkdove.hpp"
#include "abmgp/kernels.hpp"
#include "abmgp/rebellion.hpp"

using namespace abmgp;

namespace {

struct Fixture {
  ReferenceDataset data;
  std::vector<std::size_t> rows;
  Rule rule;

  Fixture() {
    data = record_dataset(default_record_configs(1));
    rows = filter_rows(data, BreedFilter::Citizens);
    rule = ground_truth_rule(RebStep::A);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_ConfusionReference(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(confusion_reference(f.rule, f.data, "activeLabel", f.rows));
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(f.rows.size()));
}

void BM_ConfusionBatched(benchmark::State& state) {
  const Fixture& f = fixture();
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(confusion_batched(f.rule, f.data, "activeLabel", f.rows, workers));
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(f.rows.size()));
}

// One hawk-dove fitness per index, the population-scoring shape.
double hd_score(std::size_t i) {
  static const HDConfig c;
  static const WealthDistribution ref = make_reference(ReferenceKind::TwoTier, c);
  static const Rule r = parse_rule("IF previousTook >= 1 THEN 1 ELSE 9");
  HDConfig ci = c;
  ci.seed = i + 1;
  return hd_fitness(r, ref, ci, 1);
}

void BM_MapSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(map_serial(64, hd_score));
}

void BM_MapParallel(benchmark::State& state) {
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(map_parallel(64, hd_score, workers));
}

}  // namespace

BENCHMARK(BM_ConfusionReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConfusionBatched)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MapSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MapParallel)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
