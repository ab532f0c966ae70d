#include <benchmark/benchmark.h>

#include <random>

#include "littriage/decision.hpp"
#include "littriage/metrics.hpp"
#include "littriage/scorer.hpp"

using namespace littriage;

namespace {

std::vector<double> random_scores(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

void BM_DecideMulticlass(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto scores = random_scores(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(decide_multiclass(scores));
}
BENCHMARK(BM_DecideMulticlass)->Arg(3)->Arg(10)->Arg(100);

void BM_DecideMultilabel(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto scores = random_scores(rng, static_cast<std::size_t>(state.range(0)));
  const auto thresholds = ThresholdConfig::uniform(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(decide_multilabel(scores, thresholds));
}
BENCHMARK(BM_DecideMultilabel)->Arg(3)->Arg(10)->Arg(100);

void BM_AucBinary(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto scores = random_scores(rng, n);
  std::vector<bool> positive(n);
  for (std::size_t i = 0; i < n; ++i) positive[i] = i % 3 == 0;
  for (auto _ : state) benchmark::DoNotOptimize(auc_binary(scores, positive));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_AucBinary)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

void BM_MulticlassMetrics(benchmark::State& state) {
  std::mt19937_64 rng(4);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::size_t> gold(n), pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    gold[i] = rng() % 5;
    pred[i] = rng() % 5;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(multiclass_metrics(confusion_matrix(pred, gold, 5)));
  }
}
BENCHMARK(BM_MulticlassMetrics)->Arg(1000)->Arg(100000);

void BM_SweepThresholds(benchmark::State& state) {
  std::mt19937_64 rng(5);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<LabelScores> preds;
  std::vector<std::vector<std::size_t>> gold;
  for (std::size_t i = 0; i < n; ++i) {
    preds.push_back(LabelScores{random_scores(rng, 4)});
    gold.push_back({rng() % 4});
  }
  const auto grid = default_threshold_grid();
  for (auto _ : state) benchmark::DoNotOptimize(sweep_thresholds(preds, gold, 4, grid));
}
BENCHMARK(BM_SweepThresholds)->Arg(200)->Arg(5000);

void BM_MockScore(benchmark::State& state) {
  const ScoreRequest request{
      "We trained a convolutional neural network on retinal fundus photographs from a multicentre cohort "
      "and compared its grading with clinicians on held-out patients.",
      {"clinical trial with patients", "neural network algorithm", "systematic review of literature"}};
  for (auto _ : state) benchmark::DoNotOptimize(mock_score(request));
}
BENCHMARK(BM_MockScore);

}  // namespace

BENCHMARK_MAIN();
