#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

#include "mocha/graph.hpp"
#include "mocha/intensity.hpp"
#include "mocha/likelihood.hpp"
#include "mocha/simulation.hpp"

namespace {

mocha::EventSequence random_sequence(int K, int n, double T, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> time(0.0, T);
  std::uniform_int_distribution<int> type(0, K - 1);
  std::vector<double> ts(static_cast<std::size_t>(n));
  for (double& t : ts) t = time(rng);
  std::sort(ts.begin(), ts.end());
  mocha::EventSequence seq;
  seq.id = "bench";
  seq.horizon = T;
  for (double t : ts) seq.events.push_back({t, type(rng)});
  return seq;
}

mocha::HyperParameters bench_hp(int K, mocha::Variant v) {
  auto hp = mocha::default_hyperparameters(K);
  hp.variant = v;
  return hp;
}

void BM_IntensityEvaluate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto hp = bench_hp(5, mocha::Variant::FullDynamic);
  const auto params = mocha::init_parameters(hp, 1);
  const auto seq = random_sequence(hp.K, n, 10.0, 2);
  mocha::IntensityEvaluator evaluator(params, hp);
  for (const auto& e : seq.events) evaluator.push(e);
  for (auto _ : state) benchmark::DoNotOptimize(evaluator.evaluate(10.0));
  state.SetComplexityN(n);
}
BENCHMARK(BM_IntensityEvaluate)->RangeMultiplier(2)->Range(8, 128)->Complexity();

void BM_OrderIntensityDp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto hp = bench_hp(5, mocha::Variant::FullDynamic);
  const auto params = mocha::init_parameters(hp, 1);
  const auto seq = random_sequence(hp.K, n, 10.0, 2);
  const auto Wt = mocha::query_weights(seq.events, 10.0, params, hp);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mocha::order_intensity_dp(seq.events, 10.0, hp.L, Wt, params));
  }
}
BENCHMARK(BM_OrderIntensityDp)->RangeMultiplier(2)->Range(8, 64);

void BM_LossAndGradient(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto variant = static_cast<mocha::Variant>(state.range(1));
  const auto hp = bench_hp(5, variant);
  const auto params = mocha::init_parameters(hp, 1);
  const std::vector<mocha::EventSequence> batch{random_sequence(hp.K, n, 10.0, 3)};
  for (auto _ : state) benchmark::DoNotOptimize(mocha::loss_and_gradient(batch, params, hp));
}
BENCHMARK(BM_LossAndGradient)
    ->ArgsProduct({{8, 16, 32}, {static_cast<long>(mocha::Variant::HawkesMulti),
                                 static_cast<long>(mocha::Variant::MultiOrderStatic),
                                 static_cast<long>(mocha::Variant::FullDynamic)}});

void BM_Acyclicity(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 0.5);
  Eigen::MatrixXd W(K, K);
  for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(mocha::acyclicity(W));
}
BENCHMARK(BM_Acyclicity)->DenseRange(2, 10, 4);

void BM_SimulatePlanted(benchmark::State& state) {
  mocha::PlantedGenerator g;
  g.K = 5;
  g.mu.assign(5, 0.2);
  g.decay_rate = 1.0;
  g.edges = {{0, 1, 0.5}, {1, 2, 0.5}, {2, 3, 0.4}, {0, 4, 0.3}};
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(mocha::simulate(g, 50.0, seed++));
}
BENCHMARK(BM_SimulatePlanted);

}  // namespace

BENCHMARK_MAIN();
