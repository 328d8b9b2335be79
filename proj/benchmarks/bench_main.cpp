#include <benchmark/benchmark.h>

#include <cmath>

#include "risnet/baselines.hpp"
#include "risnet/training.hpp"

using namespace risnet;

namespace {

ScenarioConfig scenario(std::uint32_t m, std::uint32_t n, std::uint32_t u, double rho) {
  ScenarioConfig s;
  s.dims = {m, n, u};
  s.rho = rho;
  s.n_train = 8;
  s.n_test = 8;
  return s;
}

RisnetConfig network(Variant v, std::uint32_t users) {
  RisnetConfig c;
  c.variant = v;
  c.users = users;
  c.branch_dim = v == Variant::kPermutationVariant ? 16 : 8;
  return c;
}

// args: variant (0 pv, 1 pi), N
void BM_Forward(benchmark::State& state) {
  const auto v = static_cast<Variant>(state.range(0));
  const auto n = static_cast<std::uint32_t>(state.range(1));
  const Dataset ds = sample_dataset(scenario(9, n, 4, 1e12), Split::kTrain);
  const RisnetParams p = init_params(network(v, 4));
  const ChannelSample s = ds.sample(0);
  for (auto _ : state) benchmark::DoNotOptimize(forward(p, s.gamma));
  state.SetLabel(variant_name(v));
}
BENCHMARK(BM_Forward)->ArgsProduct({{0, 1}, {64, 1024}})->Unit(benchmark::kMillisecond);

// Forward, WMMSE and backward for one sample.
void BM_SampleGradient(benchmark::State& state) {
  const auto v = static_cast<Variant>(state.range(0));
  const auto n = static_cast<std::uint32_t>(state.range(1));
  const ScenarioConfig sc = scenario(9, n, 4, 1e12);
  const Dataset ds = sample_dataset(sc, Split::kTrain);
  const RisnetParams p = init_params(network(v, 4));
  const ChannelSample s = ds.sample(0);
  for (auto _ : state) benchmark::DoNotOptimize(sample_gradient(p, s, sc));
  state.SetLabel(variant_name(v));
}
BENCHMARK(BM_SampleGradient)->ArgsProduct({{0, 1}, {64, 1024}})->Unit(benchmark::kMillisecond);

// args: M, U
void BM_Wmmse(benchmark::State& state) {
  const auto m = static_cast<std::uint32_t>(state.range(0));
  const auto u = static_cast<std::uint32_t>(state.range(1));
  const ScenarioConfig sc = scenario(m, 64, u, 100.0);
  const Dataset ds = sample_dataset(sc, Split::kTrain);
  const ChannelSample s = ds.sample(0);
  const ComplexMat a = composite_channel(s.g, ComplexMat::Ones(1, 64), *s.h, s.d);
  const auto alpha = sc.weights();
  for (auto _ : state) benchmark::DoNotOptimize(wmmse_precode(a, alpha, sc.rho, sc.e_tr));
}
BENCHMARK(BM_Wmmse)->ArgsProduct({{4, 9}, {2, 4}})->Unit(benchmark::kMicrosecond);

// args: rho exponent; desk dimensions, K = 16, 5 sweeps.
void BM_Bcd(benchmark::State& state) {
  const double rho = std::pow(10.0, static_cast<double>(state.range(0)));
  const ScenarioConfig sc = scenario(4, 64, 2, rho);
  const Dataset ds = sample_dataset(sc, Split::kTest);
  BcdConfig cfg;
  cfg.grid_size = 16;
  cfg.max_outer_sweeps = 5;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bcd_optimize(ds.sample(i++ % ds.size()), sc, cfg));
  }
}
BENCHMARK(BM_Bcd)->Arg(-1)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
