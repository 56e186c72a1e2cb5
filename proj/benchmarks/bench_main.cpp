#include <benchmark/benchmark.h>

#include "mapc/environment.hpp"
#include "mapc/experiment.hpp"
#include "mapc/optimizer.hpp"

using namespace mapc;

namespace {

const Deployment& deployment() {
  static const Deployment d = generate_deployment(TopologyConfig{}, ChannelParams{}, 1);
  return d;
}

TxopAction all_active(const Deployment& d, const SimParams& p) {
  TxopAction a;
  a.per_ap_schedule.assign(d.n_aps(), std::nullopt);
  for (std::size_t j = 0; j < d.n_aps(); ++j)
    a.per_ap_schedule[j] = ApAssignment{d.stas_of(j)[0], p.grid.max_level(), 4};
  a.sharing_sta = d.stas_of(0)[0];
  return a;
}

}  // namespace

static void BM_ApplyAction(benchmark::State& state) {
  const auto& d = deployment();
  SimParams p;
  const auto a = all_active(d, p);
  for (auto _ : state) benchmark::DoNotOptimize(apply_action(a, d, p, 10.0));
}
BENCHMARK(BM_ApplyAction);

static void BM_SelectWithNoise(benchmark::State& state) {
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.001 * static_cast<double>(i % 97);
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(select_with_noise(v, 0.3, rng, Phase::Train));
}
BENCHMARK(BM_SelectWithNoise)->Arg(32)->Arg(480)->Arg(4096);

static void BM_HierarchicalTxop(benchmark::State& state) {
  const auto& d = deployment();
  SimParams p;
  HierarchicalPolicy pol(d, p, HierarchyConfig{}, Rng(2));
  Rng sta(3);
  std::size_t k = 0;
  for (auto _ : state) {
    TxopContext ctx{k, sharing_ap_for(k, d.n_aps()), 0};
    ctx.sharing_sta = sample_scheduled_sta(ctx.sharing_ap, d, sta);
    const auto a = pol.act(ctx);
    pol.observe(a, apply_action(a, d, p, pol.qos_target(), QosScope::AllLinks));
    ++k;
  }
}
BENCHMARK(BM_HierarchicalTxop);

static void BM_Episode(benchmark::State& state) {
  ExperimentConfig c;
  c.horizon_txops = static_cast<std::size_t>(state.range(0));
  const auto& d = deployment();
  for (auto _ : state) benchmark::DoNotOptimize(run_algorithm("hier_proportional", c, d, 1).summary);
}
BENCHMARK(BM_Episode)->Arg(5000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
