#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include "zevsim/equity.hpp"
#include "zevsim/hubpipe.hpp"
#include "zevsim/inventory.hpp"
#include "zevsim/mobsim/charger.hpp"
#include "zevsim/mobsim/simulation.hpp"
#include "zevsim/scenario.hpp"

using namespace zevsim;

namespace {

const std::filesystem::path kData = ZEVSIM_BENCH_DATA_DIR;

const BaselineDataset& houston() {
  static const auto ds = load_baseline_dataset(kData / "inventory" / "houston-2014");
  return ds;
}

const mobsim::World& demo() {
  static const auto w = mobsim::load_world(kData / "worlds" / "demo");
  return w;
}

void BM_BuildBaseline(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(build_baseline(houston()).on_road_total());
}
BENCHMARK(BM_BuildBaseline);

void BM_ApplyScenario(benchmark::State& state) {
  const auto inv = build_baseline(houston());
  const auto spec = load_scenario(kData / "scenarios" / "scenario4.json");
  for (auto _ : state) benchmark::DoNotOptimize(apply_scenario(inv, spec, houston().base_population).mtco2e.back());
}
BENCHMARK(BM_ApplyScenario);

void BM_EquityIndex(benchmark::State& state) {
  const auto tracts = load_tracts(kData / "tracts" / "houston-tracts.csv");
  for (auto _ : state) benchmark::DoNotOptimize(compute_equity_index(tracts).scores.size());
}
BENCHMARK(BM_EquityIndex);

void BM_ChargerQueueHour(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::exponential_distribution<double> gap(4.0 / 60.0), svc(1.0 / 20.0);
  for (auto _ : state) {
    mobsim::ChargerQueueState s;
    s.ports = 2;
    double next = gap(rng);
    std::uint64_t id = 0;
    std::vector<mobsim::ChargerArrival> arr;
    for (int t = 0; t < 60; ++t) {
      arr.clear();
      while (next < t + 1.0) {
        arr.push_back({next, svc(rng), ++id});
        next += gap(rng);
      }
      s = mobsim::charger_queue_step(s, arr, 1.0).state;
    }
    benchmark::DoNotOptimize(s.mean_wait());
  }
}
BENCHMARK(BM_ChargerQueueHour);

void BM_SimulateDemoDay(benchmark::State& state) {
  const auto& w = demo();
  const auto levers = mobsim::default_levers(w.config);
  for (auto _ : state) benchmark::DoNotOptimize(mobsim::simulate_day(w, levers, houston().factors, 7).total_vmt);
}
BENCHMARK(BM_SimulateDemoDay)->Unit(benchmark::kMillisecond);

void BM_PipelineIngest(benchmark::State& state) {
  using namespace hubpipe;
  std::vector<TelemetryRecord> records;
  for (int i = 0; i < state.range(0); ++i) {
    TelemetryRecord r;
    r.source = Source::ChargerPort;
    r.device_id = "port-" + std::to_string(i % 16);
    r.hub_id = "H1";
    r.timestamp = i * 60;
    r.payload.occupied = i % 3 == 0;
    records.push_back(r);
  }
  const std::vector<ZoneCentroid> zones{{"Z01", 29.7, -95.5}};
  for (auto _ : state) {
    Pipeline p({"bench-key"}, zones);
    benchmark::DoNotOptimize(p.ingest(records).stored);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PipelineIngest)->Arg(10'000);

}  // namespace

BENCHMARK_MAIN();
