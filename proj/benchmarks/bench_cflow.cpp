#include <benchmark/benchmark.h>

#include <random>

#include "cflow/eval.hpp"
#include "cflow/flow_map.hpp"
#include "cflow/hypothesizer.hpp"
#include "cflow/metric.hpp"
#include "cflow/synth.hpp"

namespace {

cflow::FlowMap make_map(std::int32_t w, std::int32_t h, std::uint32_t seed) {
  cflow::FlowMap map;
  map.width = w;
  map.height = h;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> dist(-8.0f, 8.0f);
  map.u.resize(static_cast<std::size_t>(w) * h);
  map.v.resize(map.u.size());
  for (auto& f : map.u) f = dist(rng);
  for (auto& f : map.v) f = dist(rng);
  return map;
}

cflow::ScenarioSpec bench_spec() {
  cflow::ScenarioSpec spec;
  spec.name = "bench";
  spec.image_w = 320;
  spec.image_h = 240;
  spec.n_frames = 24;
  spec.background_u = 0.2;
  spec.ped_start = {40.0, 60.0, 28.0, 64.0};
  spec.ped_velocity = {2.0, 0.4};
  spec.growth_rate = 1.02;
  spec.ped_u0 = 3.0;
  spec.ped_u_slope = 0.1;
  spec.noise_std = 0.05;
  spec.seed = 7;
  return spec;
}

void BM_ParseFlo(benchmark::State& state) {
  const auto bytes = cflow::write_flo(make_map(512, 512, 1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(cflow::parse_flo(bytes));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_ParseFlo);

void BM_WriteFlo(benchmark::State& state) {
  const auto map = make_map(512, 512, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cflow::write_flo(map));
  }
}
BENCHMARK(BM_WriteFlo);

void BM_MedianFlow(benchmark::State& state) {
  const auto map = make_map(960, 640, 3);
  const cflow::BBox box{200.25, 100.5, static_cast<double>(state.range(0)),
                        static_cast<double>(state.range(0)) * 2.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(cflow::median_flow(map, box));
  }
}
BENCHMARK(BM_MedianFlow)->Arg(32)->Arg(128);

void BM_CFlowWindow(benchmark::State& state) {
  std::vector<cflow::WindowSample> window;
  for (int i = 0; i <= 5; ++i) {
    const double f = static_cast<double>(i);
    window.push_back({0.1 * f, i,
                      cflow::BBox{10.0 + 2.0 * f, 20.0, 14.0 + f, 30.0 + f},
                      3.0 + 0.1 * f + (i == 3 ? 0.4 : 0.0),
                      cflow::BoxSource::GT});
  }
  const cflow::CFlowParams params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cflow::cflow(window, params));
  }
}
BENCHMARK(BM_CFlowWindow);

void BM_HypothesizeBox(benchmark::State& state) {
  cflow::HypothesisInput input;
  for (const std::int64_t f : {0, 1, 3, 4}) {
    const double d = static_cast<double>(f);
    input.detections.emplace_back(
        f, cflow::BBox{100.0 + 8.0 * d, 50.0 + 0.5 * d, 14.0, 30.0});
  }
  input.target_frame = 5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cflow::hypothesize_box(input));
  }
}
BENCHMARK(BM_HypothesizeBox);

void BM_Generate(benchmark::State& state) {
  const auto spec = bench_spec();
  for (auto _ : state) {
    benchmark::DoNotOptimize(cflow::generate(spec));
  }
}
BENCHMARK(BM_Generate);

void BM_ScoreTracks(benchmark::State& state) {
  const auto spec = bench_spec();
  const auto scen = cflow::generate(spec);
  cflow::MemoryFlowStore store;
  cflow::stage_scenario(scen, store);
  const std::vector<cflow::Track> tracks{scen.track};
  cflow::ScoreOptions options;
  options.jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(cflow::score_tracks(tracks, store, options));
  }
}
BENCHMARK(BM_ScoreTracks)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
