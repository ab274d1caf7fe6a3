#include <benchmark/benchmark.h>

#include "facetrace/knn.hpp"
#include "facetrace/planar_map.hpp"
#include "facetrace/raytrace.hpp"
#include "facetrace/synth.hpp"

using namespace facetrace;

namespace {

void BM_KnnIndex(benchmark::State& state) {
  const auto scene = synth::six_plane_scene(0.05, static_cast<double>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(knn_index(scene.cloud, 30));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(scene.cloud.size()));
}
BENCHMARK(BM_KnnIndex)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_MapFromCloud(benchmark::State& state) {
  const auto scene = synth::six_plane_scene(0.05, 20.0, 1);
  planar::BuildParams params;
  params.segmentation.workers = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(planar::map_from_cloud(scene.cloud, params));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(scene.cloud.size()));
}
BENCHMARK(BM_MapFromCloud)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

// One epoch against a mixed-height street, with and without the height band.
void BM_ClassifyEpoch(benchmark::State& state) {
  PlanarMap map = synth::mixed_height_scene(static_cast<std::size_t>(state.range(0)), 0.8, 40.0, 11).to_map();
  if (state.range(1)) map = planar::filter_by_height(map, 10.0, 60.0);
  const Vec3 r(0.0, 0.0, 1.5);
  const auto sats = synth::random_satellites(32, 5.0, 3, r);
  for (auto _ : state) {
    for (const auto& s : sats) benchmark::DoNotOptimize(raytrace::classify(s, r, map));
  }
  state.counters["facets"] = static_cast<double>(map.facets.size());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ClassifyEpoch)->Args({500, 0})->Args({500, 1})->Args({2000, 0})->Args({2000, 1});

}  // namespace

BENCHMARK_MAIN();
