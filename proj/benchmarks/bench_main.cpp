#include <benchmark/benchmark.h>

#include <chrono>
#include <cmath>
#include <vector>

#include "cropmap/cube.hpp"
#include "cropmap/forest.hpp"
#include "cropmap/pipeline.hpp"
#include "cropmap/polygon.hpp"
#include "cropmap/sampling.hpp"
#include "cropmap/scene.hpp"
#include "cropmap/synth.hpp"

using namespace cropmap;
using namespace std::chrono;

namespace {

// Two scenes per polarization in each of 36 dekads.
std::vector<SceneGrid> year_of_scenes(const GridGeometry& g) {
  std::vector<SceneGrid> out;
  for (unsigned m = 1; m <= 12; ++m)
    for (unsigned d : {3u, 8u, 13u, 18u, 23u, 27u}) {
      const year_month_day date{year{2018}, month{m}, day{d}};
      out.push_back(SceneGrid::filled(g, date, Polarization::VV, 0.05f + 0.001f * d));
      out.push_back(SceneGrid::filled(g, date, Polarization::VH, 0.01f + 0.0002f * d));
    }
  return out;
}

const SyntheticOutput& synthetic() {
  static const SyntheticOutput out = generate(standard_scenario(3));
  return out;
}

const SampleSet& samples() {
  static const SampleSet s = extract_samples(synthetic().cube, synthetic().polygons, FeatureWindow{});
  return s;
}

}  // namespace

static void BM_Composite(benchmark::State& state) {
  const GridGeometry g{static_cast<int>(state.range(0)), static_cast<int>(state.range(0)), 10.0, 0.0, 0.0};
  const auto scenes = year_of_scenes(g);
  for (auto _ : state) benchmark::DoNotOptimize(composite_dekads(scenes, 2018, g));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.pixel_count()));
}
BENCHMARK(BM_Composite)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_TrainForest(benchmark::State& state) {
  Hyperparams hp;
  hp.n_estimators = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(train(samples(), hp, 1));
}
BENCHMARK(BM_TrainForest)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_PredictRows(benchmark::State& state) {
  Hyperparams hp;
  const auto model = train(samples(), hp, 1);
  std::vector<ClassCode> labels;
  const auto view = view_of(samples(), labels);
  for (auto _ : state) benchmark::DoNotOptimize(predict_rows(model, view));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(view.rows));
}
BENCHMARK(BM_PredictRows)->Unit(benchmark::kMillisecond);

static void BM_Rasterize(benchmark::State& state) {
  const GridGeometry g{1000, 1000, 10.0, 0.0, 10000.0};
  // a 40-vertex star spanning most of the grid
  std::vector<Point> ring;
  for (int i = 0; i < 40; ++i) {
    const double a = i * 6.283185307179586 / 40, r = i % 2 ? 4500.0 : 2500.0;
    ring.push_back({5000.0 + r * std::cos(a), 5000.0 + r * std::sin(a)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(rasterize(ring, g));
}
BENCHMARK(BM_Rasterize)->Unit(benchmark::kMillisecond);

static void BM_Slope(benchmark::State& state) {
  Raster<float> dem(GridGeometry{512, 512, 10.0, 0.0, 0.0}, 0.0f);
  for (int r = 0; r < 512; ++r)
    for (int c = 0; c < 512; ++c) dem.at(c, r) = 0.3f * c + 0.1f * r + static_cast<float>((c * r) % 7);
  for (auto _ : state) benchmark::DoNotOptimize(compute_slope(dem));
}
BENCHMARK(BM_Slope)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
