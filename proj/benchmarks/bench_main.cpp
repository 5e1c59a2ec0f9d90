#include <benchmark/benchmark.h>

#include <filesystem>
#include <numeric>
#include <random>

#include "terralabel/forest.hpp"
#include "terralabel/labelgen.hpp"
#include "terralabel/raster.hpp"
#include "terralabel/scene.hpp"
#include "terralabel/synth.hpp"

using namespace terralabel;

namespace {

SampleSet random_samples(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> noise(0.0f, 0.05f);
  SampleSet s;
  for (std::size_t i = 0; i < n; ++i) {
    const auto cls = static_cast<std::uint8_t>(gen() % kNumClasses);
    FeatureVector f{};
    for (int b = 0; b < kNumBands; ++b) f[b] = 0.05f * static_cast<float>((cls + b) % 8) + noise(gen);
    s.push_back(f, cls, Split::Train);
  }
  return s;
}

void BM_BestSplit(benchmark::State& state) {
  const SampleSet s = random_samples(static_cast<std::size_t>(state.range(0)), 1);
  std::vector<int> features(kNumBands);
  std::iota(features.begin(), features.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(best_split(s.features, s.labels, features));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BestSplit)->Arg(256)->Arg(4096);

void BM_TrainForest(benchmark::State& state) {
  const SampleSet s = random_samples(2000, 2);
  ForestParams p;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_forest(s, p, 42, static_cast<unsigned>(state.range(0))));
  }
}
BENCHMARK(BM_TrainForest)->Arg(1)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_PredictRaster(benchmark::State& state) {
  SynthSpec spec = SynthSpec::reference();
  spec.width = 192;
  spec.height = 192;
  spec.n_scenes = 1;
  spec.scene_cloud_fractions = {0.1};
  const auto dir = std::filesystem::temp_directory_path() / "terralabel_bench_scene";
  std::filesystem::remove_all(dir);
  const auto scenes = synthesize_tile(spec, dir);
  const Scene scene = load_scene(read_manifest(scenes.front().dir / "manifest.json"));
  const ForestModel model = train_forest(random_samples(2000, 3), ForestParams{}, 42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict_raster(model, scene, Taxonomy::defaults(),
                                            static_cast<unsigned>(state.range(0))));
  }
  state.SetItemsProcessed(state.iterations() * scene.grid.size());
  std::filesystem::remove_all(dir);
}
BENCHMARK(BM_PredictRaster)->Arg(1)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_ResampleBilinear(benchmark::State& state) {
  GridSpec src_grid{192, 192, 0.0, 0.0, 20.0};
  std::vector<double> v(src_grid.size());
  std::mt19937_64 gen(4);
  for (auto& x : v) x = static_cast<double>(gen() % 10000) / 10000.0;
  const RasterGrid src(src_grid, Dtype::F32, std::nullopt, v);
  const GridSpec target{384, 384, 0.0, 0.0, 10.0};
  for (auto _ : state) benchmark::DoNotOptimize(resample_bilinear(src, target));
  state.SetItemsProcessed(state.iterations() * target.size());
}
BENCHMARK(BM_ResampleBilinear)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
