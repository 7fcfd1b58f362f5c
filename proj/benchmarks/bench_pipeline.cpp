#include <benchmark/benchmark.h>

#include "spinekit/detect.hpp"
#include "spinekit/geometry.hpp"
#include "spinekit/label.hpp"
#include "spinekit/phantom.hpp"
#include "spinekit/targets.hpp"

using namespace spinekit;

namespace {

phantom::PhantomTruth& cached_truth() {
  static phantom::PhantomTruth truth = [] {
    phantom::PhantomSpec spec;
    spec.seed = 1;
    return phantom::generate(spec);
  }();
  return truth;
}

void BM_RenderStack(benchmark::State& state) {
  phantom::PhantomSpec spec;
  spec.seed = 2;
  spec.render_maps = false;
  const auto truth = phantom::generate(spec);
  for (auto _ : state) {
    HeatmapStack heat;
    VectorFieldStack fields;
    targets::render_stack(truth.annotations, heat, fields);
    benchmark::DoNotOptimize(heat.data.data());
  }
}
BENCHMARK(BM_RenderStack)->Unit(benchmark::kMillisecond);

void BM_DetectScan(benchmark::State& state) {
  const auto& truth = cached_truth();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto volumes = detect::detect_scan(truth.heatmaps, truth.fields,
                                       detect::DetectConfig{}, threads);
    benchmark::DoNotOptimize(volumes.size());
  }
}
BENCHMARK(BM_DetectScan)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_PolygonIou(benchmark::State& state) {
  Quadrilateral a, b;
  a.corners = {Point{0, 0}, Point{20, 1}, Point{21, 15}, Point{-1, 14}};
  b.corners = {Point{5, 4}, Point{24, 5}, Point{25, 19}, Point{4, 18}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(geometry::polygon_iou(a, b));
  }
}
BENCHMARK(BM_PolygonIou);

void BM_BeamDecode(benchmark::State& state) {
  phantom::PhantomSpec spec;
  spec.seed = 3;
  spec.confusion = 0.15;
  spec.appearance_noise = 1.0;
  spec.render_maps = false;
  const auto truth = phantom::generate(spec);
  const auto corrupted = phantom::corrupt(truth, spec);
  std::vector<int> ids(truth.appearance.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
  label::BeamConfig cfg;
  cfg.beam_width = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto seq = label::beam_decode(ids, corrupted.appearance, cfg);
    benchmark::DoNotOptimize(seq.log_score);
  }
}
BENCHMARK(BM_BeamDecode)->Arg(5)->Arg(50)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
