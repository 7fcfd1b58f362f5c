#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "spinekit/detect.hpp"
#include "spinekit/phantom.hpp"
#include "spinekit/scoliosis.hpp"

using namespace spinekit;
using namespace spinekit::scoliosis;

namespace {

std::vector<VertebraVolume> volumes_from_truth(const phantom::PhantomTruth& t) {
  std::vector<VertebraVolume> volumes;
  for (std::size_t i = 0; i < t.annotations.vertebrae.size(); ++i) {
    VertebraVolume v;
    v.id = static_cast<int>(i);
    v.quads = t.annotations.vertebrae[i].quads;
    finalize_volume(v);
    volumes.push_back(v);
  }
  return volumes;
}

}  // namespace

TEST_SUITE("scoliosis") {
  TEST_CASE("straight phantom has near-zero curvature and deviation") {
    phantom::PhantomSpec spec;
    spec.seed = 41;
    spec.lateral_amplitude_px = 0.0;
    spec.render_maps = false;
    const auto truth = phantom::generate(spec);
    const auto f = scoliosis_features(volumes_from_truth(truth),
                                      spec.slice_spacing_px);
    CHECK(f.max_curvature <= 1e-4);
    CHECK(f.max_deviation <= 1.0);
  }

  TEST_CASE("sinusoidal amplitude 10 px reports deviation in [8, 12]") {
    for (const std::uint64_t seed : {42ULL, 43ULL, 44ULL, 45ULL}) {
      phantom::PhantomSpec spec;
      spec.seed = seed;
      spec.lateral_amplitude_px = 10.0;
      spec.render_maps = false;
      const auto truth = phantom::generate(spec);
      const auto f = scoliosis_features(volumes_from_truth(truth),
                                        spec.slice_spacing_px);
      CHECK(f.max_deviation >= 8.0);
      CHECK(f.max_deviation <= 12.0);
    }
  }

  TEST_CASE("larger lateral amplitude raises both features") {
    phantom::PhantomSpec big, small;
    big.seed = small.seed = 46;
    big.lateral_amplitude_px = 10.0;
    small.lateral_amplitude_px = 2.0;
    big.render_maps = small.render_maps = false;
    const auto fb = scoliosis_features(
        volumes_from_truth(phantom::generate(big)), big.slice_spacing_px);
    const auto fs = scoliosis_features(
        volumes_from_truth(phantom::generate(small)), small.slice_spacing_px);
    CHECK(fb.max_deviation > fs.max_deviation);
    CHECK(fb.max_curvature > fs.max_curvature);
  }

  TEST_CASE("features are invariant under vertical translation") {
    phantom::PhantomSpec spec;
    spec.seed = 47;
    spec.lateral_amplitude_px = 7.0;
    spec.render_maps = false;
    const auto truth = phantom::generate(spec);
    auto volumes = volumes_from_truth(truth);
    const auto base = scoliosis_features(volumes, spec.slice_spacing_px);

    for (auto& v : volumes) {
      std::map<int, Quadrilateral> moved;
      for (auto [slice, q] : v.quads) {
        for (Point& p : q.corners) p.y += 55.0;
        moved.emplace(slice, q);
      }
      v.quads = moved;
      finalize_volume(v);
    }
    const auto lifted = scoliosis_features(volumes, spec.slice_spacing_px);
    CHECK(lifted.max_deviation == doctest::Approx(base.max_deviation).epsilon(1e-9));
    CHECK(lifted.max_curvature == doctest::Approx(base.max_curvature).epsilon(1e-6));
  }

  TEST_CASE("fewer than six centroids is an error unless degraded fits are allowed") {
    phantom::PhantomSpec spec;
    spec.seed = 48;
    spec.render_maps = false;
    auto volumes = volumes_from_truth(phantom::generate(spec));
    volumes.resize(4);
    CHECK_THROWS_AS(scoliosis_features(volumes, spec.slice_spacing_px), Error);
    const auto f = scoliosis_features(volumes, spec.slice_spacing_px, true);
    CHECK(f.max_deviation >= 0.0);
  }

  TEST_CASE("classify thresholds the chosen feature") {
    CHECK_FALSE(classify(3.0, std::numeric_limits<double>::infinity()).scoliotic);
    CHECK(classify(3.0, 0.0).scoliotic);
    CHECK(classify(3.0, 0.0).score == 3.0);
    CHECK_FALSE(classify(0.0, 0.0).scoliotic);  // strict inequality
  }

  TEST_CASE("roc_auc on separated and shuffled scores") {
    std::vector<double> scores{9, 8, 7, 1, 2, 3};
    std::vector<bool> labels{true, true, true, false, false, false};
    auto [points, auc] = roc_auc(scores, labels);
    CHECK(auc == doctest::Approx(1.0));
    CHECK(points.front().tpr == 0.0);
    CHECK(points.back().tpr == 1.0);
    CHECK(points.back().fpr == 1.0);

    // Identical score distributions hover at chance level.
    oracles::TestRng rng(49);
    std::vector<double> s2;
    std::vector<bool> l2;
    for (int i = 0; i < 2000; ++i) {
      s2.push_back(rng.uniform());
      l2.push_back(i % 2 == 0);
    }
    CHECK(std::abs(roc_auc(s2, l2).second - 0.5) < 0.05);

    CHECK_THROWS_AS(roc_auc({1, 2}, {true, true}), Error);
  }

  TEST_CASE("AUC equals the Mann-Whitney statistic, ties included") {
    oracles::TestRng rng(50);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> scores;
      std::vector<bool> labels;
      const int n = 20 + rng.uniform_int(60);
      for (int i = 0; i < n; ++i) {
        // Quantized scores force ties across and within classes.
        scores.push_back(std::floor(rng.uniform(0, 8)) + (i % 2 ? 0.0 : 0.25));
        labels.push_back(rng.uniform() < 0.4);
      }
      if (std::count(labels.begin(), labels.end(), true) == 0 ||
          std::count(labels.begin(), labels.end(), false) == 0) {
        continue;
      }
      const double auc = roc_auc(scores, labels).second;
      const double mw = oracles::mann_whitney_auc(scores, labels);
      CHECK(std::abs(auc - mw) <= 1e-9);
    }
  }

  TEST_CASE("AUC is invariant under strictly monotone score transforms") {
    oracles::TestRng rng(51);
    std::vector<double> scores;
    std::vector<bool> labels;
    for (int i = 0; i < 200; ++i) {
      scores.push_back(rng.uniform(0.1, 5.0));
      labels.push_back(rng.uniform() < 0.5);
    }
    const double base = roc_auc(scores, labels).second;
    std::vector<double> transformed = scores;
    for (double& s : transformed) s = std::log(s) * 3.0 + 7.0;
    CHECK(roc_auc(transformed, labels).second == doctest::Approx(base).epsilon(1e-12));
  }

  TEST_CASE("deviation feature separates detected phantom populations") {
    // Small version of the acceptance experiment: 12 scans per class
    // through the full detection pipeline.
    std::vector<double> scores;
    std::vector<bool> labels;
    for (int i = 0; i < 24; ++i) {
      const bool scoliotic = i % 2 == 0;
      phantom::PhantomSpec spec;
      spec.seed = 600 + static_cast<std::uint64_t>(i);
      spec.lateral_amplitude_px = scoliotic ? 9.0 : 1.0;
      const auto truth = phantom::generate(spec);
      const auto volumes = detect::detect_scan(truth.heatmaps, truth.fields,
                                               detect::DetectConfig{});
      REQUIRE(volumes.size() >= 6);
      const auto f = scoliosis_features(volumes, spec.slice_spacing_px);
      scores.push_back(f.max_deviation);
      labels.push_back(scoliotic);
    }
    CHECK(roc_auc(scores, labels).second >= 0.95);
  }
}
