#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "spinekit/detect.hpp"
#include "spinekit/geometry.hpp"
#include "spinekit/label.hpp"
#include "spinekit/phantom.hpp"
#include "spinekit/scoliosis.hpp"

using namespace spinekit;
using namespace spinekit::phantom;

TEST_SUITE("phantom") {
  TEST_CASE("generation is deterministic for a fixed seed") {
    PhantomSpec spec;
    spec.seed = 1234;
    spec.lateral_amplitude_px = 6.0;
    spec.pathologies = {true, false, true};
    const auto a = generate(spec);
    const auto b = generate(spec);
    CHECK(a.heatmaps.data.values() == b.heatmaps.data.values());
    CHECK(a.fields.data.values() == b.fields.data.values());
    CHECK(a.appearance == b.appearance);
    REQUIRE(a.annotations.vertebrae.size() == b.annotations.vertebrae.size());
    for (std::size_t i = 0; i < a.annotations.vertebrae.size(); ++i) {
      CHECK(a.annotations.vertebrae[i].level == b.annotations.vertebrae[i].level);
    }
    spec.seed = 1235;
    const auto c = generate(spec);
    CHECK(a.heatmaps.data.values() != c.heatmaps.data.values());
  }

  TEST_CASE("zero confusion gives one-hot appearance vectors") {
    PhantomSpec spec;
    spec.seed = 2;
    spec.confusion = 0.0;
    spec.render_maps = false;
    const auto truth = generate(spec);
    for (const auto& v : truth.appearance) {
      int ones = 0, zeros = 0;
      for (double p : v) {
        if (p == 1.0) ++ones;
        if (p == 0.0) ++zeros;
      }
      CHECK(ones == 1);
      CHECK(zeros == label::kNumLevels - 1);
    }
  }

  TEST_CASE("appearance vectors are normalized and epsilon-leaked") {
    PhantomSpec spec;
    spec.seed = 3;
    spec.confusion = 0.15;
    spec.render_maps = false;
    const auto truth = generate(spec);
    for (std::size_t i = 0; i < truth.appearance.size(); ++i) {
      double sum = 0.0;
      for (double p : truth.appearance[i]) sum += p;
      CHECK(std::abs(sum - 1.0) <= 1e-6);
      const int center = label::token_score_level(truth.level_tokens[i]);
      CHECK(truth.appearance[i][static_cast<std::size_t>(center)] >= 0.5);
    }
  }

  TEST_CASE("every generated quadrilateral is convex, simple and in bounds") {
    for (const std::uint64_t seed : {0ULL, 5ULL, 9ULL}) {
      for (const int count : {23, 24, 25}) {
        PhantomSpec spec;
        spec.seed = seed;
        spec.vertebra_count = count;
        spec.lateral_amplitude_px = 8.0;
        spec.pathologies = {true, true, true};
        spec.render_maps = false;
        const auto truth = generate(spec);
        REQUIRE(truth.annotations.vertebrae.size() == static_cast<std::size_t>(count));
        for (const auto& v : truth.annotations.vertebrae) {
          CHECK(!v.quads.empty());
          int prev_slice = v.quads.begin()->first - 1;
          for (const auto& [slice, quad] : v.quads) {
            CHECK(slice == prev_slice + 1);  // contiguous slice range
            prev_slice = slice;
            CHECK(quad_is_convex(quad));
            CHECK(quad_is_valid(quad));
            for (const Point& p : quad.corners) {
              CHECK(p.x >= 0.0);
              CHECK(p.x < spec.width);
              CHECK(p.y >= 0.0);
              CHECK(p.y < spec.height);
            }
          }
        }
      }
    }
  }

  TEST_CASE("adjacent vertebrae never overlap in the mid-sagittal slice") {
    for (const std::uint64_t seed : {1ULL, 7ULL, 13ULL}) {
      PhantomSpec spec;
      spec.seed = seed;
      spec.pathologies = {true, true, true};
      spec.render_maps = false;
      const auto truth = generate(spec);
      const int mid = spec.slices / 2;
      std::vector<Quadrilateral> quads;
      for (const auto& v : truth.annotations.vertebrae) {
        auto it = v.quads.find(mid);
        if (it != v.quads.end()) quads.push_back(it->second);
      }
      for (std::size_t i = 0; i + 1 < quads.size(); ++i) {
        // Fused pairs share an edge exactly; allow floating-point slivers.
        CHECK(geometry::polygon_iou(quads[i], quads[i + 1]) <= 1e-9);
      }
    }
  }

  TEST_CASE("level tokens are strictly increasing; 25 vertebrae include L6") {
    PhantomSpec spec;
    spec.seed = 11;
    spec.render_maps = false;
    for (const int count : {23, 24, 25}) {
      spec.vertebra_count = count;
      const auto truth = generate(spec);
      for (std::size_t i = 1; i < truth.level_tokens.size(); ++i) {
        CHECK(truth.level_tokens[i] > truth.level_tokens[i - 1]);
      }
      const int l6 = static_cast<int>(
          std::count(truth.level_tokens.begin(), truth.level_tokens.end(),
                     label::kTokenL6));
      CHECK(l6 == (count == 25 ? 1 : 0));
      CHECK(truth.level_tokens.back() == label::kTokenS1);
      if (count == 25) {
        // L6 sits between L5 and S1.
        CHECK(truth.level_tokens[23] == label::kTokenL6);
        CHECK(truth.level_tokens[22] == 22);
      }
      // 23 vertebrae run C2..L4 then S1 (four lumbar).
      if (count == 23) CHECK(truth.level_tokens[21] == 21);
    }
  }

  TEST_CASE("zero lateral amplitude keeps the centreline straight") {
    PhantomSpec spec;
    spec.seed = 21;
    spec.lateral_amplitude_px = 0.0;
    spec.render_maps = false;
    const auto truth = generate(spec);
    std::vector<VertebraVolume> volumes;
    for (std::size_t i = 0; i < truth.annotations.vertebrae.size(); ++i) {
      VertebraVolume v;
      v.id = static_cast<int>(i);
      v.quads = truth.annotations.vertebrae[i].quads;
      finalize_volume(v);
      volumes.push_back(v);
    }
    const auto features =
        scoliosis::scoliosis_features(volumes, spec.slice_spacing_px);
    CHECK(features.max_deviation <= 0.5);
  }

  TEST_CASE("corrupt with no noise and no drops is the identity") {
    PhantomSpec spec;
    spec.seed = 31;
    const auto truth = generate(spec);
    const auto c = corrupt(truth, spec);
    CHECK(c.heatmaps.data.values() == truth.heatmaps.data.values());
    CHECK(c.fields.data.values() == truth.fields.data.values());
    CHECK(c.appearance == truth.appearance);
    CHECK(std::count(c.dropped.begin(), c.dropped.end(), true) == 0);
  }

  TEST_CASE("corrupt is deterministic given the seed") {
    PhantomSpec spec;
    spec.seed = 32;
    spec.noise_sigma = 0.05;
    spec.appearance_noise = 1.0;
    spec.drops.per_vertebra_prob = 0.2;
    const auto truth = generate(spec);
    const auto a = corrupt(truth, spec);
    const auto b = corrupt(truth, spec);
    CHECK(a.heatmaps.data.values() == b.heatmaps.data.values());
    CHECK(a.appearance == b.appearance);
    CHECK(a.dropped == b.dropped);
  }

  TEST_CASE("dropping the top two vertebrae erases their responses") {
    PhantomSpec spec;
    spec.seed = 33;
    spec.drops.top = 2;
    const auto truth = generate(spec);
    const auto c = corrupt(truth, spec);
    CHECK(c.dropped[0]);
    CHECK(c.dropped[1]);
    CHECK(std::count(c.dropped.begin(), c.dropped.end(), true) == 2);

    // Detection on the corrupted maps finds everything except the top two.
    const auto volumes = detect::detect_scan(c.heatmaps, c.fields,
                                             detect::DetectConfig{});
    CHECK(volumes.size() == truth.annotations.vertebrae.size() - 2);
    // Annotations are untouched.
    CHECK(truth.annotations.vertebrae.size() ==
          static_cast<std::size_t>(spec.vertebra_count));
  }

  TEST_CASE("infeasible specs are rejected") {
    PhantomSpec spec;
    spec.height = 100;  // 24 vertebrae cannot fit
    CHECK_THROWS_WITH_AS(generate(spec), doctest::Contains("infeasible"), Error);

    PhantomSpec lateral;
    lateral.lateral_amplitude_px = 100.0;  // exceeds the slice stack
    CHECK_THROWS_WITH_AS(generate(lateral), doctest::Contains("infeasible"), Error);

    PhantomSpec count;
    count.vertebra_count = 100;
    CHECK_THROWS_WITH_AS(generate(count), doctest::Contains("infeasible"), Error);

    PhantomSpec eps;
    eps.confusion = 0.7;
    CHECK_THROWS_AS(generate(eps), Error);
  }

  TEST_CASE("partial fields of view end at S1") {
    PhantomSpec tiny;  // geometry defaults scale down with the image
    tiny.height = 64;
    tiny.width = 64;
    tiny.slices = 4;
    tiny.vertebra_count = 2;
    const auto truth = generate(tiny);
    REQUIRE(truth.annotations.vertebrae.size() == 2);
    CHECK(truth.annotations.vertebrae[0].level == "L5");
    CHECK(truth.annotations.vertebrae[1].level == "S1");

    PhantomSpec lumbar;
    lumbar.seed = 61;
    lumbar.vertebra_count = 6;
    lumbar.render_maps = false;
    const auto six = generate(lumbar);
    CHECK(six.annotations.vertebrae.front().level == "L1");
    CHECK(six.annotations.vertebrae.back().level == "S1");

    PhantomSpec bad = tiny;
    bad.vertebra_count = 100;
    CHECK_THROWS_AS(generate(bad), Error);
    bad.vertebra_count = 23;  // too many for a 64 px image
    CHECK_THROWS_AS(generate(bad), Error);
  }
}
