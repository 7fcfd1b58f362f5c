#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "spinekit/bundle.hpp"
#include "spinekit/io.hpp"
#include "spinekit/tiling.hpp"

using namespace spinekit;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "spinekit_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("bundle") {
  TEST_CASE("round-trip is bit-exact") {
    const fs::path dir = temp_dir("bundle_roundtrip");
    oracles::TestRng rng(42);

    TensorBundle bundle;
    NdArray heat({2, 5, 8, 8});
    for (float& v : heat.values()) v = static_cast<float>(rng.uniform(-3, 3));
    bundle.put("heatmaps", heat, bundle_axes::kHeatmaps);
    NdArray stack({3, 5, 64, 64});
    for (float& v : stack.values()) v = static_cast<float>(rng.uniform(-1, 1));
    bundle.put("random_stack", stack, "S,C,H,W");

    write_bundle(bundle, dir);
    const TensorBundle back = read_bundle(dir);
    REQUIRE(back.has("heatmaps"));
    CHECK(back.get("heatmaps").shape() == heat.shape());
    CHECK(back.get("heatmaps").values() == heat.values());
    CHECK(back.get("random_stack").values() == stack.values());
    CHECK(back.manifest.at("heatmaps").axis_order == bundle_axes::kHeatmaps);
  }

  TEST_CASE("empty bundle and single-element payload") {
    const fs::path dir = temp_dir("bundle_empty");
    write_bundle(TensorBundle{}, dir);
    CHECK(read_bundle(dir).arrays.empty());

    TensorBundle one;
    one.put("tiny", NdArray({1, 1}), "H,W");
    write_bundle(one, dir);
    CHECK(fs::file_size(dir / "tiny.raw") == 4);
    CHECK(read_bundle(dir).get("tiny").at(0, 0) == 0.0f);
  }

  TEST_CASE("shape mismatch against payload length is rejected") {
    const fs::path dir = temp_dir("bundle_badshape");
    TensorBundle bundle;
    bundle.put("a", NdArray({10, 10}), "H,W");
    write_bundle(bundle, dir);
    // 100 declared elements over a 396-byte payload.
    fs::resize_file(dir / "a.raw", 396);
    CHECK_THROWS_WITH_AS(read_bundle(dir),
                         doctest::Contains("payload is 396 bytes"), Error);
  }

  TEST_CASE("unknown dtype tag and missing manifest are rejected") {
    const fs::path dir = temp_dir("bundle_baddtype");
    TensorBundle bundle;
    bundle.put("a", NdArray({2, 2}), "H,W");
    write_bundle(bundle, dir);
    {
      std::ofstream manifest(dir / "manifest.json", std::ios::trunc);
      manifest << R"({"arrays":[{"name":"a","dtype":"f64be","shape":[2,2],)"
               << R"("axis_order":"H,W","byte_order":"little"}]})";
    }
    CHECK_THROWS_WITH_AS(read_bundle(dir),
                         doctest::Contains("unknown element type tag"), Error);
    CHECK_THROWS_AS(read_bundle(dir / "does_not_exist"), Error);
  }

  TEST_CASE("non-finite arrays are refused at write time") {
    TensorBundle bundle;
    NdArray bad({2});
    bad.at(std::size_t{0}) = std::numeric_limits<float>::quiet_NaN();
    bundle.put("bad", bad, "N");
    CHECK_THROWS_AS(write_bundle(bundle, temp_dir("bundle_nan")), Error);
  }
}

TEST_SUITE("tiling") {
  TEST_CASE("square image yields a single tile at the origin") {
    NdArray img({224, 224}, 1.0f);
    const auto tiles = tile_scan(img, 224);
    REQUIRE(tiles.size() == 1);
    CHECK(tiles[0].row0 == 0);
    CHECK(tiles[0].col0 == 0);
    CHECK(tiles[0].side == 224);
  }

  TEST_CASE("448x224 image tiles at row offsets 0, 134, 224") {
    NdArray img({448, 224});
    const auto tiles = tile_scan(img, 224);
    REQUIRE(tiles.size() == 3);
    CHECK(tiles[0].row0 == 0);
    CHECK(tiles[1].row0 == 134);  // stride = round(0.6 * 224)
    CHECK(tiles[2].row0 == 224);  // clamped to the image edge
    for (const auto& t : tiles) CHECK(t.col0 == 0);
  }

  TEST_CASE("tile footprints cover the image") {
    oracles::TestRng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      const long h = 1 + rng.uniform_int(300);
      const long w = 1 + rng.uniform_int(300);
      NdArray img({static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
      const auto tiles = tile_scan(img, 32);
      std::vector<char> covered(static_cast<std::size_t>(h * w), 0);
      for (const auto& t : tiles) {
        for (long r = t.row0; r < t.row0 + t.side; ++r) {
          for (long c = t.col0; c < t.col0 + t.side; ++c) {
            REQUIRE(r < h);
            REQUIRE(c < w);
            covered[static_cast<std::size_t>(r * w + c)] = 1;
          }
        }
      }
      CHECK(std::count(covered.begin(), covered.end(), 0) == 0);
    }
  }

  TEST_CASE("stitching a single full tile is the identity") {
    NdArray img({64, 64});
    oracles::TestRng rng(3);
    for (float& v : img.values()) v = static_cast<float>(rng.uniform());
    const auto tiles = tile_scan(img, 64);
    REQUIRE(tiles.size() == 1);
    const NdArray back = stitch_tiles(tiles, 64, 64);
    CHECK(back.values() == img.values());
  }

  TEST_CASE("constant tiles stitch to a constant image") {
    NdArray img({150, 100}, 2.5f);
    const auto tiles = tile_scan(img, 64);
    const NdArray back = stitch_tiles(tiles, 150, 100);
    for (float v : back.values()) CHECK(v == doctest::Approx(2.5f).epsilon(1e-6));
  }

  TEST_CASE("wide images tile along columns and stitch back") {
    NdArray img({100, 260});
    oracles::TestRng rng(9);
    for (float& v : img.values()) v = static_cast<float>(rng.uniform());
    const auto tiles = tile_scan(img, 100);  // side 100, slide along columns
    REQUIRE(tiles.size() >= 3);
    CHECK(tiles[0].row0 == 0);
    CHECK(tiles[1].col0 == 60);  // stride = round(0.6 * 100)
    CHECK(tiles.back().col0 == 160);
    const NdArray back = stitch_tiles(tiles, 100, 260);
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back.values()[i] == doctest::Approx(img.values()[i]).epsilon(1e-6));
    }
  }

  TEST_CASE("tile then stitch round-trips a smooth image") {
    const long h = 300, w = 200;
    NdArray img({static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
    float lo = 1e9f, hi = -1e9f;
    for (long r = 0; r < h; ++r) {
      for (long c = 0; c < w; ++c) {
        const float v = static_cast<float>(std::sin(r / 47.0) + std::cos(c / 31.0));
        img.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    const auto tiles = tile_scan(img, 224);  // side 200 -> genuine resampling
    const NdArray back = stitch_tiles(tiles, h, w);
    double max_err = 0.0;
    for (std::size_t i = 0; i < back.size(); ++i) {
      max_err = std::max(max_err,
                         std::abs(static_cast<double>(back.values()[i]) -
                                  img.values()[i]));
    }
    CHECK(max_err <= 1e-3 * (hi - lo));
  }

  TEST_CASE("out-of-bounds tile offsets are rejected") {
    NdArray img({64, 64});
    auto tiles = tile_scan(img, 64);
    tiles[0].row0 = 5;
    CHECK_THROWS_AS(stitch_tiles(tiles, 64, 64), Error);
  }
}

TEST_SUITE("io") {
  TEST_CASE("annotation and detection documents round-trip") {
    const fs::path dir = temp_dir("io_docs");
    AnnotationSet ann;
    ann.slices = 4;
    ann.height = 128;
    ann.width = 96;
    ann.slice_spacing_px = 3.0;
    VertebraAnnotation v;
    v.level = "T7";
    Quadrilateral q;
    q.slice = 1;
    q.corners = {Point{10, 20}, Point{30, 20.5}, Point{30.5, 40}, Point{10.5, 40.5}};
    v.quads.emplace(1, q);
    q.slice = 2;
    v.quads.emplace(2, q);
    ann.vertebrae.push_back(v);

    io::save_annotations(ann, dir / "ann.json");
    const AnnotationSet back = io::load_annotations(dir / "ann.json");
    REQUIRE(back.vertebrae.size() == 1);
    CHECK(back.vertebrae[0].level == "T7");
    CHECK(back.vertebrae[0].quads.at(1).corners[2].y == 40.0);
    CHECK(back.slice_spacing_px == 3.0);

    io::DetectionsDoc doc;
    doc.slices = 4;
    doc.height = 128;
    doc.width = 96;
    VertebraVolume vol;
    vol.id = 0;
    vol.quads.emplace(1, q);
    finalize_volume(vol);
    doc.volumes.push_back(vol);
    io::save_detections(doc, dir / "dets.json");
    const auto dets = io::load_detections(dir / "dets.json");
    REQUIRE(dets.volumes.size() == 1);
    CHECK(dets.volumes[0].centroid3d.y == doctest::Approx(vol.centroid3d.y));

    label::LabelSequence seq;
    seq.volume_ids = {0};
    seq.tokens = {label::token_from_name("T7")};
    seq.log_score = -0.25;
    io::save_labels(seq, 9, dir / "labels.json");
    const auto lab = io::load_labels(dir / "labels.json");
    CHECK(lab.tokens == seq.tokens);
    CHECK(lab.log_score == seq.log_score);
  }
}
