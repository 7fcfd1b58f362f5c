#include "spinekit/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "spinekit/label.hpp"

namespace spinekit::io {

namespace {

using nlohmann::json;

json dump_point(const Point& p) { return json::array({p.x, p.y}); }

Point parse_point(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json dump_quads(const std::map<int, Quadrilateral>& quads) {
  json arr = json::array();
  for (const auto& [slice, quad] : quads) {
    json corners = json::array();
    for (const Point& p : quad.corners) corners.push_back(dump_point(p));
    arr.push_back({{"slice", slice}, {"corners", corners}});
  }
  return arr;
}

std::map<int, Quadrilateral> parse_quads(const json& arr) {
  std::map<int, Quadrilateral> quads;
  for (const auto& e : arr) {
    Quadrilateral q;
    q.slice = e.at("slice").get<int>();
    const auto& corners = e.at("corners");
    if (corners.size() != 4) throw Error("quadrilateral must have 4 corners");
    for (int i = 0; i < 4; ++i) {
      q.corners[static_cast<std::size_t>(i)] = parse_point(corners.at(i));
    }
    quads.emplace(q.slice, q);
  }
  return quads;
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("unparseable document " + path.string() + ": " + e.what());
  }
  return j;
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw Error("short write to " + path.string());
}

}  // namespace

void save_annotations(const AnnotationSet& ann,
                      const std::filesystem::path& path, std::uint64_t seed) {
  json doc;
  doc["seed"] = seed;
  doc["image"] = {{"slices", ann.slices}, {"height", ann.height}, {"width", ann.width}};
  doc["pixel_spacing_mm"] = {ann.pixel_spacing_mm[0], ann.pixel_spacing_mm[1]};
  doc["slice_spacing_px"] = ann.slice_spacing_px;
  json verts = json::array();
  for (const VertebraAnnotation& v : ann.vertebrae) {
    verts.push_back({{"level", v.level}, {"quads", dump_quads(v.quads)}});
  }
  doc["vertebrae"] = verts;
  write_json(doc, path);
}

AnnotationSet load_annotations(const std::filesystem::path& path) {
  const json doc = load_json(path);
  AnnotationSet ann;
  ann.slices = doc.at("image").at("slices").get<int>();
  ann.height = doc.at("image").at("height").get<int>();
  ann.width = doc.at("image").at("width").get<int>();
  ann.pixel_spacing_mm = {doc.at("pixel_spacing_mm").at(0).get<double>(),
                          doc.at("pixel_spacing_mm").at(1).get<double>()};
  ann.slice_spacing_px = doc.value("slice_spacing_px", 4.0);
  for (const auto& e : doc.at("vertebrae")) {
    VertebraAnnotation v;
    v.level = e.at("level").get<std::string>();
    v.quads = parse_quads(e.at("quads"));
    if (v.quads.empty()) throw Error("annotation without slices");
    ann.vertebrae.push_back(std::move(v));
  }
  return ann;
}

void save_detections(const DetectionsDoc& doc,
                     const std::filesystem::path& path) {
  json j;
  j["image"] = {{"slices", doc.slices}, {"height", doc.height}, {"width", doc.width}};
  j["pixel_spacing_mm"] = {doc.pixel_spacing_mm[0], doc.pixel_spacing_mm[1]};
  j["slice_spacing_px"] = doc.slice_spacing_px;
  j["seed"] = doc.seed;
  json vols = json::array();
  for (const VertebraVolume& v : doc.volumes) {
    // The expanded box is what an external appearance model would crop and
    // resample; carried as metadata alongside the raw quads.
    const auto box = label::extract_volume_box(v, doc.height, doc.width);
    vols.push_back({
        {"id", v.id},
        {"score", v.score},
        {"centroid3d", {v.centroid3d.x, v.centroid3d.y, v.centroid3d.slice}},
        {"height_span", {v.height_span.first, v.height_span.second}},
        {"box", {{"x", {box.x0, box.x1}},
                 {"y", {box.y0, box.y1}},
                 {"slices", {box.slice0, box.slice1}},
                 {"resample", {box.resample_shape[0], box.resample_shape[1],
                               box.resample_shape[2]}}}},
        {"quads", dump_quads(v.quads)},
    });
  }
  j["volumes"] = vols;
  write_json(j, path);
}

DetectionsDoc load_detections(const std::filesystem::path& path) {
  const json j = load_json(path);
  DetectionsDoc doc;
  doc.slices = j.at("image").at("slices").get<int>();
  doc.height = j.at("image").at("height").get<int>();
  doc.width = j.at("image").at("width").get<int>();
  doc.pixel_spacing_mm = {j.at("pixel_spacing_mm").at(0).get<double>(),
                          j.at("pixel_spacing_mm").at(1).get<double>()};
  doc.slice_spacing_px = j.value("slice_spacing_px", 4.0);
  doc.seed = j.value("seed", 0ULL);
  for (const auto& e : j.at("volumes")) {
    VertebraVolume v;
    v.id = e.at("id").get<int>();
    v.score = e.value("score", 1.0);
    v.quads = parse_quads(e.at("quads"));
    if (v.quads.empty()) throw Error("detection volume without quads");
    finalize_volume(v);
    doc.volumes.push_back(std::move(v));
  }
  return doc;
}

void save_labels(const label::LabelSequence& seq, std::uint64_t seed,
                 const std::filesystem::path& path) {
  json j;
  j["seed"] = seed;
  j["log_score"] = seq.log_score;
  j["skips_used"] = seq.skips_used;
  j["lumbar_variant"] = label::lumbar_variant_name(seq.variant);
  json entries = json::array();
  for (std::size_t i = 0; i < seq.volume_ids.size(); ++i) {
    entries.push_back({{"id", seq.volume_ids[i]},
                       {"level", label::token_name(seq.tokens[i])}});
  }
  j["sequence"] = entries;
  write_json(j, path);
}

label::LabelSequence load_labels(const std::filesystem::path& path) {
  const json j = load_json(path);
  label::LabelSequence seq;
  seq.log_score = j.value("log_score", 0.0);
  seq.skips_used = j.value("skips_used", 0);
  const std::string variant = j.value("lumbar_variant", "none");
  if (variant == "plus1") {
    seq.variant = label::LumbarVariant::Plus1;
  } else if (variant == "minus1") {
    seq.variant = label::LumbarVariant::Minus1;
  }
  for (const auto& e : j.at("sequence")) {
    seq.volume_ids.push_back(e.at("id").get<int>());
    seq.tokens.push_back(label::token_from_name(e.at("level").get<std::string>()));
  }
  return seq;
}

void save_metrics(const evaluate::EvalReport& report,
                  const std::filesystem::path& path, std::uint64_t seed) {
  json j;
  j["seed"] = seed;
  j["precision"] = report.precision;
  j["recall"] = report.recall;
  j["le_mean_mm"] = report.le_mean_mm;
  j["le_std_mm"] = report.le_std_mm;
  j["idr"] = report.idr;
  j["idr_pm1"] = report.idr_pm1;
  j["counts"] = {{"tp", report.tp}, {"fp", report.fp}, {"fn", report.fn}};
  json per_level = json::array();
  for (const evaluate::PerLevelRow& row : report.per_level) {
    per_level.push_back({{"level", row.level},
                         {"gt_count", row.gt_count},
                         {"recall", row.recall},
                         {"idr", row.idr}});
  }
  j["per_level"] = per_level;
  write_json(j, path);
}

std::string format_report(const evaluate::EvalReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "precision  " << report.precision << "\n";
  os << "recall     " << report.recall << "\n";
  os << "LE (mm)    " << report.le_mean_mm << " +/- " << report.le_std_mm << "\n";
  os << "IDR        " << report.idr << "\n";
  os << "IDR+/-1    " << report.idr_pm1 << "\n";
  os << "counts     TP=" << report.tp << " FP=" << report.fp
     << " FN=" << report.fn << "\n";
  os << "\nlevel  gt  recall   idr\n";
  for (const evaluate::PerLevelRow& row : report.per_level) {
    os << std::left << std::setw(6) << row.level << std::right << std::setw(3)
       << row.gt_count << "  " << std::setw(6) << row.recall << "  "
       << std::setw(6) << row.idr << "\n";
  }
  return os.str();
}

}  // namespace spinekit::io
