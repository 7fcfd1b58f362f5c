// spinekit command-line tool: phantom generation, detection, labelling,
// evaluation and scoliosis features, plus the full run-all pipeline.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spinekit/bundle.hpp"
#include "spinekit/detect.hpp"
#include "spinekit/evaluate.hpp"
#include "spinekit/io.hpp"
#include "spinekit/label.hpp"
#include "spinekit/phantom.hpp"
#include "spinekit/scoliosis.hpp"
#include "spinekit/types.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spinekit;

namespace {

// ---------------------------------------------------------------------------
// Run configuration: a flat key=value document merged with flag overrides.
// ---------------------------------------------------------------------------

struct RunConfig {
  std::map<std::string, std::string> values;

  static RunConfig from_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file " + path.string());
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (eq == std::string::npos) {
        throw Error("config line " + std::to_string(lineno) +
                    ": expected key = value");
      }
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
      };
      cfg.values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return cfg;
  }

  void set(const std::string& key, const std::string& value) {
    values[key] = value;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : std::stod(it->second);
  }
  int get_int(const std::string& key, int fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : std::stoi(it->second);
  }
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : std::stoull(it->second);
  }
  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    return it->second == "1" || it->second == "true" || it->second == "yes";
  }

  json echo() const {
    json j = json::object();
    for (const auto& [k, v] : values) j[k] = v;
    return j;
  }
};

phantom::PhantomSpec phantom_spec_from(const RunConfig& cfg) {
  phantom::PhantomSpec spec;
  spec.slices = cfg.get_int("phantom.slices", spec.slices);
  spec.height = cfg.get_int("phantom.height", spec.height);
  spec.width = cfg.get_int("phantom.width", spec.width);
  spec.vertebra_count = cfg.get_int("phantom.vertebrae", spec.vertebra_count);
  spec.sagittal_amplitude_px =
      cfg.get_double("phantom.sagittal_amplitude", spec.sagittal_amplitude_px);
  spec.lateral_amplitude_px =
      cfg.get_double("phantom.lateral_amplitude", spec.lateral_amplitude_px);
  spec.lateral_wavelength_px =
      cfg.get_double("phantom.lateral_wavelength", spec.lateral_wavelength_px);
  spec.slice_spacing_px =
      cfg.get_double("phantom.slice_spacing", spec.slice_spacing_px);
  spec.noise_sigma = cfg.get_double("phantom.noise", spec.noise_sigma);
  spec.confusion = cfg.get_double("phantom.confusion", spec.confusion);
  spec.appearance_noise =
      cfg.get_double("phantom.appearance_noise", spec.appearance_noise);
  spec.drops.top = cfg.get_int("phantom.drop_top", spec.drops.top);
  spec.drops.bottom = cfg.get_int("phantom.drop_bottom", spec.drops.bottom);
  spec.drops.per_vertebra_prob =
      cfg.get_double("phantom.drop_prob", spec.drops.per_vertebra_prob);
  spec.pathologies.fused_pair = cfg.get_bool("phantom.fused", false);
  spec.pathologies.collapsed = cfg.get_bool("phantom.collapsed", false);
  spec.pathologies.hemivertebra = cfg.get_bool("phantom.hemivertebra", false);
  spec.render.c_var = cfg.get_double("targets.c_var", spec.render.c_var);
  spec.render.nbhd_radius_factor =
      cfg.get_double("targets.nbhd_radius_factor", spec.render.nbhd_radius_factor);
  spec.seed = cfg.get_u64("seed", spec.seed);
  return spec;
}

detect::DetectConfig detect_config_from(const RunConfig& cfg) {
  detect::DetectConfig d;
  d.tau = cfg.get_double("detect.tau", d.tau);
  d.range = cfg.get_double("detect.range", d.range);
  d.min_area = cfg.get_int("detect.min_area", d.min_area);
  d.fields_point_to_centroid = cfg.get_bool("detect.fields_point_to_centroid", false);
  return d;
}

label::BeamConfig beam_config_from(const RunConfig& cfg) {
  label::BeamConfig b;
  b.beam_width = cfg.get_int("beam.width", b.beam_width);
  b.skip_penalty = cfg.get_double("beam.skip_penalty", b.skip_penalty);
  b.lumbar_penalty = cfg.get_double("beam.lumbar_penalty", b.lumbar_penalty);
  b.temperature = cfg.get_double("beam.temperature", b.temperature);
  return b;
}

// Appearance vectors for detected volumes: each detection inherits the
// vector of the nearest true vertebra (standing in for running an
// appearance network on the extracted box).
std::vector<std::vector<double>> associate_probs(
    const std::vector<VertebraVolume>& dets, const AnnotationSet& truth,
    const std::vector<std::vector<double>>& appearance,
    double slice_spacing_px) {
  std::vector<std::vector<double>> probs;
  probs.reserve(dets.size());
  const std::vector<double> uniform(label::kNumLevels,
                                    1.0 / label::kNumLevels);
  for (const VertebraVolume& det : dets) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < truth.vertebrae.size(); ++i) {
      const Point3 c = truth.vertebrae[i].centroid3d();
      const double dz = (det.centroid3d.slice - c.slice) * slice_spacing_px;
      const double d = std::hypot(det.centroid3d.x - c.x,
                                  det.centroid3d.y - c.y, dz);
      if (d < best) {
        best = d;
        best_i = i;
      }
    }
    if (truth.vertebrae.empty() || best > 40.0) {
      probs.push_back(uniform);
    } else {
      probs.push_back(appearance[best_i]);
    }
  }
  return probs;
}

NdArray probs_to_array(const std::vector<std::vector<double>>& probs) {
  NdArray arr({probs.size(), static_cast<std::size_t>(label::kNumLevels)});
  for (std::size_t i = 0; i < probs.size(); ++i) {
    for (int n = 0; n < label::kNumLevels; ++n) {
      arr.at(i, static_cast<std::size_t>(n)) =
          static_cast<float>(probs[i][static_cast<std::size_t>(n)]);
    }
  }
  return arr;
}

std::vector<std::vector<double>> array_to_probs(const NdArray& arr) {
  if (arr.rank() != 2 || arr.dim(1) != static_cast<std::size_t>(label::kNumLevels)) {
    throw Error("probability array must be V x 24");
  }
  std::vector<std::vector<double>> probs(arr.dim(0));
  for (std::size_t i = 0; i < arr.dim(0); ++i) {
    probs[i].resize(label::kNumLevels);
    for (int n = 0; n < label::kNumLevels; ++n) {
      probs[i][static_cast<std::size_t>(n)] =
          arr.at(i, static_cast<std::size_t>(n));
    }
  }
  return probs;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

void run_phantom(const RunConfig& cfg, const fs::path& out_dir) {
  const phantom::PhantomSpec spec = phantom_spec_from(cfg);
  const phantom::PhantomTruth truth = phantom::generate(spec);
  const phantom::CorruptedPhantom corrupted = phantom::corrupt(truth, spec);

  fs::create_directories(out_dir);
  TensorBundle bundle;
  bundle.put("heatmaps", corrupted.heatmaps.data, bundle_axes::kHeatmaps);
  bundle.put("fields", corrupted.fields.data, bundle_axes::kFields);
  bundle.put("appearance", probs_to_array(corrupted.appearance),
             bundle_axes::kProbs);
  write_bundle(bundle, out_dir / "bundle");
  io::save_annotations(truth.annotations, out_dir / "annotations.json",
                       spec.seed);
  std::cout << "phantom: " << truth.annotations.vertebrae.size()
            << " vertebrae -> " << (out_dir / "bundle").string() << "\n";
}

void run_detect(const RunConfig& cfg, const fs::path& bundle_dir,
                const fs::path& out_file, int threads) {
  const TensorBundle bundle = read_bundle(bundle_dir);
  const auto volumes = detect_scan(bundle, detect_config_from(cfg), threads);

  io::DetectionsDoc doc;
  const auto& shape = bundle.get("heatmaps").shape();
  doc.slices = static_cast<int>(shape[0]);
  doc.height = static_cast<int>(shape[2]);
  doc.width = static_cast<int>(shape[3]);
  doc.pixel_spacing_mm = {cfg.get_double("spacing.row_mm", 0.5),
                          cfg.get_double("spacing.col_mm", 0.5)};
  doc.slice_spacing_px = cfg.get_double("phantom.slice_spacing", 4.0);
  doc.seed = cfg.get_u64("seed", 0);
  doc.volumes = volumes;
  io::save_detections(doc, out_file);
  std::cout << "detect: " << volumes.size() << " volumes -> "
            << out_file.string() << "\n";
}

// Accepts either a bundle directory holding a V x 24 array or a JSON file
// containing an array of 24-long rows.
std::vector<std::vector<double>> load_probs(const fs::path& path) {
  if (fs::is_directory(path)) {
    const TensorBundle bundle = read_bundle(path);
    const std::string array = bundle.has("probs") ? "probs" : "appearance";
    return array_to_probs(bundle.get(array));
  }
  std::ifstream in(path);
  if (!in) throw Error("cannot open probability file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("unparseable probability file " + path.string() + ": " + e.what());
  }
  std::vector<std::vector<double>> probs;
  for (const auto& row : j) {
    probs.push_back(row.get<std::vector<double>>());
    if (probs.back().size() != static_cast<std::size_t>(label::kNumLevels)) {
      throw Error("probability rows must have 24 entries");
    }
  }
  return probs;
}

void run_label(const RunConfig& cfg, const fs::path& detections_file,
               const fs::path& probs_path, const fs::path& out_file,
               bool probs_are_logits) {
  const io::DetectionsDoc doc = io::load_detections(detections_file);
  auto probs = load_probs(probs_path);
  if (probs.size() != doc.volumes.size()) {
    throw Error("probability array rows (" + std::to_string(probs.size()) +
                ") do not match detection count (" +
                std::to_string(doc.volumes.size()) + ")");
  }
  const label::BeamConfig beam = beam_config_from(cfg);
  if (probs_are_logits) {
    for (auto& p : probs) p = label::softmax_temperature(p, beam.temperature);
  }
  const auto result = label::label_scan(doc.volumes, probs, doc.height, beam);
  io::save_labels(result.sequence, doc.seed, out_file);
  std::cout << "label: " << result.sequence.tokens.size() << " levels, variant "
            << label::lumbar_variant_name(result.sequence.variant) << " -> "
            << out_file.string() << "\n";
}

void run_evaluate(const RunConfig& cfg, const fs::path& gt_file,
                  const fs::path& detections_file, const fs::path& labels_file,
                  std::optional<double> spacing_mm, const fs::path& out_file) {
  AnnotationSet gt = io::load_annotations(gt_file);
  const io::DetectionsDoc dets = io::load_detections(detections_file);
  const label::LabelSequence labels =
      labels_file.empty() ? label::LabelSequence{} : io::load_labels(labels_file);
  if (spacing_mm) gt.pixel_spacing_mm = {*spacing_mm, *spacing_mm};
  const auto report = evaluate::evaluate_scan(gt, dets.volumes, labels);
  if (!out_file.empty()) io::save_metrics(report, out_file, dets.seed);
  std::cout << io::format_report(report);
  (void)cfg;
}

void run_scoliosis(const std::vector<fs::path>& detections_files,
                   const fs::path& labels_file, const std::string& feature,
                   const fs::path& out_file, bool allow_lower_degree) {
  json out;
  json feats = json::array();
  std::vector<double> scores;
  for (const fs::path& file : detections_files) {
    const io::DetectionsDoc doc = io::load_detections(file);
    const auto f = scoliosis::scoliosis_features(
        doc.volumes, doc.slice_spacing_px, allow_lower_degree);
    feats.push_back({{"file", file.string()},
                     {"max_curvature", f.max_curvature},
                     {"max_deviation", f.max_deviation},
                     {"fit_residual", f.fit_residual}});
    scores.push_back(feature == "curvature" ? f.max_curvature : f.max_deviation);
  }
  out["feature"] = feature;
  out["scans"] = feats;

  if (!labels_file.empty()) {
    std::ifstream in(labels_file);
    if (!in) throw Error("cannot open labels file " + labels_file.string());
    json jl;
    in >> jl;
    std::vector<bool> truth;
    for (const auto& v : jl) truth.push_back(v.get<bool>());
    if (truth.size() != scores.size()) {
      throw Error("scoliosis labels count does not match scan count");
    }
    auto [points, auc] = scoliosis::roc_auc(scores, truth);
    json roc = json::array();
    for (const auto& p : points) {
      roc.push_back({{"threshold", std::isinf(p.threshold) ? 1e308 : p.threshold},
                     {"fpr", p.fpr},
                     {"tpr", p.tpr}});
    }
    out["roc"] = roc;
    out["auc"] = auc;
    std::cout << "scoliosis: AUC(" << feature << ") = " << auc << "\n";
  }

  if (!out_file.empty()) {
    std::ofstream os(out_file, std::ios::trunc);
    if (!os) throw Error("cannot open " + out_file.string() + " for writing");
    os << out.dump(2) << "\n";
  }
  for (const auto& f : feats) {
    std::cout << f.at("file").get<std::string>() << ": deviation "
              << f.at("max_deviation").get<double>() << " px, curvature "
              << f.at("max_curvature").get<double>() << " 1/px\n";
  }
}

void run_all(const RunConfig& cfg, const fs::path& out_dir, int threads) {
  fs::create_directories(out_dir);
  std::string stage = "phantom";
  try {
    const phantom::PhantomSpec spec = phantom_spec_from(cfg);
    const phantom::PhantomTruth truth = phantom::generate(spec);
    io::save_annotations(truth.annotations, out_dir / "annotations.json",
                     spec.seed);

    stage = "corrupt";
    const phantom::CorruptedPhantom corrupted = phantom::corrupt(truth, spec);
    TensorBundle bundle;
    bundle.put("heatmaps", corrupted.heatmaps.data, bundle_axes::kHeatmaps);
    bundle.put("fields", corrupted.fields.data, bundle_axes::kFields);
    bundle.put("appearance", probs_to_array(corrupted.appearance),
               bundle_axes::kProbs);
    write_bundle(bundle, out_dir / "bundle");

    stage = "detect";
    const auto volumes = detect_scan(corrupted.heatmaps, corrupted.fields,
                                     detect_config_from(cfg), threads);
    io::DetectionsDoc det_doc;
    det_doc.slices = spec.slices;
    det_doc.height = spec.height;
    det_doc.width = spec.width;
    det_doc.pixel_spacing_mm = spec.pixel_spacing_mm;
    det_doc.slice_spacing_px = spec.slice_spacing_px;
    det_doc.seed = spec.seed;
    det_doc.volumes = volumes;
    io::save_detections(det_doc, out_dir / "detections.json");

    stage = "label";
    const auto probs = associate_probs(volumes, truth.annotations,
                                       corrupted.appearance,
                                       spec.slice_spacing_px);
    TensorBundle probs_bundle;
    probs_bundle.put("probs", probs_to_array(probs), bundle_axes::kProbs);
    write_bundle(probs_bundle, out_dir / "probs");
    const auto labelled =
        label::label_scan(volumes, probs, spec.height, beam_config_from(cfg));
    io::save_labels(labelled.sequence, spec.seed, out_dir / "labels.json");

    stage = "evaluate";
    const auto report =
        evaluate::evaluate_scan(truth.annotations, volumes, labelled.sequence);
    io::save_metrics(report, out_dir / "metrics.json", spec.seed);

    stage = "scoliosis";
    const auto features = scoliosis::scoliosis_features(
        volumes, spec.slice_spacing_px,
        cfg.get_bool("scoliosis.allow_lower_degree", false));

    stage = "report";
    json j;
    j["seed"] = spec.seed;
    j["config"] = cfg.echo();
    j["metrics"] = {
        {"precision", report.precision}, {"recall", report.recall},
        {"le_mean_mm", report.le_mean_mm}, {"le_std_mm", report.le_std_mm},
        {"idr", report.idr}, {"idr_pm1", report.idr_pm1},
        {"tp", report.tp}, {"fp", report.fp}, {"fn", report.fn}};
    j["scoliosis"] = {{"max_curvature", features.max_curvature},
                      {"max_deviation", features.max_deviation},
                      {"fit_residual", features.fit_residual}};
    j["labels"] = {{"variant", label::lumbar_variant_name(labelled.sequence.variant)},
                   {"log_score", labelled.sequence.log_score}};
    {
      std::ofstream os(out_dir / "report.json", std::ios::trunc);
      if (!os) throw Error("cannot write report.json");
      os << j.dump(2) << "\n";
    }
    {
      std::ostringstream text;
      text << "seed " << spec.seed << "\n";
      text << io::format_report(report);
      text << "\nscoliosis features\n";
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "max_curvature  %.6f 1/px\nmax_deviation  %.4f px\n"
                    "fit_residual   %.4f px\n",
                    features.max_curvature, features.max_deviation,
                    features.fit_residual);
      text << buf;
      std::ofstream os(out_dir / "report.txt", std::ios::trunc);
      if (!os) throw Error("cannot write report.txt");
      os << text.str();
    }
    std::cout << "run-all: report written to " << (out_dir / "report.json").string()
              << "\n";
  } catch (const std::exception& e) {
    throw Error("stage '" + stage + "' failed: " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vertebra detection grouping, level labelling and scoliosis "
               "features on landmark heatmaps"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags (--seed, --config, --threads) may follow
                      // the subcommand name

  std::string config_file;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
  app.add_option("--config", config_file, "key = value configuration file")
      ->expected(1);
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed recorded in outputs");
  app.add_option("--threads", threads, "worker threads for per-slice stages");

  // phantom
  auto* cmd_phantom = app.add_subcommand("phantom", "generate a synthetic scan");
  std::string phantom_out = "phantom_out";
  int vertebrae = -1, ph_slices = -1, ph_height = -1, ph_width = -1;
  double noise = -1.0, confusion = -1.0, lateral = -1.0;
  cmd_phantom->add_option("--out", phantom_out, "output directory");
  cmd_phantom->add_option("--vertebrae", vertebrae,
                          "vertebra count (2-25; <23 is a partial field of view)");
  cmd_phantom->add_option("--slices", ph_slices, "sagittal slice count");
  cmd_phantom->add_option("--height", ph_height, "image height, px");
  cmd_phantom->add_option("--width", ph_width, "image width, px");
  cmd_phantom->add_option("--noise", noise, "map noise sigma");
  cmd_phantom->add_option("--confusion", confusion, "appearance confusion epsilon");
  cmd_phantom->add_option("--lateral-amplitude", lateral, "scoliosis amplitude, px");

  // detect
  auto* cmd_detect = app.add_subcommand("detect", "group landmark heatmaps into volumes");
  std::string detect_bundle, detect_out = "detections.json";
  cmd_detect->add_option("--bundle", detect_bundle, "tensor bundle directory")
      ->required();
  cmd_detect->add_option("--out", detect_out, "detections file");

  // label
  auto* cmd_label = app.add_subcommand("label", "decode vertebra levels");
  std::string label_dets, label_probs, label_out = "labels.json";
  bool label_logits = false;
  cmd_label->add_option("--detections", label_dets, "detections file")->required();
  cmd_label->add_option("--probs", label_probs,
                        "bundle directory with a V x 24 'probs' array, or a "
                        "JSON file of 24-long rows")
      ->required();
  cmd_label->add_option("--out", label_out, "labels file");
  cmd_label->add_flag("--logits", label_logits,
                      "treat the array as logits and apply the temperature softmax");

  // evaluate
  auto* cmd_eval = app.add_subcommand("evaluate", "detection and labelling metrics");
  std::string eval_gt, eval_dets, eval_labels, eval_out;
  double eval_spacing = -1.0;
  cmd_eval->add_option("--gt", eval_gt, "ground-truth annotations")->required();
  cmd_eval->add_option("--detections", eval_dets, "detections file")->required();
  cmd_eval->add_option("--labels", eval_labels, "labels file");
  cmd_eval->add_option("--spacing", eval_spacing, "pixel spacing, mm");
  cmd_eval->add_option("--out", eval_out, "metrics file");

  // scoliosis
  auto* cmd_scol = app.add_subcommand("scoliosis", "spine curve features and ROC");
  std::vector<std::string> scol_dets;
  std::string scol_labels, scol_feature = "deviation", scol_out;
  cmd_scol->add_option("--detections", scol_dets, "one or more detections files")
      ->required();
  cmd_scol->add_option("--labels", scol_labels,
                       "JSON array of booleans, one per detections file");
  cmd_scol->add_option("--feature", scol_feature, "deviation or curvature")
      ->check(CLI::IsMember({"deviation", "curvature"}));
  bool scol_lower = false;
  cmd_scol->add_flag("--allow-lower-degree", scol_lower,
                     "fit fewer than 6 centroids with a reduced degree");
  cmd_scol->add_option("--out", scol_out, "features/ROC file");

  // run-all
  auto* cmd_runall = app.add_subcommand(
      "run-all", "phantom -> corrupt -> detect -> label -> evaluate -> scoliosis");
  std::string runall_out = "run_out";
  cmd_runall->add_option("--out", runall_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  }
  seed_given = seed_opt->count() > 0;

  try {
    RunConfig cfg;
    if (!config_file.empty()) cfg = RunConfig::from_file(config_file);
    if (seed_given) cfg.set("seed", std::to_string(seed));
    if (vertebrae >= 0) cfg.set("phantom.vertebrae", std::to_string(vertebrae));
    if (ph_slices >= 0) cfg.set("phantom.slices", std::to_string(ph_slices));
    if (ph_height >= 0) cfg.set("phantom.height", std::to_string(ph_height));
    if (ph_width >= 0) cfg.set("phantom.width", std::to_string(ph_width));
    if (noise >= 0.0) cfg.set("phantom.noise", std::to_string(noise));
    if (confusion >= 0.0) cfg.set("phantom.confusion", std::to_string(confusion));
    if (lateral >= 0.0) cfg.set("phantom.lateral_amplitude", std::to_string(lateral));

    if (cmd_phantom->parsed()) {
      run_phantom(cfg, phantom_out);
    } else if (cmd_detect->parsed()) {
      run_detect(cfg, detect_bundle, detect_out, threads);
    } else if (cmd_label->parsed()) {
      run_label(cfg, label_dets, label_probs, label_out, label_logits);
    } else if (cmd_eval->parsed()) {
      run_evaluate(cfg, eval_gt, eval_dets, eval_labels,
                   eval_spacing > 0 ? std::optional<double>(eval_spacing)
                                    : std::nullopt,
                   eval_out);
    } else if (cmd_scol->parsed()) {
      std::vector<fs::path> files(scol_dets.begin(), scol_dets.end());
      run_scoliosis(files, scol_labels, scol_feature, scol_out, scol_lower);
    } else if (cmd_runall->parsed()) {
      run_all(cfg, runall_out, threads);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;  // runtime error
  }
  return 0;
}
