#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spinekit/evaluate.hpp"
#include "spinekit/label.hpp"
#include "spinekit/types.hpp"

namespace spinekit::io {

/// Annotation document: JSON text listing vertebrae with level string and
/// per-slice corner quadruples (TL, TR, BR, BL order).
void save_annotations(const AnnotationSet& ann,
                      const std::filesystem::path& path,
                      std::uint64_t seed = 0);
AnnotationSet load_annotations(const std::filesystem::path& path);

/// Detections document: volumes with id, score, centroid3d, height span and
/// per-slice corners, plus the scan frame.
struct DetectionsDoc {
  int slices = 0;
  int height = 0;
  int width = 0;
  std::array<double, 2> pixel_spacing_mm{0.5, 0.5};
  double slice_spacing_px = 4.0;
  std::uint64_t seed = 0;
  std::vector<VertebraVolume> volumes;
};

void save_detections(const DetectionsDoc& doc,
                     const std::filesystem::path& path);
DetectionsDoc load_detections(const std::filesystem::path& path);

/// Labels document: the decoded sequence with per-volume level strings.
void save_labels(const label::LabelSequence& seq, std::uint64_t seed,
                 const std::filesystem::path& path);
label::LabelSequence load_labels(const std::filesystem::path& path);

/// Metrics document plus the per-level table.
void save_metrics(const evaluate::EvalReport& report,
                  const std::filesystem::path& path, std::uint64_t seed = 0);

/// Human-readable metrics summary.
std::string format_report(const evaluate::EvalReport& report);

}  // namespace spinekit::io
