#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spinekit/label.hpp"
#include "spinekit/types.hpp"

namespace spinekit::evaluate {

/// Per ground-truth vertebra: index of the matched detection volume, or
/// nullopt when the vertebra is a false negative.
struct Matching {
  std::vector<std::optional<int>> gt_match;  // |GT| entries, detection index
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

struct PerLevelRow {
  std::string level;
  int gt_count = 0;
  double recall = 0.0;
  double idr = 0.0;
};

struct EvalReport {
  double precision = 1.0;
  double recall = 0.0;
  double le_mean_mm = 0.0;
  double le_std_mm = 0.0;
  double idr = 0.0;
  double idr_pm1 = 0.0;
  int tp = 0, fp = 0, fn = 0;
  std::vector<PerLevelRow> per_level;  // 24 rows, C2..S1
};

/// A ground-truth vertebra counts as detected iff its mid-slice centroid
/// lies inside exactly one detection quadrilateral in that slice. A
/// detection containing two centroids keeps only the nearest (the other
/// ground-truth vertebra stays a false negative); unmatched detections are
/// false positives.
Matching match_detections(const AnnotationSet& gt,
                          const std::vector<VertebraVolume>& dets);

/// Mean/std over ground-truth centroids of the distance (mm) to the closest
/// detection quadrilateral centroid. Throws when there are no detections.
std::pair<double, double> localisation_error(
    const AnnotationSet& gt, const std::vector<VertebraVolume>& dets,
    const std::array<double, 2>& pixel_spacing_mm);

/// labels maps detection volume id -> token. IDR counts ground-truth
/// vertebrae that are matched and carry the exact ground-truth level;
/// IDR±1 allows a level-index error of at most one.
std::pair<double, double> identification_rate(
    const Matching& matching, const AnnotationSet& gt,
    const std::vector<VertebraVolume>& dets,
    const label::LabelSequence& labels);

/// Recall and IDR grouped by ground-truth level (L6 folds into the L5 row).
std::vector<PerLevelRow> per_level_breakdown(
    const Matching& matching, const AnnotationSet& gt,
    const std::vector<VertebraVolume>& dets,
    const label::LabelSequence& labels);

/// Convenience: matching + LE + IDR + per-level in one report.
EvalReport evaluate_scan(const AnnotationSet& gt,
                         const std::vector<VertebraVolume>& dets,
                         const label::LabelSequence& labels);

/// Mean distance in pixels between matched detection corners and the
/// ground-truth corners, averaged over shared slices. Supports the grouping
/// fidelity checks; throws if the matching has no true positives.
double mean_corner_error_px(const Matching& matching, const AnnotationSet& gt,
                            const std::vector<VertebraVolume>& dets);

}  // namespace spinekit::evaluate
