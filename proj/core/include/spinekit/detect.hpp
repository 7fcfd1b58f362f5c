#pragma once

#include <vector>

#include "spinekit/bundle.hpp"
#include "spinekit/types.hpp"

namespace spinekit::detect {

struct DetectConfig {
  double tau = 0.4;          // heatmap threshold, in (0,1)
  double range = 0.0;        // max corner-centroid distance; 0 = auto
  double iou_threshold = 0.5;  // cross-slice grouping, fixed by the method
  int min_area = 3;          // connected components below this are dropped
  /// Grouping fields store pixel - centroid displacements, so a corner's
  /// centroid estimate is p - v(p). Set when consuming externally trained
  /// fields with the opposite sign.
  bool fields_point_to_centroid = false;

  void validate() const;
};

/// Thresholds each channel at tau, takes 8-connected components of area
/// >= min_area, and emits one landmark per component with response-weighted
/// centroid position and peak score. Deterministic row-major ordering.
std::vector<Landmark> extract_landmarks(const NdArray& heatmap_slice,
                                        const DetectConfig& cfg, int slice = 0);

/// Assigns corners to centroids through the grouping fields and emits one
/// quadrilateral per surviving centroid. Centroids missing any corner type
/// within range are discarded.
std::vector<Quadrilateral> group_slice(const std::vector<Landmark>& landmarks,
                                       const NdArray& field_slice,
                                       const DetectConfig& cfg);

/// Chains quads across adjacent slices when IoU > iou_threshold (highest-IoU
/// candidate wins). Result is independent of within-slice quad ordering.
std::vector<VertebraVolume> group_slices(
    const std::vector<std::vector<Quadrilateral>>& per_slice,
    double iou_threshold = 0.5);

/// Extracts per-volume detection scores alongside group_slices; score is the
/// mean centroid-landmark response over the volume's slices.
std::vector<VertebraVolume> group_slices_scored(
    const std::vector<std::vector<Quadrilateral>>& per_slice,
    const std::vector<std::vector<double>>& per_slice_scores,
    double iou_threshold = 0.5);

/// Full per-scan pipeline. Slices may be processed in parallel; results are
/// merged in slice order so the output is independent of thread count.
std::vector<VertebraVolume> detect_scan(const HeatmapStack& heatmaps,
                                        const VectorFieldStack& fields,
                                        const DetectConfig& cfg,
                                        int threads = 1);

/// Convenience overload reading `heatmaps` and `fields` from a bundle.
std::vector<VertebraVolume> detect_scan(const TensorBundle& bundle,
                                        const DetectConfig& cfg,
                                        int threads = 1);

}  // namespace spinekit::detect
