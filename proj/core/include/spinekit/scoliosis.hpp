#pragma once

#include <utility>
#include <vector>

#include "spinekit/geometry.hpp"
#include "spinekit/types.hpp"

namespace spinekit::scoliosis {

struct ScoliosisFeatures {
  double max_curvature = 0.0;  // 1/px, on the coronal-plane quintic
  double max_deviation = 0.0;  // px from the vertical centreline
  double fit_residual = 0.0;
};

/// Quintic fit of lateral position against height through the detected
/// centroids. The lateral coordinate of a volume is its area-weighted mean
/// slice index times slice_spacing_px (coronal plane reconstructed from the
/// sagittal detections). Requires at least 6 volumes unless
/// allow_lower_degree is set, in which case the degree drops to n-1.
ScoliosisFeatures scoliosis_features(const std::vector<VertebraVolume>& volumes,
                                     double slice_spacing_px,
                                     bool allow_lower_degree = false);

/// Sagittal-plane variant (x position of the centroids against height); no
/// classifier is built on it, exposed for curve inspection.
ScoliosisFeatures sagittal_curve_features(
    const std::vector<VertebraVolume>& volumes, bool allow_lower_degree = false);

struct Classification {
  bool scoliotic = false;
  double score = 0.0;
};

/// Thresholds one feature value; scoliotic iff score > threshold.
Classification classify(double feature_value, double threshold);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

/// ROC by threshold sweep over the unique scores, AUC by the trapezoidal
/// rule (equals the Mann-Whitney statistic, ties counted half). Throws when
/// only one class is present.
std::pair<std::vector<RocPoint>, double> roc_auc(
    const std::vector<double>& scores, const std::vector<bool>& labels);

}  // namespace spinekit::scoliosis
