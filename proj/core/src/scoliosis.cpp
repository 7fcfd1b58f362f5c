#include "spinekit/scoliosis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace spinekit::scoliosis {

namespace {

ScoliosisFeatures features_from_points(
    std::vector<std::pair<double, double>> points, bool allow_lower_degree) {
  const int n = static_cast<int>(points.size());
  int degree = 5;
  if (n < degree + 1) {
    if (!allow_lower_degree || n < 2) {
      throw Error("scoliosis features need at least 6 centroids (got " +
                  std::to_string(n) + ")");
    }
    degree = n - 1;
  }
  std::sort(points.begin(), points.end());

  const auto fit = geometry::fit_polynomial(points, degree);
  ScoliosisFeatures f;
  f.max_curvature = geometry::max_abs_curvature(fit.poly, points.front().first,
                                                points.back().first);
  f.max_deviation = geometry::max_centreline_deviation(points);
  f.fit_residual = fit.residual;
  return f;
}

// Lateral position of a volume: area-weighted mean slice index, in pixels.
double lateral_position_px(const VertebraVolume& v, double slice_spacing_px) {
  double weight = 0.0;
  double acc = 0.0;
  for (const auto& [slice, quad] : v.quads) {
    const double a = geometry::polygon_area(quad);
    weight += a;
    acc += a * static_cast<double>(slice);
  }
  if (weight <= 0.0) throw Error("volume with zero total quad area");
  return (acc / weight) * slice_spacing_px;
}

}  // namespace

ScoliosisFeatures scoliosis_features(const std::vector<VertebraVolume>& volumes,
                                     double slice_spacing_px,
                                     bool allow_lower_degree) {
  if (slice_spacing_px <= 0.0) throw Error("slice spacing must be positive");
  std::vector<std::pair<double, double>> points;
  points.reserve(volumes.size());
  for (const VertebraVolume& v : volumes) {
    points.emplace_back(v.centroid3d.y, lateral_position_px(v, slice_spacing_px));
  }
  return features_from_points(std::move(points), allow_lower_degree);
}

ScoliosisFeatures sagittal_curve_features(
    const std::vector<VertebraVolume>& volumes, bool allow_lower_degree) {
  std::vector<std::pair<double, double>> points;
  points.reserve(volumes.size());
  for (const VertebraVolume& v : volumes) {
    points.emplace_back(v.centroid3d.y, v.centroid3d.x);
  }
  return features_from_points(std::move(points), allow_lower_degree);
}

Classification classify(double feature_value, double threshold) {
  return Classification{feature_value > threshold, feature_value};
}

std::pair<std::vector<RocPoint>, double> roc_auc(
    const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw Error("roc_auc: size mismatch");
  const long pos = std::count(labels.begin(), labels.end(), true);
  const long neg = static_cast<long>(labels.size()) - pos;
  if (pos == 0 || neg == 0) {
    throw Error("roc_auc: both classes must be present");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  std::vector<RocPoint> points;
  points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  double auc = 0.0;
  long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    // Consume the whole tie group so ties contribute a diagonal segment.
    while (i < order.size() && scores[order[i]] == threshold) {
      if (labels[order[i]]) ++tp; else ++fp;
      ++i;
    }
    const RocPoint prev = points.back();
    RocPoint cur{threshold, static_cast<double>(fp) / neg,
                 static_cast<double>(tp) / pos};
    auc += 0.5 * (cur.tpr + prev.tpr) * (cur.fpr - prev.fpr);
    points.push_back(cur);
  }
  return {points, auc};
}

}  // namespace spinekit::scoliosis
