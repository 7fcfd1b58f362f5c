#include "spinekit/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "spinekit/geometry.hpp"

namespace spinekit::evaluate {

Matching match_detections(const AnnotationSet& gt,
                          const std::vector<VertebraVolume>& dets) {
  const std::size_t ng = gt.vertebrae.size();
  Matching m;
  m.gt_match.assign(ng, std::nullopt);

  // Candidate (gt, det) pairs where the centroid test passed.
  struct Candidate {
    std::size_t gi;
    std::size_t di;
    double dist;
  };
  std::vector<Candidate> candidates;

  for (std::size_t gi = 0; gi < ng; ++gi) {
    const VertebraAnnotation& v = gt.vertebrae[gi];
    const int slice = v.mid_slice();
    const Point c = v.centroid();

    // Detected iff contained in exactly one bounding quadrilateral.
    int containing = 0;
    std::size_t only = 0;
    for (std::size_t di = 0; di < dets.size(); ++di) {
      if (dets[di].quads.empty()) continue;
      const Quadrilateral& q = dets[di].quad_at_or_nearest(slice);
      if (geometry::point_in_polygon(c, q)) {
        ++containing;
        only = di;
      }
    }
    if (containing == 1) {
      const Quadrilateral& q = dets[only].quad_at_or_nearest(slice);
      candidates.push_back({gi, only, distance(c, q.centroid())});
    }
  }

  // A detection containing two centroids keeps only the nearest.
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.dist != b.dist) return a.dist < b.dist;
              if (a.gi != b.gi) return a.gi < b.gi;
              return a.di < b.di;
            });
  std::vector<bool> det_used(dets.size(), false);
  for (const Candidate& c : candidates) {
    if (det_used[c.di] || m.gt_match[c.gi].has_value()) continue;
    det_used[c.di] = true;
    m.gt_match[c.gi] = static_cast<int>(c.di);
  }

  m.tp = static_cast<int>(std::count_if(m.gt_match.begin(), m.gt_match.end(),
                                        [](const auto& v) { return v.has_value(); }));
  m.fn = static_cast<int>(ng) - m.tp;
  m.fp = static_cast<int>(dets.size()) - m.tp;
  return m;
}

std::pair<double, double> localisation_error(
    const AnnotationSet& gt, const std::vector<VertebraVolume>& dets,
    const std::array<double, 2>& pixel_spacing_mm) {
  if (dets.empty()) throw Error("localisation_error: no detections");
  if (gt.vertebrae.empty()) throw Error("localisation_error: no ground truth");

  std::vector<double> distances;
  distances.reserve(gt.vertebrae.size());
  for (const VertebraAnnotation& v : gt.vertebrae) {
    const Point c = v.centroid();
    double best = std::numeric_limits<double>::infinity();
    for (const VertebraVolume& det : dets) {
      for (const auto& [slice, quad] : det.quads) {
        const Point qc = quad.centroid();
        const double dy = (c.y - qc.y) * pixel_spacing_mm[0];
        const double dx = (c.x - qc.x) * pixel_spacing_mm[1];
        best = std::min(best, std::hypot(dx, dy));
      }
    }
    distances.push_back(best);
  }
  double mean = 0.0;
  for (double d : distances) mean += d;
  mean /= static_cast<double>(distances.size());
  double var = 0.0;
  for (double d : distances) var += (d - mean) * (d - mean);
  var /= static_cast<double>(distances.size());
  return {mean, std::sqrt(var)};
}

namespace {

std::map<int, int> token_by_volume_id(const label::LabelSequence& labels) {
  std::map<int, int> out;
  for (std::size_t i = 0; i < labels.volume_ids.size(); ++i) {
    out[labels.volume_ids[i]] = labels.tokens[i];
  }
  return out;
}

}  // namespace

std::pair<double, double> identification_rate(
    const Matching& matching, const AnnotationSet& gt,
    const std::vector<VertebraVolume>& dets,
    const label::LabelSequence& labels) {
  const std::size_t ng = gt.vertebrae.size();
  if (ng == 0) return {0.0, 0.0};
  const auto assigned = token_by_volume_id(labels);

  int exact = 0;
  int within1 = 0;
  for (std::size_t gi = 0; gi < ng; ++gi) {
    if (!matching.gt_match[gi].has_value()) continue;
    const int det_id = dets[static_cast<std::size_t>(*matching.gt_match[gi])].id;
    auto it = assigned.find(det_id);
    if (it == assigned.end()) continue;
    const int gt_token = label::token_from_name(gt.vertebrae[gi].level);
    if (it->second == gt_token) ++exact;
    const double delta = std::abs(label::token_eval_position(it->second) -
                                  label::token_eval_position(gt_token));
    if (delta <= 1.0) ++within1;
  }
  return {static_cast<double>(exact) / static_cast<double>(ng),
          static_cast<double>(within1) / static_cast<double>(ng)};
}

std::vector<PerLevelRow> per_level_breakdown(
    const Matching& matching, const AnnotationSet& gt,
    const std::vector<VertebraVolume>& dets,
    const label::LabelSequence& labels) {
  const auto assigned = token_by_volume_id(labels);
  std::vector<PerLevelRow> rows(label::kNumLevels);
  std::vector<int> detected(label::kNumLevels, 0);
  std::vector<int> correct(label::kNumLevels, 0);
  for (int n = 0; n < label::kNumLevels; ++n) {
    rows[static_cast<std::size_t>(n)].level = label::level_name(n);
  }

  for (std::size_t gi = 0; gi < gt.vertebrae.size(); ++gi) {
    const int gt_token = label::token_from_name(gt.vertebrae[gi].level);
    // The supernumerary L6 folds into the L5 row of the 24-level table.
    const int bucket = label::token_score_level(gt_token);
    rows[static_cast<std::size_t>(bucket)].gt_count += 1;
    if (!matching.gt_match[gi].has_value()) continue;
    detected[static_cast<std::size_t>(bucket)] += 1;
    const int det_id = dets[static_cast<std::size_t>(*matching.gt_match[gi])].id;
    auto it = assigned.find(det_id);
    if (it != assigned.end() && it->second == gt_token) {
      correct[static_cast<std::size_t>(bucket)] += 1;
    }
  }
  for (int n = 0; n < label::kNumLevels; ++n) {
    PerLevelRow& row = rows[static_cast<std::size_t>(n)];
    if (row.gt_count > 0) {
      row.recall = static_cast<double>(detected[static_cast<std::size_t>(n)]) / row.gt_count;
      row.idr = static_cast<double>(correct[static_cast<std::size_t>(n)]) / row.gt_count;
    }
  }
  return rows;
}

EvalReport evaluate_scan(const AnnotationSet& gt,
                         const std::vector<VertebraVolume>& dets,
                         const label::LabelSequence& labels) {
  EvalReport report;
  const Matching matching = match_detections(gt, dets);
  report.tp = matching.tp;
  report.fp = matching.fp;
  report.fn = matching.fn;
  // Empty detection sets report precision 1.0 by convention (zero FP).
  report.precision = (matching.tp + matching.fp) > 0
                         ? static_cast<double>(matching.tp) / (matching.tp + matching.fp)
                         : 1.0;
  report.recall = (matching.tp + matching.fn) > 0
                      ? static_cast<double>(matching.tp) / (matching.tp + matching.fn)
                      : 0.0;
  if (!dets.empty() && !gt.vertebrae.empty()) {
    std::tie(report.le_mean_mm, report.le_std_mm) =
        localisation_error(gt, dets, gt.pixel_spacing_mm);
  }
  std::tie(report.idr, report.idr_pm1) =
      identification_rate(matching, gt, dets, labels);
  report.per_level = per_level_breakdown(matching, gt, dets, labels);
  return report;
}

double mean_corner_error_px(const Matching& matching, const AnnotationSet& gt,
                            const std::vector<VertebraVolume>& dets) {
  double total = 0.0;
  long count = 0;
  for (std::size_t gi = 0; gi < gt.vertebrae.size(); ++gi) {
    if (!matching.gt_match[gi].has_value()) continue;
    const VertebraVolume& det = dets[static_cast<std::size_t>(*matching.gt_match[gi])];
    for (const auto& [slice, gt_quad] : gt.vertebrae[gi].quads) {
      auto it = det.quads.find(slice);
      if (it == det.quads.end()) continue;
      for (int c = 0; c < 4; ++c) {
        total += distance(gt_quad.corners[static_cast<std::size_t>(c)],
                          it->second.corners[static_cast<std::size_t>(c)]);
        ++count;
      }
    }
  }
  if (count == 0) throw Error("mean_corner_error_px: no matched corners");
  return total / static_cast<double>(count);
}

}  // namespace spinekit::evaluate
