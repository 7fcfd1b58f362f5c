#include "spinekit/detect.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>

#include "spinekit/geometry.hpp"

namespace spinekit::detect {

void DetectConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw Error("detect: tau must lie in (0,1)");
  if (range < 0.0) throw Error("detect: range must be positive or 0 for auto");
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw Error("detect: iou threshold must lie in (0,1)");
  }
  if (min_area < 1) throw Error("detect: min component area must be >= 1");
}

namespace {

struct Component {
  double weight = 0.0;
  double wx = 0.0;
  double wy = 0.0;
  double peak = 0.0;
  long area = 0;
};

// 8-connected flood fill over the thresholded channel; component ids follow
// row-major first-encounter order so the landmark list is deterministic.
void label_components(const float* map, long h, long w, double tau,
                      std::vector<std::int32_t>& labels, int& count) {
  labels.assign(static_cast<std::size_t>(h * w), -1);
  count = 0;
  std::vector<long> stack;
  for (long start = 0; start < h * w; ++start) {
    if (map[start] < tau || labels[start] >= 0) continue;
    const int id = count++;
    labels[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const long at = stack.back();
      stack.pop_back();
      const long y = at / w;
      const long x = at % w;
      for (long dy = -1; dy <= 1; ++dy) {
        for (long dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const long ny = y + dy;
          const long nx = x + dx;
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          const long nat = ny * w + nx;
          if (map[nat] >= tau && labels[nat] < 0) {
            labels[nat] = id;
            stack.push_back(nat);
          }
        }
      }
    }
  }
}

std::pair<double, double> sample_field(const NdArray& field_slice, int type,
                                       const Point& p) {
  const long h = static_cast<long>(field_slice.dim(2));
  const long w = static_cast<long>(field_slice.dim(3));
  const double fx = std::clamp(p.x, 0.0, static_cast<double>(w - 1));
  const double fy = std::clamp(p.y, 0.0, static_cast<double>(h - 1));
  const long x0 = static_cast<long>(fx);
  const long x1 = std::min(x0 + 1, w - 1);
  const long y0 = static_cast<long>(fy);
  const long y1 = std::min(y0 + 1, h - 1);
  const double ax = fx - x0;
  const double ay = fy - y0;
  const float* vx = field_slice.data() + (static_cast<std::size_t>(type) * 2 + 0) * h * w;
  const float* vy = field_slice.data() + (static_cast<std::size_t>(type) * 2 + 1) * h * w;
  auto lerp2 = [&](const float* f) {
    const double top = f[y0 * w + x0] * (1.0 - ax) + f[y0 * w + x1] * ax;
    const double bot = f[y1 * w + x0] * (1.0 - ax) + f[y1 * w + x1] * ax;
    return top * (1.0 - ay) + bot * ay;
  };
  return {lerp2(vx), lerp2(vy)};
}

}  // namespace

std::vector<Landmark> extract_landmarks(const NdArray& heatmap_slice,
                                        const DetectConfig& cfg, int slice) {
  if (heatmap_slice.rank() != 3 ||
      heatmap_slice.dim(0) != static_cast<std::size_t>(kNumLandmarkKinds)) {
    throw Error("extract_landmarks expects a 5 x H x W slice");
  }
  cfg.validate();
  const long h = static_cast<long>(heatmap_slice.dim(1));
  const long w = static_cast<long>(heatmap_slice.dim(2));

  std::vector<Landmark> landmarks;
  std::vector<std::int32_t> labels;
  for (int channel = 0; channel < kNumLandmarkKinds; ++channel) {
    const float* map = heatmap_slice.data() + static_cast<std::size_t>(channel) * h * w;
    int count = 0;
    label_components(map, h, w, cfg.tau, labels, count);
    if (count == 0) continue;

    std::vector<Component> comps(static_cast<std::size_t>(count));
    for (long at = 0; at < h * w; ++at) {
      const std::int32_t id = labels[at];
      if (id < 0) continue;
      Component& c = comps[static_cast<std::size_t>(id)];
      const double v = map[at];
      c.weight += v;
      c.wx += v * static_cast<double>(at % w);
      c.wy += v * static_cast<double>(at / w);
      c.peak = std::max(c.peak, v);
      c.area += 1;
    }
    for (const Component& c : comps) {
      if (c.area < cfg.min_area || c.weight <= 0.0) continue;
      Landmark lm;
      lm.kind = static_cast<LandmarkKind>(channel);
      lm.position = {c.wx / c.weight, c.wy / c.weight};
      lm.slice = slice;
      lm.score = c.peak;
      landmarks.push_back(lm);
    }
  }
  return landmarks;
}

std::vector<Quadrilateral> group_slice(const std::vector<Landmark>& landmarks,
                                       const NdArray& field_slice,
                                       const DetectConfig& cfg) {
  if (field_slice.rank() != 4 ||
      field_slice.dim(0) != static_cast<std::size_t>(kNumCornerKinds) ||
      field_slice.dim(1) != 2) {
    throw Error("group_slice expects a 4 x 2 x H x W field slice");
  }
  cfg.validate();

  struct CornerCandidate {
    Point position;        // detected corner location
    Point implied_centroid;  // where its vector says the centroid is
  };
  std::array<std::vector<CornerCandidate>, kNumCornerKinds> corners;
  std::vector<Landmark> centroids;
  std::vector<double> vector_lengths;

  for (const Landmark& lm : landmarks) {
    if (lm.kind == LandmarkKind::Centroid) {
      centroids.push_back(lm);
      continue;
    }
    const int type = static_cast<int>(lm.kind);
    auto [vx, vy] = sample_field(field_slice, type, lm.position);
    const double sign = cfg.fields_point_to_centroid ? 1.0 : -1.0;
    CornerCandidate cand;
    cand.position = lm.position;
    cand.implied_centroid = {lm.position.x + sign * vx, lm.position.y + sign * vy};
    corners[static_cast<std::size_t>(type)].push_back(cand);
    vector_lengths.push_back(std::hypot(vx, vy));
  }
  if (centroids.empty()) return {};

  // Canonical processing order: the result does not depend on how the
  // caller enumerated the landmarks.
  std::sort(centroids.begin(), centroids.end(),
            [](const Landmark& a, const Landmark& b) {
              if (a.position.y != b.position.y) return a.position.y < b.position.y;
              return a.position.x < b.position.x;
            });
  for (auto& list : corners) {
    std::sort(list.begin(), list.end(),
              [](const CornerCandidate& a, const CornerCandidate& b) {
                if (a.position.y != b.position.y) return a.position.y < b.position.y;
                return a.position.x < b.position.x;
              });
  }

  double range = cfg.range;
  if (range <= 0.0) {
    // Auto range: twice the median implied corner-centroid distance.
    if (vector_lengths.empty()) return {};
    std::vector<double> sorted = vector_lengths;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    range = std::clamp(2.0 * median, 10.0, 100.0);
  }

  const std::size_t nc = centroids.size();
  constexpr int kUnassigned = -1;
  std::array<std::vector<int>, kNumCornerKinds> assignment;
  for (auto& a : assignment) a.assign(nc, kUnassigned);

  for (int type = 0; type < kNumCornerKinds; ++type) {
    const auto& cands = corners[static_cast<std::size_t>(type)];
    auto nearest = [&](std::size_t ci, const std::vector<bool>& excluded)
        -> std::pair<int, double> {
      int best = kUnassigned;
      double best_d = range;
      for (std::size_t j = 0; j < cands.size(); ++j) {
        if (excluded[j]) continue;
        const double d = distance(cands[j].implied_centroid,
                                  centroids[ci].position);
        if (d < best_d || (d == best_d && best == kUnassigned)) {
          best_d = d;
          best = static_cast<int>(j);
        }
      }
      return {best, best_d};
    };

    // Pass 1: every centroid claims the corner pointing closest to it.
    std::vector<bool> none(cands.size(), false);
    std::vector<int> claim(nc, kUnassigned);
    std::vector<double> claim_dist(nc, 0.0);
    for (std::size_t ci = 0; ci < nc; ++ci) {
      auto [j, d] = nearest(ci, none);
      claim[ci] = j;
      claim_dist[ci] = d;
    }

    // Conflicts: the centroid the corner points closest to keeps it.
    std::vector<int> winner_of(cands.size(), kUnassigned);
    for (std::size_t ci = 0; ci < nc; ++ci) {
      const int j = claim[ci];
      if (j == kUnassigned) continue;
      const int other = winner_of[static_cast<std::size_t>(j)];
      if (other == kUnassigned ||
          claim_dist[ci] < claim_dist[static_cast<std::size_t>(other)]) {
        winner_of[static_cast<std::size_t>(j)] = static_cast<int>(ci);
      }
    }
    std::vector<bool> taken(cands.size(), false);
    for (std::size_t j = 0; j < cands.size(); ++j) {
      const int ci = winner_of[j];
      if (ci == kUnassigned) continue;
      assignment[static_cast<std::size_t>(type)][static_cast<std::size_t>(ci)] =
          static_cast<int>(j);
      taken[j] = true;
    }

    // Pass 2: losers re-select among unclaimed corners; remaining conflicts
    // resolve closest-wins and the rest stay unassigned.
    std::vector<int> reclaim(nc, kUnassigned);
    std::vector<double> reclaim_dist(nc, 0.0);
    for (std::size_t ci = 0; ci < nc; ++ci) {
      if (assignment[static_cast<std::size_t>(type)][ci] != kUnassigned) continue;
      auto [j, d] = nearest(ci, taken);
      reclaim[ci] = j;
      reclaim_dist[ci] = d;
    }
    std::fill(winner_of.begin(), winner_of.end(), kUnassigned);
    for (std::size_t ci = 0; ci < nc; ++ci) {
      const int j = reclaim[ci];
      if (j == kUnassigned) continue;
      const int other = winner_of[static_cast<std::size_t>(j)];
      if (other == kUnassigned ||
          reclaim_dist[ci] < reclaim_dist[static_cast<std::size_t>(other)]) {
        winner_of[static_cast<std::size_t>(j)] = static_cast<int>(ci);
      }
    }
    for (std::size_t j = 0; j < cands.size(); ++j) {
      const int ci = winner_of[j];
      if (ci == kUnassigned) continue;
      assignment[static_cast<std::size_t>(type)][static_cast<std::size_t>(ci)] =
          static_cast<int>(j);
    }
  }

  std::vector<Quadrilateral> quads;
  for (std::size_t ci = 0; ci < nc; ++ci) {
    bool complete = true;
    for (int type = 0; type < kNumCornerKinds; ++type) {
      if (assignment[static_cast<std::size_t>(type)][ci] == kUnassigned) {
        complete = false;  // a centroid missing any corner type is discarded
        break;
      }
    }
    if (!complete) continue;
    Quadrilateral q;
    q.slice = centroids[ci].slice;
    const auto corner_at = [&](LandmarkKind kind) {
      const int type = static_cast<int>(kind);
      const int j = assignment[static_cast<std::size_t>(type)][ci];
      return corners[static_cast<std::size_t>(type)][static_cast<std::size_t>(j)]
          .position;
    };
    q.corners[0] = corner_at(LandmarkKind::TopLeft);
    q.corners[1] = corner_at(LandmarkKind::TopRight);
    q.corners[2] = corner_at(LandmarkKind::BottomRight);
    q.corners[3] = corner_at(LandmarkKind::BottomLeft);
    quads.push_back(q);
  }
  return quads;
}

namespace {

struct QuadRecord {
  Quadrilateral quad;
  double score = 1.0;
};

bool quad_order(const QuadRecord& a, const QuadRecord& b) {
  const Point ca = a.quad.centroid();
  const Point cb = b.quad.centroid();
  if (ca.y != cb.y) return ca.y < cb.y;
  return ca.x < cb.x;
}

std::vector<VertebraVolume> chain_volumes(
    std::vector<std::vector<QuadRecord>> per_slice, double iou_threshold) {
  // Canonical within-slice order makes the result independent of how the
  // caller enumerated quads.
  for (auto& slice : per_slice) {
    std::sort(slice.begin(), slice.end(), quad_order);
  }

  struct Chain {
    std::map<int, Quadrilateral> quads;
    double score_sum = 0.0;
    int last_slice = std::numeric_limits<int>::min();
  };
  std::vector<Chain> chains;

  for (std::size_t s = 0; s < per_slice.size(); ++s) {
    const auto& quads = per_slice[s];
    if (quads.empty()) continue;
    const int slice = static_cast<int>(s);

    struct Pair {
      double iou;
      std::size_t quad;
      std::size_t chain;
    };
    std::vector<Pair> pairs;
    for (std::size_t qi = 0; qi < quads.size(); ++qi) {
      for (std::size_t ci = 0; ci < chains.size(); ++ci) {
        if (chains[ci].last_slice != slice - 1) continue;  // strict adjacency
        const double iou = geometry::polygon_iou(
            quads[qi].quad, chains[ci].quads.rbegin()->second);
        if (iou > iou_threshold) pairs.push_back({iou, qi, ci});
      }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      if (a.iou != b.iou) return a.iou > b.iou;
      if (a.quad != b.quad) return a.quad < b.quad;
      return a.chain < b.chain;
    });

    std::vector<bool> quad_used(quads.size(), false);
    std::vector<bool> chain_used(chains.size(), false);
    for (const Pair& p : pairs) {
      if (quad_used[p.quad] || chain_used[p.chain]) continue;
      quad_used[p.quad] = true;
      chain_used[p.chain] = true;
      Chain& chain = chains[p.chain];
      chain.quads.emplace(slice, quads[p.quad].quad);
      chain.score_sum += quads[p.quad].score;
      chain.last_slice = slice;
    }
    for (std::size_t qi = 0; qi < quads.size(); ++qi) {
      if (quad_used[qi]) continue;
      Chain chain;
      chain.quads.emplace(slice, quads[qi].quad);
      chain.score_sum = quads[qi].score;
      chain.last_slice = slice;
      chains.push_back(std::move(chain));
    }
  }

  std::vector<VertebraVolume> volumes;
  volumes.reserve(chains.size());
  for (Chain& chain : chains) {
    VertebraVolume v;
    v.quads = std::move(chain.quads);
    v.score = chain.score_sum / static_cast<double>(v.quads.size());
    finalize_volume(v);
    volumes.push_back(std::move(v));
  }
  // Top-down id order for downstream labelling.
  std::sort(volumes.begin(), volumes.end(),
            [](const VertebraVolume& a, const VertebraVolume& b) {
              if (a.centroid3d.y != b.centroid3d.y) return a.centroid3d.y < b.centroid3d.y;
              if (a.centroid3d.x != b.centroid3d.x) return a.centroid3d.x < b.centroid3d.x;
              return a.centroid3d.slice < b.centroid3d.slice;
            });
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    volumes[i].id = static_cast<int>(i);
  }
  return volumes;
}

}  // namespace

std::vector<VertebraVolume> group_slices(
    const std::vector<std::vector<Quadrilateral>>& per_slice,
    double iou_threshold) {
  std::vector<std::vector<QuadRecord>> records(per_slice.size());
  for (std::size_t s = 0; s < per_slice.size(); ++s) {
    for (const Quadrilateral& q : per_slice[s]) records[s].push_back({q, 1.0});
  }
  return chain_volumes(std::move(records), iou_threshold);
}

std::vector<VertebraVolume> group_slices_scored(
    const std::vector<std::vector<Quadrilateral>>& per_slice,
    const std::vector<std::vector<double>>& per_slice_scores,
    double iou_threshold) {
  if (per_slice.size() != per_slice_scores.size()) {
    throw Error("group_slices_scored: slice count mismatch");
  }
  std::vector<std::vector<QuadRecord>> records(per_slice.size());
  for (std::size_t s = 0; s < per_slice.size(); ++s) {
    if (per_slice[s].size() != per_slice_scores[s].size()) {
      throw Error("group_slices_scored: score count mismatch");
    }
    for (std::size_t i = 0; i < per_slice[s].size(); ++i) {
      records[s].push_back({per_slice[s][i], per_slice_scores[s][i]});
    }
  }
  return chain_volumes(std::move(records), iou_threshold);
}

namespace {

// Quads plus the score of the centroid landmark that produced each of them.
std::pair<std::vector<Quadrilateral>, std::vector<double>> detect_one_slice(
    const HeatmapStack& heatmaps, const VectorFieldStack& fields,
    const DetectConfig& cfg, std::size_t slice) {
  const std::size_t h = heatmaps.height();
  const std::size_t w = heatmaps.width();
  NdArray heat_slice({static_cast<std::size_t>(kNumLandmarkKinds), h, w});
  std::copy_n(heatmaps.data.data() + slice * heat_slice.size(),
              heat_slice.size(), heat_slice.data());
  NdArray field_slice({static_cast<std::size_t>(kNumCornerKinds), 2, h, w});
  std::copy_n(fields.data.data() + slice * field_slice.size(),
              field_slice.size(), field_slice.data());

  const auto landmarks =
      extract_landmarks(heat_slice, cfg, static_cast<int>(slice));
  const auto quads = group_slice(landmarks, field_slice, cfg);

  // Score each quad by the response of the centroid landmark nearest to it.
  std::vector<double> scores;
  scores.reserve(quads.size());
  for (const Quadrilateral& q : quads) {
    const Point c = q.centroid();
    double best_d = std::numeric_limits<double>::infinity();
    double score = 1.0;
    for (const Landmark& lm : landmarks) {
      if (lm.kind != LandmarkKind::Centroid) continue;
      const double d = distance(lm.position, c);
      if (d < best_d) {
        best_d = d;
        score = lm.score;
      }
    }
    scores.push_back(score);
  }
  return {quads, scores};
}

}  // namespace

std::vector<VertebraVolume> detect_scan(const HeatmapStack& heatmaps,
                                        const VectorFieldStack& fields,
                                        const DetectConfig& cfg, int threads) {
  heatmaps.validate();
  fields.validate(heatmaps);
  cfg.validate();

  const std::size_t slices = heatmaps.slices();
  std::vector<std::vector<Quadrilateral>> per_slice(slices);
  std::vector<std::vector<double>> per_scores(slices);

  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(slices)));
  if (workers == 1) {
    for (std::size_t s = 0; s < slices; ++s) {
      std::tie(per_slice[s], per_scores[s]) =
          detect_one_slice(heatmaps, fields, cfg, s);
    }
  } else {
    std::vector<std::future<void>> futures;
    futures.reserve(static_cast<std::size_t>(workers));
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < workers; ++t) {
      futures.push_back(std::async(std::launch::async, [&]() {
        for (std::size_t s = next.fetch_add(1); s < slices;
             s = next.fetch_add(1)) {
          std::tie(per_slice[s], per_scores[s]) =
              detect_one_slice(heatmaps, fields, cfg, s);
        }
      }));
    }
    for (auto& f : futures) f.get();
  }
  return group_slices_scored(per_slice, per_scores, cfg.iou_threshold);
}

std::vector<VertebraVolume> detect_scan(const TensorBundle& bundle,
                                        const DetectConfig& cfg, int threads) {
  auto check_axes = [&](const char* name, const char* expected) {
    auto it = bundle.manifest.find(name);
    if (it != bundle.manifest.end() && !it->second.axis_order.empty() &&
        it->second.axis_order != expected) {
      throw Error(std::string("bundle array '") + name + "' has axis order '" +
                  it->second.axis_order + "', expected '" + expected + "'");
    }
  };
  check_axes("heatmaps", bundle_axes::kHeatmaps);
  check_axes("fields", bundle_axes::kFields);

  HeatmapStack heatmaps;
  heatmaps.data = bundle.get("heatmaps");
  VectorFieldStack fields;
  fields.data = bundle.get("fields");
  return detect_scan(heatmaps, fields, cfg, threads);
}

}  // namespace spinekit::detect
