#include "spinekit/targets.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "spinekit/geometry.hpp"

namespace spinekit::targets {

namespace {

struct LandmarkSpot {
  int channel;
  Point pos;
};

}  // namespace

TargetMaps render_targets(const std::vector<Quadrilateral>& quads, long height,
                          long width, const RenderConfig& cfg) {
  if (height < 1 || width < 1) throw Error("render_targets: empty canvas");
  const std::size_t h = static_cast<std::size_t>(height);
  const std::size_t w = static_cast<std::size_t>(width);
  TargetMaps maps;
  maps.detection = NdArray({static_cast<std::size_t>(kNumLandmarkKinds), h, w});
  maps.grouping = NdArray({static_cast<std::size_t>(kNumCornerKinds), 2, h, w});
  maps.mask = NdArray({static_cast<std::size_t>(kNumCornerKinds), h, w});

  // Per corner type, distance to the owning corner; nearest corner wins when
  // neighborhoods of the same type overlap.
  std::vector<double> owner_dist(static_cast<std::size_t>(kNumCornerKinds) * h * w,
                                 std::numeric_limits<double>::infinity());

  for (const Quadrilateral& q : quads) {
    const double area = geometry::polygon_area(q);
    const double variance = cfg.c_var * std::sqrt(area);
    if (!(variance > 0.0)) {
      throw Error("render_targets: degenerate quadrilateral (zero area)");
    }
    const double sigma = std::sqrt(variance);
    const Point centroid = q.centroid();

    const LandmarkSpot spots[kNumLandmarkKinds] = {
        {0, q.top_left()},      {1, q.top_right()},
        {2, q.bottom_left()},   {3, q.bottom_right()},
        {4, centroid},
    };

    const double support = cfg.truncate_sigmas * sigma;
    for (const LandmarkSpot& s : spots) {
      const long x0 = std::max<long>(0, static_cast<long>(std::floor(s.pos.x - support)));
      const long x1 = std::min<long>(width - 1, static_cast<long>(std::ceil(s.pos.x + support)));
      const long y0 = std::max<long>(0, static_cast<long>(std::floor(s.pos.y - support)));
      const long y1 = std::min<long>(height - 1, static_cast<long>(std::ceil(s.pos.y + support)));
      float* channel = maps.detection.data() + static_cast<std::size_t>(s.channel) * h * w;
      for (long y = y0; y <= y1; ++y) {
        const double dy = y - s.pos.y;
        for (long x = x0; x <= x1; ++x) {
          const double dx = x - s.pos.x;
          const double r2 = dx * dx + dy * dy;
          if (r2 > support * support) continue;
          const float g = static_cast<float>(std::exp(-r2 / (2.0 * variance)));
          float& cell = channel[static_cast<std::size_t>(y) * w + x];
          cell = std::max(cell, g);  // max keeps every peak at 1.0
        }
      }
    }

    const double radius = cfg.nbhd_radius_factor * sigma;
    for (int l = 0; l < kNumCornerKinds; ++l) {
      const Point corner = q.corner(kCornerKinds[l]);
      const long x0 = std::max<long>(0, static_cast<long>(std::floor(corner.x - radius)));
      const long x1 = std::min<long>(width - 1, static_cast<long>(std::ceil(corner.x + radius)));
      const long y0 = std::max<long>(0, static_cast<long>(std::floor(corner.y - radius)));
      const long y1 = std::min<long>(height - 1, static_cast<long>(std::ceil(corner.y + radius)));
      float* fx = maps.grouping.data() + (static_cast<std::size_t>(l) * 2 + 0) * h * w;
      float* fy = maps.grouping.data() + (static_cast<std::size_t>(l) * 2 + 1) * h * w;
      float* mask = maps.mask.data() + static_cast<std::size_t>(l) * h * w;
      double* dist = owner_dist.data() + static_cast<std::size_t>(l) * h * w;
      for (long y = y0; y <= y1; ++y) {
        const double dy = y - corner.y;
        for (long x = x0; x <= x1; ++x) {
          const double dx = x - corner.x;
          const double r2 = dx * dx + dy * dy;
          if (r2 > radius * radius) continue;
          const std::size_t at = static_cast<std::size_t>(y) * w + x;
          if (r2 < dist[at]) {
            dist[at] = r2;
            fx[at] = static_cast<float>(x - centroid.x);  // pixel - centroid
            fy[at] = static_cast<float>(y - centroid.y);
            mask[at] = 1.0f;
          }
        }
      }
    }
  }
  return maps;
}

void render_stack(const AnnotationSet& ann, HeatmapStack& heatmaps,
                  VectorFieldStack& fields, const RenderConfig& cfg) {
  const std::size_t s = static_cast<std::size_t>(ann.slices);
  const std::size_t h = static_cast<std::size_t>(ann.height);
  const std::size_t w = static_cast<std::size_t>(ann.width);
  heatmaps.data = NdArray({s, static_cast<std::size_t>(kNumLandmarkKinds), h, w});
  heatmaps.pixel_spacing_mm = ann.pixel_spacing_mm;
  fields.data = NdArray({s, static_cast<std::size_t>(kNumCornerKinds), 2, h, w});

  for (std::size_t slice = 0; slice < s; ++slice) {
    std::vector<Quadrilateral> quads;
    for (const VertebraAnnotation& v : ann.vertebrae) {
      auto it = v.quads.find(static_cast<int>(slice));
      if (it != v.quads.end()) quads.push_back(it->second);
    }
    if (quads.empty()) continue;
    TargetMaps maps = render_targets(quads, ann.height, ann.width, cfg);
    std::memcpy(heatmaps.data.data() + slice * maps.detection.size(),
                maps.detection.data(), maps.detection.size() * sizeof(float));
    std::memcpy(fields.data.data() + slice * maps.grouping.size(),
                maps.grouping.data(), maps.grouping.size() * sizeof(float));
  }
}

std::vector<ChannelWeights> detect_loss_weights(const NdArray& target,
                                                double threshold) {
  if (target.rank() < 2) throw Error("detect_loss: expected channels x pixels");
  const std::size_t channels = target.dim(0);
  const std::size_t per_channel = target.size() / channels;

  std::vector<ChannelWeights> weights(channels);
  for (std::size_t k = 0; k < channels; ++k) {
    const float* t = target.data() + k * per_channel;
    ChannelWeights& cw = weights[k];
    for (std::size_t i = 0; i < per_channel; ++i) {
      if (t[i] >= threshold) ++cw.positives;
    }
    cw.negatives = per_channel - cw.positives;
    if (cw.positives == 0) {
      // No positives leaves the paper's weights all zero; fall back to a
      // uniform weight so false positives in an empty channel still cost.
      cw.w_pos = cw.w_neg = 1.0 / static_cast<double>(per_channel);
    } else {
      const double total = static_cast<double>(cw.positives + cw.negatives);
      cw.w_pos = static_cast<double>(cw.negatives) / total;
      cw.w_neg = static_cast<double>(cw.positives) / total;
    }
  }
  return weights;
}

double detect_loss(const NdArray& response, const NdArray& target,
                   double threshold) {
  if (!response.same_shape(target)) throw Error("detect_loss: shape mismatch");
  const auto weights = detect_loss_weights(target, threshold);
  const std::size_t channels = target.dim(0);
  const std::size_t per_channel = target.size() / channels;

  double loss = 0.0;
  for (std::size_t k = 0; k < channels; ++k) {
    const float* y = response.data() + k * per_channel;
    const float* t = target.data() + k * per_channel;
    const ChannelWeights& cw = weights[k];
    double acc = 0.0;
    for (std::size_t i = 0; i < per_channel; ++i) {
      const double err = std::abs(static_cast<double>(y[i]) - t[i]);
      acc += (t[i] >= threshold ? cw.w_pos : cw.w_neg) * err;
    }
    loss += acc;
  }
  return loss;
}

double group_loss(const NdArray& fields, const TargetMaps& targets) {
  if (!fields.same_shape(targets.grouping)) throw Error("group_loss: shape mismatch");
  const std::size_t types = fields.dim(0);
  const std::size_t h = fields.dim(2);
  const std::size_t w = fields.dim(3);
  double loss = 0.0;
  for (std::size_t l = 0; l < types; ++l) {
    const float* vx = fields.data() + (l * 2 + 0) * h * w;
    const float* vy = fields.data() + (l * 2 + 1) * h * w;
    const float* rx = targets.grouping.data() + (l * 2 + 0) * h * w;
    const float* ry = targets.grouping.data() + (l * 2 + 1) * h * w;
    const float* m = targets.mask.data() + l * h * w;
    for (std::size_t i = 0; i < h * w; ++i) {
      if (m[i] == 0.0f) continue;
      const double dx = static_cast<double>(vx[i]) - rx[i];
      const double dy = static_cast<double>(vy[i]) - ry[i];
      loss += dx * dx + dy * dy;
    }
  }
  return loss;
}

}  // namespace spinekit::targets
