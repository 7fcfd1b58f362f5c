#include "spinekit/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace spinekit {

bool NdArray::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return std::isfinite(v); });
}

std::string NdArray::shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

const char* landmark_kind_name(LandmarkKind k) {
  switch (k) {
    case LandmarkKind::TopLeft: return "top_left";
    case LandmarkKind::TopRight: return "top_right";
    case LandmarkKind::BottomLeft: return "bottom_left";
    case LandmarkKind::BottomRight: return "bottom_right";
    case LandmarkKind::Centroid: return "centroid";
  }
  return "?";
}

Point Quadrilateral::corner(LandmarkKind k) const {
  switch (k) {
    case LandmarkKind::TopLeft: return corners[0];
    case LandmarkKind::TopRight: return corners[1];
    case LandmarkKind::BottomRight: return corners[2];
    case LandmarkKind::BottomLeft: return corners[3];
    default: throw Error("corner(): centroid is not a corner");
  }
}

namespace {

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool segments_properly_intersect(const Point& a, const Point& b,
                                 const Point& c, const Point& d) {
  const double d1 = cross(c, d, a);
  const double d2 = cross(c, d, b);
  const double d3 = cross(a, b, c);
  const double d4 = cross(a, b, d);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
         ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

double signed_area(const Quadrilateral& q) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Point& a = q.corners[i];
    const Point& b = q.corners[(i + 1) % 4];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * s;
}

}  // namespace

bool quad_is_valid(const Quadrilateral& q) {
  if (std::abs(signed_area(q)) <= 0.0) return false;
  // Only opposite edges of a quad can cross.
  if (segments_properly_intersect(q.corners[0], q.corners[1], q.corners[2],
                                  q.corners[3])) {
    return false;
  }
  if (segments_properly_intersect(q.corners[1], q.corners[2], q.corners[3],
                                  q.corners[0])) {
    return false;
  }
  const double top_y = 0.5 * (q.corners[0].y + q.corners[1].y);
  const double bottom_y = 0.5 * (q.corners[2].y + q.corners[3].y);
  return top_y < bottom_y;
}

bool quad_is_convex(const Quadrilateral& q) {
  int sign = 0;
  for (int i = 0; i < 4; ++i) {
    const double c = cross(q.corners[i], q.corners[(i + 1) % 4],
                           q.corners[(i + 2) % 4]);
    if (c == 0.0) continue;
    const int s = c > 0 ? 1 : -1;
    if (sign == 0) {
      sign = s;
    } else if (s != sign) {
      return false;
    }
  }
  return sign != 0;
}

const Quadrilateral& VertebraVolume::quad_at_or_nearest(int slice) const {
  if (quads.empty()) throw Error("volume has no quadrilaterals");
  auto it = quads.lower_bound(slice);
  if (it == quads.end()) return std::prev(it)->second;
  if (it->first == slice || it == quads.begin()) return it->second;
  auto prev = std::prev(it);
  return (slice - prev->first) <= (it->first - slice) ? prev->second
                                                      : it->second;
}

void finalize_volume(VertebraVolume& v) {
  if (v.quads.empty()) throw Error("cannot finalize an empty volume");
  double sx = 0, sy = 0, ss = 0;
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();
  for (const auto& [slice, quad] : v.quads) {
    const Point c = quad.centroid();
    sx += c.x;
    sy += c.y;
    ss += slice;
    for (const Point& p : quad.corners) {
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  const double n = static_cast<double>(v.quads.size());
  v.centroid3d = {sx / n, sy / n, ss / n};
  v.height_span = {ymin, ymax};
}

void HeatmapStack::validate() const {
  if (data.rank() != 4 || data.dim(1) != kNumLandmarkKinds) {
    throw Error("heatmap stack must be S x 5 x H x W, got " +
                NdArray::shape_string(data.shape()));
  }
  if (pixel_spacing_mm[0] <= 0 || pixel_spacing_mm[1] <= 0) {
    throw Error("pixel spacing must be positive");
  }
  if (!data.all_finite()) throw Error("heatmap stack contains non-finite values");
}

void VectorFieldStack::validate(const HeatmapStack& companion) const {
  if (data.rank() != 5 || data.dim(1) != kNumCornerKinds || data.dim(2) != 2) {
    throw Error("vector-field stack must be S x 4 x 2 x H x W, got " +
                NdArray::shape_string(data.shape()));
  }
  if (data.dim(0) != companion.slices() || data.dim(3) != companion.height() ||
      data.dim(4) != companion.width()) {
    throw Error("vector-field stack shape does not match heatmap stack");
  }
  if (!data.all_finite()) throw Error("vector-field stack contains non-finite values");
}

int VertebraAnnotation::mid_slice() const {
  if (quads.empty()) throw Error("annotation has no slices");
  auto it = quads.begin();
  std::advance(it, (quads.size() - 1) / 2);
  return it->first;
}

Point VertebraAnnotation::centroid() const {
  return quads.at(mid_slice()).centroid();
}

Point3 VertebraAnnotation::centroid3d() const {
  double sx = 0, sy = 0, ss = 0;
  for (const auto& [slice, quad] : quads) {
    const Point c = quad.centroid();
    sx += c.x;
    sy += c.y;
    ss += slice;
  }
  const double n = static_cast<double>(quads.size());
  return {sx / n, sy / n, ss / n};
}

}  // namespace spinekit
