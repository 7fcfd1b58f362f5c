#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spinekit/ndarray.hpp"

namespace spinekit {

struct Point {
  double x = 0.0;  // column, increases rightward
  double y = 0.0;  // row, increases downward
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double slice = 0.0;
};

inline double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// One landmark channel per kind; the first four form the corner set.
enum class LandmarkKind : int {
  TopLeft = 0,
  TopRight = 1,
  BottomLeft = 2,
  BottomRight = 3,
  Centroid = 4,
};

inline constexpr int kNumLandmarkKinds = 5;
inline constexpr int kNumCornerKinds = 4;

inline constexpr std::array<LandmarkKind, 4> kCornerKinds = {
    LandmarkKind::TopLeft, LandmarkKind::TopRight, LandmarkKind::BottomLeft,
    LandmarkKind::BottomRight};

const char* landmark_kind_name(LandmarkKind k);

struct Landmark {
  LandmarkKind kind = LandmarkKind::Centroid;
  Point position;
  int slice = 0;
  double score = 0.0;  // peak response of the component
};

/// Corners stored in TopLeft, TopRight, BottomRight, BottomLeft order.
struct Quadrilateral {
  std::array<Point, 4> corners{};
  int slice = 0;

  Point top_left() const { return corners[0]; }
  Point top_right() const { return corners[1]; }
  Point bottom_right() const { return corners[2]; }
  Point bottom_left() const { return corners[3]; }
  Point corner(LandmarkKind k) const;

  Point centroid() const {
    return {(corners[0].x + corners[1].x + corners[2].x + corners[3].x) / 4.0,
            (corners[0].y + corners[1].y + corners[2].y + corners[3].y) / 4.0};
  }
};

/// True when the corner ring is non-self-intersecting with positive area and
/// the top corners sit above the bottom corners (image coordinates).
bool quad_is_valid(const Quadrilateral& q);
bool quad_is_convex(const Quadrilateral& q);

/// One vertebra grouped across a contiguous slice range.
struct VertebraVolume {
  int id = 0;
  std::map<int, Quadrilateral> quads;  // slice index -> quad
  Point3 centroid3d;
  std::pair<double, double> height_span{0.0, 0.0};  // min/max y in pixels
  double score = 1.0;  // mean centroid-landmark response

  int first_slice() const { return quads.empty() ? 0 : quads.begin()->first; }
  int last_slice() const { return quads.empty() ? 0 : quads.rbegin()->first; }

  /// Quad in `slice` if present, otherwise the nearest slice of the volume.
  const Quadrilateral& quad_at_or_nearest(int slice) const;
};

/// Recomputes centroid3d and height_span from the quads.
void finalize_volume(VertebraVolume& v);

struct HeatmapStack {
  NdArray data;  // S x 5 x H x W
  std::array<double, 2> pixel_spacing_mm{0.5, 0.5};  // row, col

  std::size_t slices() const { return data.dim(0); }
  std::size_t height() const { return data.dim(2); }
  std::size_t width() const { return data.dim(3); }
  void validate() const;
};

struct VectorFieldStack {
  NdArray data;  // S x 4 x 2 x H x W  (corner type, x/y component)

  std::size_t slices() const { return data.dim(0); }
  std::size_t height() const { return data.dim(3); }
  std::size_t width() const { return data.dim(4); }
  void validate(const HeatmapStack& companion) const;
};

struct VertebraAnnotation {
  std::string level;                   // e.g. "T7", "L6"
  std::map<int, Quadrilateral> quads;  // slice -> ground-truth corners

  int mid_slice() const;
  /// Centroid of the mid-slice quad (mean of its 4 corners).
  Point centroid() const;
  Point3 centroid3d() const;
};

struct AnnotationSet {
  int slices = 0;
  int height = 0;
  int width = 0;
  std::array<double, 2> pixel_spacing_mm{0.5, 0.5};
  double slice_spacing_px = 4.0;  // lateral distance between slices, pixels
  std::vector<VertebraAnnotation> vertebrae;
};

}  // namespace spinekit
