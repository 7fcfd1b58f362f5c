#pragma once

#include <utility>
#include <vector>

#include "spinekit/types.hpp"

namespace spinekit::geometry {

/// Shoelace absolute area. Throws for fewer than 3 points.
double polygon_area(const std::vector<Point>& poly);
double polygon_area(const Quadrilateral& q);

/// Boundary counts as inside.
bool point_in_polygon(const Point& p, const std::vector<Point>& poly);
bool point_in_polygon(const Point& p, const Quadrilateral& q);

/// Intersection-over-union of two convex quadrilaterals via
/// Sutherland-Hodgman clipping; union = A + B - intersection.
/// Throws if either input is non-convex.
double polygon_iou(const Quadrilateral& a, const Quadrilateral& b);

/// Area of the convex intersection of two convex polygons.
double convex_intersection_area(const std::vector<Point>& a,
                                const std::vector<Point>& b);

/// Least-squares polynomial x = f(y). Coefficients are stored against the
/// shifted/scaled variable t = (y - shift) / scale so that quintic fits over
/// pixel ranges stay well conditioned; evaluate/derivative handle the
/// mapping, callers never see t.
struct Polynomial {
  std::vector<double> coefficients;  // c_0..c_d in t
  double shift = 0.0;
  double scale = 1.0;

  int degree() const { return static_cast<int>(coefficients.size()) - 1; }
  double evaluate(double y) const;
  double derivative(double y) const;
  double second_derivative(double y) const;
};

struct FitResult {
  Polynomial poly;
  double residual = 0.0;  // sqrt of the sum of squared errors
};

/// points are (y, x) pairs; requires at least degree+1 points.
FitResult fit_polynomial(const std::vector<std::pair<double, double>>& points,
                         int degree);

/// max over dense samples of |f''| / (1 + f'^2)^(3/2) on [y_min, y_max];
/// samples_per_px controls density (default one sample per pixel).
double max_abs_curvature(const Polynomial& poly, double y_min, double y_max,
                         double samples_per_px = 1.0);

/// Vertical-line fit is x = mean(x); returns max |x_i - mean|.
double max_centreline_deviation(
    const std::vector<std::pair<double, double>>& points);

}  // namespace spinekit::geometry
