#include "spinekit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace spinekit::geometry {

namespace {

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

std::vector<Point> quad_points(const Quadrilateral& q) {
  return {q.corners[0], q.corners[1], q.corners[2], q.corners[3]};
}

// Sutherland-Hodgman: clip `subject` against one directed edge a->b of a
// convex clip polygon whose interior lies on a consistent side.
std::vector<Point> clip_edge(const std::vector<Point>& subject, const Point& a,
                             const Point& b, double interior_sign) {
  std::vector<Point> out;
  out.reserve(subject.size() + 2);
  const std::size_t n = subject.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& cur = subject[i];
    const Point& nxt = subject[(i + 1) % n];
    const double dc = cross(a, b, cur) * interior_sign;
    const double dn = cross(a, b, nxt) * interior_sign;
    const bool cur_in = dc >= 0.0;
    const bool nxt_in = dn >= 0.0;
    if (cur_in) out.push_back(cur);
    if (cur_in != nxt_in) {
      const double t = dc / (dc - dn);
      out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
    }
  }
  return out;
}

double ring_area(const std::vector<Point>& poly) {
  double s = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * s;
}

void require_convex(const Quadrilateral& q, const char* which) {
  if (!quad_is_convex(q)) {
    throw Error(std::string("polygon_iou: ") + which + " quadrilateral is not convex");
  }
}

}  // namespace

double polygon_area(const std::vector<Point>& poly) {
  if (poly.size() < 3) throw Error("polygon_area needs at least 3 points");
  return std::abs(ring_area(poly));
}

double polygon_area(const Quadrilateral& q) { return polygon_area(quad_points(q)); }

bool point_in_polygon(const Point& p, const std::vector<Point>& poly) {
  if (poly.size() < 3) throw Error("point_in_polygon needs at least 3 points");
  const std::size_t n = poly.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = poly[j];
    const Point& b = poly[i];
    // On-edge counts as inside.
    const double d = cross(a, b, p);
    if (d == 0.0 && std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
        std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y)) {
      return true;
    }
    if ((b.y > p.y) != (a.y > p.y)) {
      const double t = (p.y - b.y) / (a.y - b.y);
      if (b.x + t * (a.x - b.x) > p.x) inside = !inside;
    }
  }
  return inside;
}

bool point_in_polygon(const Point& p, const Quadrilateral& q) {
  return point_in_polygon(p, quad_points(q));
}

double convex_intersection_area(const std::vector<Point>& a,
                                const std::vector<Point>& b) {
  const double sign = ring_area(b) >= 0.0 ? 1.0 : -1.0;
  std::vector<Point> clipped = a;
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < n && !clipped.empty(); ++i) {
    clipped = clip_edge(clipped, b[i], b[(i + 1) % n], sign);
  }
  if (clipped.size() < 3) return 0.0;
  return std::abs(ring_area(clipped));
}

double polygon_iou(const Quadrilateral& a, const Quadrilateral& b) {
  require_convex(a, "first");
  require_convex(b, "second");
  const double area_a = polygon_area(a);
  const double area_b = polygon_area(b);
  const double inter = convex_intersection_area(quad_points(a), quad_points(b));
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double Polynomial::evaluate(double y) const {
  const double t = (y - shift) / scale;
  double v = 0.0;
  for (std::size_t i = coefficients.size(); i-- > 0;) {
    v = v * t + coefficients[i];
  }
  return v;
}

double Polynomial::derivative(double y) const {
  const double t = (y - shift) / scale;
  double v = 0.0;
  for (std::size_t i = coefficients.size(); i-- > 1;) {
    v = v * t + coefficients[i] * static_cast<double>(i);
  }
  return v / scale;
}

double Polynomial::second_derivative(double y) const {
  const double t = (y - shift) / scale;
  double v = 0.0;
  for (std::size_t i = coefficients.size(); i-- > 2;) {
    v = v * t + coefficients[i] * static_cast<double>(i) * static_cast<double>(i - 1);
  }
  return v / (scale * scale);
}

FitResult fit_polynomial(const std::vector<std::pair<double, double>>& points,
                         int degree) {
  if (degree < 0) throw Error("fit_polynomial: degree must be non-negative");
  const int n = static_cast<int>(points.size());
  if (n < degree + 1) {
    throw Error("fit_polynomial: need at least degree+1 points, got " +
                std::to_string(n));
  }

  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();
  for (const auto& [y, x] : points) {
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  if (degree >= 1 && ymax - ymin <= 0.0) {
    throw Error("fit_polynomial: rank-deficient system (all heights equal)");
  }
  const double shift = 0.5 * (ymin + ymax);
  const double scale = degree >= 1 ? 0.5 * (ymax - ymin) : 1.0;

  Eigen::MatrixXd vand(n, degree + 1);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    const double t = (points[i].first - shift) / scale;
    double p = 1.0;
    for (int j = 0; j <= degree; ++j) {
      vand(i, j) = p;
      p *= t;
    }
    rhs(i) = points[i].second;
  }

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(vand);
  if (qr.rank() < degree + 1) {
    throw Error("fit_polynomial: rank-deficient system (repeated heights)");
  }
  const Eigen::VectorXd coef = qr.solve(rhs);

  FitResult result;
  result.poly.shift = shift;
  result.poly.scale = scale;
  result.poly.coefficients.assign(coef.data(), coef.data() + degree + 1);
  result.residual = (vand * coef - rhs).norm();
  return result;
}

double max_abs_curvature(const Polynomial& poly, double y_min, double y_max,
                         double samples_per_px) {
  if (!(y_max >= y_min)) throw Error("max_abs_curvature: empty range");
  if (samples_per_px <= 0.0) throw Error("max_abs_curvature: sampling density must be positive");
  const long samples =
      std::max<long>(1, std::lround((y_max - y_min) * samples_per_px)) + 1;
  double best = 0.0;
  for (long i = 0; i < samples; ++i) {
    const double y =
        samples == 1 ? y_min : y_min + (y_max - y_min) * i / (samples - 1);
    const double d1 = poly.derivative(y);
    const double d2 = poly.second_derivative(y);
    const double kappa = std::abs(d2) / std::pow(1.0 + d1 * d1, 1.5);
    best = std::max(best, kappa);
  }
  return best;
}

double max_centreline_deviation(
    const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw Error("max_centreline_deviation needs at least 2 points");
  double mean = 0.0;
  for (const auto& [y, x] : points) mean += x;
  mean /= static_cast<double>(points.size());
  double dev = 0.0;
  for (const auto& [y, x] : points) dev = std::max(dev, std::abs(x - mean));
  return dev;
}

}  // namespace spinekit::geometry
