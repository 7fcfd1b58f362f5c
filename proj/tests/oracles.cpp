#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace oracles {

namespace {

constexpr int kL6 = 23;
constexpr int kS1 = 24;
constexpr int kTokens = 25;

int score_level(int token) {
  if (token == kL6) return 22;
  return token == kS1 ? 23 : token;
}

// Canonical levels strictly between two tokens; L6 is optional and never
// counts as skipped.
int gap_between(int a, int b) {
  int gap = b - a - 1;
  if (a < kL6 && b > kL6) gap -= 1;
  return gap;
}

bool lumbar_in_gap(int a, int b) {
  const int lo = std::max(a + 1, 18);
  const int hi = std::min(b - 1, 22);
  return lo <= hi;
}

struct BruteState {
  const std::vector<std::vector<double>>* probs;
  double log_gamma;
  double log_lambda;
  std::vector<int> current;
  BruteDecodeResult best;
};

void consider(BruteState& st, double score) {
  if (!st.best.found || score > st.best.log_score ||
      (score == st.best.log_score && st.current < st.best.tokens)) {
    st.best.found = true;
    st.best.log_score = score;
    st.best.tokens = st.current;
  }
}

void recurse(BruteState& st, std::size_t vol, int last, bool variant_used,
             double score) {
  const std::size_t n = st.probs->size();
  if (vol == n) {
    consider(st, score);
    return;
  }
  const int first = vol == 0 ? 0 : last + 1;
  for (int t = first; t < kTokens; ++t) {
    const double p = (*st.probs)[vol][static_cast<std::size_t>(score_level(t))];
    if (!(p > 0.0)) continue;
    const double emit = std::log(p);
    const int gap = vol == 0 ? 0 : gap_between(last, t);

    st.current.push_back(t);
    if (t == kL6) {
      if (!variant_used) {
        recurse(st, vol + 1, t, true,
                score + emit + st.log_lambda + gap * st.log_gamma);
      }
    } else {
      recurse(st, vol + 1, t, variant_used, score + emit + gap * st.log_gamma);
      if (!variant_used && vol > 0 && gap >= 1 && lumbar_in_gap(last, t)) {
        recurse(st, vol + 1, t, true,
                score + emit + (gap - 1) * st.log_gamma + st.log_lambda);
      }
    }
    st.current.pop_back();
  }
}

}  // namespace

BruteDecodeResult brute_force_decode(
    const std::vector<std::vector<double>>& probs, double gamma,
    double lambda) {
  BruteState st;
  st.probs = &probs;
  st.log_gamma = std::log(gamma);
  st.log_lambda = std::log(lambda);
  recurse(st, 0, -1, false, 0.0);
  return st.best;
}

double lstsq_residual(const std::vector<std::pair<double, double>>& points,
                      int degree) {
  const int n = static_cast<int>(points.size());
  const int m = degree + 1;
  if (n < m) throw std::invalid_argument("lstsq oracle: not enough points");

  long double ymin = points[0].first, ymax = points[0].first;
  for (const auto& [y, x] : points) {
    ymin = std::min<long double>(ymin, y);
    ymax = std::max<long double>(ymax, y);
  }
  const long double shift = 0.5L * (ymin + ymax);
  const long double scale = ymax > ymin ? 0.5L * (ymax - ymin) : 1.0L;

  // Normal equations A^T A c = A^T b in long double over the scaled basis.
  std::vector<std::vector<long double>> ata(
      static_cast<std::size_t>(m), std::vector<long double>(m, 0.0L));
  std::vector<long double> atb(static_cast<std::size_t>(m), 0.0L);
  std::vector<long double> pow_cache(static_cast<std::size_t>(m));
  for (const auto& [y, x] : points) {
    const long double t = (static_cast<long double>(y) - shift) / scale;
    long double p = 1.0L;
    for (int j = 0; j < m; ++j) {
      pow_cache[static_cast<std::size_t>(j)] = p;
      p *= t;
    }
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        ata[i][j] += pow_cache[i] * pow_cache[j];
      }
      atb[static_cast<std::size_t>(i)] += pow_cache[i] * x;
    }
  }

  // Gaussian elimination with partial pivoting.
  for (int col = 0; col < m; ++col) {
    int pivot = col;
    for (int r = col + 1; r < m; ++r) {
      if (std::abs(ata[r][col]) > std::abs(ata[pivot][col])) pivot = r;
    }
    std::swap(ata[col], ata[pivot]);
    std::swap(atb[col], atb[pivot]);
    if (ata[col][col] == 0.0L) {
      throw std::runtime_error("lstsq oracle: singular system");
    }
    for (int r = col + 1; r < m; ++r) {
      const long double f = ata[r][col] / ata[col][col];
      for (int c = col; c < m; ++c) ata[r][c] -= f * ata[col][c];
      atb[static_cast<std::size_t>(r)] -= f * atb[static_cast<std::size_t>(col)];
    }
  }
  std::vector<long double> coef(static_cast<std::size_t>(m), 0.0L);
  for (int r = m - 1; r >= 0; --r) {
    long double acc = atb[static_cast<std::size_t>(r)];
    for (int c = r + 1; c < m; ++c) acc -= ata[r][c] * coef[static_cast<std::size_t>(c)];
    coef[static_cast<std::size_t>(r)] = acc / ata[r][r];
  }

  long double sse = 0.0L;
  for (const auto& [y, x] : points) {
    const long double t = (static_cast<long double>(y) - shift) / scale;
    long double fit = 0.0L;
    for (int j = m - 1; j >= 0; --j) fit = fit * t + coef[static_cast<std::size_t>(j)];
    sse += (fit - x) * (fit - x);
  }
  return static_cast<double>(std::sqrt(sse));
}

namespace {

// Half-plane membership for a convex ring (either orientation).
bool inside_convex(const spinekit::Quadrilateral& q, double x, double y) {
  double sign = 0.0;
  for (int i = 0; i < 4; ++i) {
    const auto& a = q.corners[static_cast<std::size_t>(i)];
    const auto& b = q.corners[static_cast<std::size_t>((i + 1) % 4)];
    const double c = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
    if (c == 0.0) continue;
    if (sign == 0.0) {
      sign = c;
    } else if ((c > 0) != (sign > 0)) {
      return false;
    }
  }
  return true;
}

}  // namespace

double monte_carlo_iou(const spinekit::Quadrilateral& a,
                       const spinekit::Quadrilateral& b, long samples,
                       std::uint64_t seed) {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;
  for (const auto& q : {a, b}) {
    for (const auto& p : q.corners) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
  }
  TestRng rng(seed);
  long in_both = 0, in_either = 0;
  for (long i = 0; i < samples; ++i) {
    const double x = rng.uniform(x0, x1);
    const double y = rng.uniform(y0, y1);
    const bool ia = inside_convex(a, x, y);
    const bool ib = inside_convex(b, x, y);
    if (ia && ib) ++in_both;
    if (ia || ib) ++in_either;
  }
  if (in_either == 0) return 0.0;
  return static_cast<double>(in_both) / static_cast<double>(in_either);
}

double mann_whitney_auc(const std::vector<double>& scores,
                        const std::vector<bool>& labels) {
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  if (pairs == 0) throw std::invalid_argument("mann_whitney: one class missing");
  return wins / static_cast<double>(pairs);
}

spinekit::Quadrilateral random_convex_quad(TestRng& rng, double cx, double cy,
                                           double radius) {
  // Four angles, one per quadrant, keep the ring convex and simple.
  const double base[4] = {1.25 * std::numbers::pi, 1.75 * std::numbers::pi,
                          0.25 * std::numbers::pi, 0.75 * std::numbers::pi};
  spinekit::Quadrilateral q;
  for (int i = 0; i < 4; ++i) {
    const double angle = base[i] + rng.uniform(-0.3, 0.3);
    const double r = radius * rng.uniform(0.6, 1.0);
    q.corners[static_cast<std::size_t>(i)] = {cx + r * std::cos(angle),
                                              cy + r * std::sin(angle)};
  }
  return q;
}

std::vector<double> random_prob_vector(TestRng& rng, int dims) {
  std::vector<double> v(static_cast<std::size_t>(dims));
  double sum = 0.0;
  for (double& x : v) {
    x = -std::log(1.0 - rng.uniform());
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

}  // namespace oracles
