#include "spinekit/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spinekit/geometry.hpp"
#include "spinekit/label.hpp"

namespace spinekit::phantom {

namespace {

// Small deterministic generator (splitmix64) so phantom output is
// reproducible independent of the standard library's distributions.
struct Rng {
  std::uint64_t state;
  bool has_spare = false;
  double spare = 0.0;

  explicit Rng(std::uint64_t seed, std::uint64_t stream)
      : state(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1))) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() {  // [0, 1)
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int n) {  // [0, n)
    return static_cast<int>(next() % static_cast<std::uint64_t>(n));
  }
  double normal() {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare = r * std::sin(a);
    has_spare = true;
    return r * std::cos(a);
  }
};

constexpr std::uint64_t kStreamGeometry = 0;
constexpr std::uint64_t kStreamDrops = 1;
constexpr std::uint64_t kStreamMapNoise = 2;
constexpr std::uint64_t kStreamAppearance = 3;

double vertical_margin(int height) {
  return std::clamp(0.055 * height, 8.0, 30.0);
}

double max_render_sigma(const PhantomSpec& spec, double pitch) {
  const double area = spec.width_max() * spec.body_height_fraction * pitch;
  return std::sqrt(spec.render.c_var * std::sqrt(area));
}

struct VertebraLayout {
  double cx = 0, cy = 0;       // body center, mid-sagittal
  double width = 0, height = 0;
  double tilt = 0;             // radians, from the sagittal curve tangent
  double slice_center = 0;     // continuous, in slice units
  double slice_half_extent = 0;
  bool hemi = false;           // wedge: right side height at 30%
  int fused_with_next = 0;     // 1 for the upper half of a fused pair
};

Quadrilateral make_quad(const VertebraLayout& v, double scale, int slice) {
  const double hw = 0.5 * v.width * scale;
  const double hh = 0.5 * v.height * scale;
  const double right_hh = v.hemi ? 0.3 * hh : hh;
  // Local corners before rotation, TL TR BR BL.
  const double lx[4] = {-hw, hw, hw, -hw};
  const double ly[4] = {-hh, -right_hh, right_hh, hh};
  const double c = std::cos(v.tilt);
  const double s = std::sin(v.tilt);
  Quadrilateral q;
  q.slice = slice;
  for (int i = 0; i < 4; ++i) {
    q.corners[static_cast<std::size_t>(i)] = {v.cx + c * lx[i] - s * ly[i],
                                              v.cy + s * lx[i] + c * ly[i]};
  }
  return q;
}

std::vector<int> level_tokens_for_count(int count) {
  using namespace label;
  std::vector<int> tokens;
  tokens.reserve(static_cast<std::size_t>(count));
  if (count == 24) {
    for (int t = 0; t <= 22; ++t) tokens.push_back(t);
    tokens.push_back(kTokenS1);
  } else if (count == 25) {
    for (int t = 0; t <= 22; ++t) tokens.push_back(t);
    tokens.push_back(kTokenL6);
    tokens.push_back(kTokenS1);
  } else if (count == 23) {  // four lumbar vertebrae, L5 absent
    for (int t = 0; t <= 21; ++t) tokens.push_back(t);
    tokens.push_back(kTokenS1);
  } else {  // partial field of view: the lowest `count` levels up from S1
    for (int c = 24 - count; c <= 23; ++c) {
      tokens.push_back(c == 23 ? kTokenS1 : c);
    }
  }
  return tokens;
}

std::vector<double> appearance_vector(int token, double epsilon) {
  const int center = label::token_score_level(token);
  std::vector<double> v(label::kNumLevels, 0.0);
  v[static_cast<std::size_t>(center)] = 1.0 - 2.0 * epsilon;
  if (center - 1 >= 0) v[static_cast<std::size_t>(center - 1)] = epsilon;
  if (center + 1 < label::kNumLevels) v[static_cast<std::size_t>(center + 1)] = epsilon;
  double sum = 0.0;
  for (double x : v) sum += x;
  for (double& x : v) x /= sum;  // renormalize the clamped end levels
  return v;
}

}  // namespace

double PhantomSpec::sagittal_amplitude() const {
  if (sagittal_amplitude_px >= 0.0) return sagittal_amplitude_px;
  return std::min(12.0, width * (12.0 / 192.0));
}

double PhantomSpec::width_min() const {
  if (vertebra_width_min_px >= 0.0) return vertebra_width_min_px;
  return std::min(20.0, width * (20.0 / 192.0));
}

double PhantomSpec::width_max() const {
  if (vertebra_width_max_px >= 0.0) return vertebra_width_max_px;
  return std::min(26.0, width * (26.0 / 192.0));
}

void PhantomSpec::validate() const {
  if (slices < 1 || height < 8 || width < 8) {
    throw Error("phantom: image shape too small");
  }
  if (vertebra_count < 2) throw Error("phantom: need at least 2 vertebrae");
  if (!(confusion >= 0.0 && confusion < 0.5)) {
    throw Error("phantom: confusion must lie in [0, 0.5)");
  }
  if (noise_sigma < 0.0 || appearance_noise < 0.0 ||
      lateral_amplitude_px < 0.0) {
    throw Error("phantom: noise levels and amplitudes must be non-negative");
  }
  if (lateral_wavelength_px <= 0.0 || slice_spacing_px <= 0.0) {
    throw Error("phantom: wavelength and slice spacing must be positive");
  }
  if (!(width_min() > 0.0 && width_max() >= width_min())) {
    throw Error("phantom: bad vertebra width range");
  }
  if (!(body_height_fraction > 0.1 && body_height_fraction < 0.95)) {
    throw Error("phantom: body height fraction must lie in (0.1, 0.95)");
  }
  if (drops.top < 0 || drops.bottom < 0 || drops.per_vertebra_prob < 0.0 ||
      drops.per_vertebra_prob > 1.0) {
    throw Error("phantom: bad drop spec");
  }
  if (vertebra_count > 25) {
    throw Error("phantom spec infeasible: more than 25 vertebrae cannot carry "
                "distinct levels");
  }

  const double margin = vertical_margin(height);
  const double pitch = (height - 2.0 * margin) / vertebra_count;
  if (pitch < 12.0) {
    throw Error("phantom spec infeasible: " + std::to_string(vertebra_count) +
                " vertebrae need more image height");
  }
  const double support =
      render.truncate_sigmas * max_render_sigma(*this, pitch);
  if (sagittal_amplitude() + 0.5 * width_max() + support > 0.5 * width) {
    throw Error("phantom spec infeasible: spine curve does not fit the image width");
  }
  const double half_extent =
      std::min(0.55 * width_max() / slice_spacing_px,
               0.5 * (slices - 1));
  if (slices > 1 &&
      lateral_amplitude_px / slice_spacing_px + half_extent >
          0.5 * (slices - 1) + 1e-9) {
    throw Error("phantom spec infeasible: lateral deviation exceeds the slice stack");
  }
  if (slices == 1 && lateral_amplitude_px > 0.0) {
    throw Error("phantom spec infeasible: scoliosis needs more than one slice");
  }
}

PhantomTruth generate(const PhantomSpec& spec) {
  spec.validate();
  Rng rng(spec.seed, kStreamGeometry);

  const int count = spec.vertebra_count;
  const double margin = vertical_margin(spec.height);
  const double pitch = (spec.height - 2.0 * margin) / count;
  const double gap = (1.0 - spec.body_height_fraction) * pitch;

  const double sagittal_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double lateral_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  auto curve_x = [&](double y) {
    const double u = (y - margin) / (spec.height - 2.0 * margin);
    return 0.5 * spec.width +
           spec.sagittal_amplitude() *
               (0.6 * std::sin(2.0 * std::numbers::pi * u + sagittal_phase) +
                0.4 * std::sin(std::numbers::pi * u));
  };

  std::vector<double> widths(static_cast<std::size_t>(count));
  for (double& w : widths) {
    w = rng.uniform(spec.width_min(), spec.width_max());
  }

  // Pathology placement stays in the thoracic band and the sites never
  // collide by construction.
  int fused_at = -1, collapsed_at = -1, hemi_at = -1;
  if (spec.pathologies.fused_pair && count >= 14) fused_at = 7 + rng.uniform_int(4);
  if (spec.pathologies.collapsed && count >= 16) collapsed_at = 12 + rng.uniform_int(3);
  if (spec.pathologies.hemivertebra && count >= 20) hemi_at = 16 + rng.uniform_int(3);

  std::vector<VertebraLayout> layout(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    VertebraLayout& v = layout[static_cast<std::size_t>(i)];
    const double slot_top = margin + i * pitch;
    v.cy = slot_top + 0.5 * pitch;
    v.cx = curve_x(v.cy);
    v.width = widths[static_cast<std::size_t>(i)];
    const double dy = 0.5;
    v.tilt = std::atan2(curve_x(v.cy + dy) - curve_x(v.cy - dy), 2.0 * dy);
    // Shrinking the body by the corner swing of the rotation keeps the
    // rotated vertical extent within the slot, so tilted neighbours never
    // overlap across the disc gap.
    v.height = std::max(6.0, spec.body_height_fraction * pitch -
                                 v.width * std::abs(std::sin(v.tilt)));
    v.hemi = i == hemi_at;
    if (i == collapsed_at) v.height *= 0.3;  // collapsed body, centered in its slot

    const double lateral_px =
        spec.lateral_amplitude_px *
        std::sin(2.0 * std::numbers::pi * v.cy / spec.lateral_wavelength_px +
                 lateral_phase);
    v.slice_center = 0.5 * (spec.slices - 1) + lateral_px / spec.slice_spacing_px;
    v.slice_half_extent = std::min(0.55 * v.width / spec.slice_spacing_px,
                                   0.5 * (spec.slices - 1));
  }

  if (fused_at >= 0) {
    // A fused pair is one tall body split by a shared edge; both halves use
    // the pair's center, tilt, width and lateral profile.
    VertebraLayout& a = layout[static_cast<std::size_t>(fused_at)];
    VertebraLayout& b = layout[static_cast<std::size_t>(fused_at + 1)];
    const double pair_cy = 0.5 * (a.cy + b.cy);
    const double cx = curve_x(pair_cy);
    const double dy = 0.5;
    const double tilt =
        std::atan2(curve_x(pair_cy + dy) - curve_x(pair_cy - dy), 2.0 * dy);
    const double width = 0.5 * (a.width + b.width);
    const double total_height =
        2.0 * pitch - gap - width * std::abs(std::sin(tilt));
    const double half = 0.5 * total_height;
    const double slice_center = 0.5 * (a.slice_center + b.slice_center);
    const double extent = 0.5 * (a.slice_half_extent + b.slice_half_extent);
    for (VertebraLayout* v : {&a, &b}) {
      v->width = width;
      v->height = half;
      v->tilt = tilt;
      v->slice_center = slice_center;
      v->slice_half_extent = extent;
      v->hemi = false;
    }
    // Centers sit half a body height either side of the shared edge, along
    // the tilted axis: local (0, -off) maps to (+off sin, -off cos).
    const double off = 0.5 * half;
    a.cx = cx + std::sin(tilt) * off;
    a.cy = pair_cy - std::cos(tilt) * off;
    b.cx = cx - std::sin(tilt) * off;
    b.cy = pair_cy + std::cos(tilt) * off;
    a.fused_with_next = 1;
  }

  PhantomTruth truth;
  truth.level_tokens = level_tokens_for_count(count);
  truth.annotations.slices = spec.slices;
  truth.annotations.height = spec.height;
  truth.annotations.width = spec.width;
  truth.annotations.pixel_spacing_mm = spec.pixel_spacing_mm;
  truth.annotations.slice_spacing_px = spec.slice_spacing_px;

  for (int i = 0; i < count; ++i) {
    const VertebraLayout& v = layout[static_cast<std::size_t>(i)];
    VertebraAnnotation ann;
    ann.level = label::token_name(truth.level_tokens[static_cast<std::size_t>(i)]);
    const int s_lo = std::max(0, static_cast<int>(std::ceil(v.slice_center - v.slice_half_extent)));
    const int s_hi = std::min(spec.slices - 1,
                              static_cast<int>(std::floor(v.slice_center + v.slice_half_extent)));
    for (int s = s_lo; s <= s_hi; ++s) {
      const double d = (s - v.slice_center) /
                       std::max(v.slice_half_extent, 1e-9);
      // Gentle in-plane shrink toward the lateral extent edges; adjacent
      // slices keep IoU > 0.5 for the cross-slice grouping.
      const double scale = 1.0 - 0.25 * d * d;
      ann.quads.emplace(s, make_quad(v, scale, s));
    }
    if (ann.quads.empty()) {
      const int s = std::clamp(static_cast<int>(std::lround(v.slice_center)), 0,
                               spec.slices - 1);
      ann.quads.emplace(s, make_quad(v, 1.0, s));
    }
    truth.annotations.vertebrae.push_back(std::move(ann));
  }

  truth.appearance.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    truth.appearance.push_back(appearance_vector(
        truth.level_tokens[static_cast<std::size_t>(i)], spec.confusion));
  }

  if (spec.render_maps) {
    targets::render_stack(truth.annotations, truth.heatmaps, truth.fields,
                          spec.render);
  } else {
    truth.heatmaps.data = NdArray();
    truth.fields.data = NdArray();
  }
  truth.heatmaps.pixel_spacing_mm = spec.pixel_spacing_mm;
  return truth;
}

CorruptedPhantom corrupt(const PhantomTruth& truth, const PhantomSpec& spec) {
  const std::size_t count = truth.annotations.vertebrae.size();
  CorruptedPhantom out;

  // Drops first: dropped vertebrae keep annotations but vanish from the maps.
  Rng drop_rng(spec.seed, kStreamDrops);
  out.dropped.assign(count, false);
  for (int i = 0; i < spec.drops.top && i < static_cast<int>(count); ++i) {
    out.dropped[static_cast<std::size_t>(i)] = true;
  }
  for (int i = 0; i < spec.drops.bottom && i < static_cast<int>(count); ++i) {
    out.dropped[count - 1 - static_cast<std::size_t>(i)] = true;
  }
  if (spec.drops.per_vertebra_prob > 0.0) {
    for (std::size_t i = 0; i < count; ++i) {
      const double u = drop_rng.uniform();
      if (!out.dropped[i] && u < spec.drops.per_vertebra_prob) {
        out.dropped[i] = true;
      }
    }
  }

  const bool any_dropped =
      std::find(out.dropped.begin(), out.dropped.end(), true) != out.dropped.end();
  const bool have_maps = !truth.heatmaps.data.empty();

  if (have_maps) {
    if (any_dropped) {
      AnnotationSet survivors = truth.annotations;
      survivors.vertebrae.clear();
      for (std::size_t i = 0; i < count; ++i) {
        if (!out.dropped[i]) {
          survivors.vertebrae.push_back(truth.annotations.vertebrae[i]);
        }
      }
      targets::render_stack(survivors, out.heatmaps, out.fields, spec.render);
    } else {
      out.heatmaps = truth.heatmaps;
      out.fields = truth.fields;
    }
    out.heatmaps.pixel_spacing_mm = truth.heatmaps.pixel_spacing_mm;

    if (spec.noise_sigma > 0.0) {
      Rng noise_rng(spec.seed, kStreamMapNoise);
      for (float& v : out.heatmaps.data.values()) {
        v += static_cast<float>(spec.noise_sigma * noise_rng.normal());
      }
      for (float& v : out.fields.data.values()) {
        v += static_cast<float>(spec.noise_sigma * noise_rng.normal());
      }
    }
  }

  out.appearance = truth.appearance;
  if (spec.appearance_noise > 0.0) {
    // Log-normal jitter plus a small support floor: softmax outputs are
    // strictly positive, so confused vectors must be too.
    constexpr double kSupportFloor = 1e-3 / label::kNumLevels;
    Rng app_rng(spec.seed, kStreamAppearance);
    for (auto& vec : out.appearance) {
      double sum = 0.0;
      for (double& p : vec) {
        p = p * std::exp(spec.appearance_noise * app_rng.normal()) + kSupportFloor;
        sum += p;
      }
      for (double& p : vec) p /= sum;
    }
  }
  return out;
}

}  // namespace spinekit::phantom
