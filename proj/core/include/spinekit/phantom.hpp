#pragma once

#include <cstdint>
#include <vector>

#include "spinekit/targets.hpp"
#include "spinekit/types.hpp"

namespace spinekit::phantom {

struct DropSpec {
  int top = 0;     // highest vertebrae removed from the rendered maps
  int bottom = 0;  // lowest vertebrae removed
  double per_vertebra_prob = 0.0;  // independent removal of the rest
};

struct PathologyFlags {
  bool fused_pair = false;
  bool collapsed = false;
  bool hemivertebra = false;
};

struct PhantomSpec {
  int slices = 16;
  int height = 512;
  int width = 192;
  // 24 is a full spine; 25 includes an L6, 23 has four lumbar vertebrae,
  // and smaller counts model partial fields of view ending at S1.
  int vertebra_count = 24;

  // Negative means auto: scaled to the image width (12 px / 20..26 px at
  // the default 192 px width, proportionally smaller on tiny images).
  double sagittal_amplitude_px = -1.0;  // lordosis/kyphosis S-curve depth
  double lateral_amplitude_px = 0.0;    // scoliosis, coronal plane
  double lateral_wavelength_px = 380.0;
  double slice_spacing_px = 4.0;

  double vertebra_width_min_px = -1.0;
  double vertebra_width_max_px = -1.0;
  double body_height_fraction = 0.78;  // of the per-vertebra slot

  double sagittal_amplitude() const;
  double width_min() const;
  double width_max() const;

  double noise_sigma = 0.0;       // additive Gaussian on rendered maps
  double confusion = 0.0;         // epsilon leaked to adjacent levels
  double appearance_noise = 0.0;  // log-normal jitter applied by corrupt
  DropSpec drops;
  PathologyFlags pathologies;
  bool render_maps = true;  // labelling-only experiments can skip rendering

  targets::RenderConfig render;
  std::array<double, 2> pixel_spacing_mm{0.5, 0.5};
  std::uint64_t seed = 0;

  void validate() const;  // throws when the spec is infeasible
};

struct PhantomTruth {
  AnnotationSet annotations;          // corners + level per vertebra
  std::vector<int> level_tokens;      // 25-token alphabet, top-down
  HeatmapStack heatmaps;              // ideal rendered targets
  VectorFieldStack fields;
  std::vector<std::vector<double>> appearance;  // per vertebra, 24-dim
};

/// Deterministic given spec.seed. Vertebrae are convex quadrilaterals
/// stacked along the spine curve; maps are rendered by the targets module
/// from the annotations; appearance vectors put 1-2*epsilon on the true
/// level and epsilon on each adjacent level (renormalized at the ends).
PhantomTruth generate(const PhantomSpec& spec);

struct CorruptedPhantom {
  HeatmapStack heatmaps;
  VectorFieldStack fields;
  std::vector<std::vector<double>> appearance;
  std::vector<bool> dropped;  // per true vertebra
};

/// Additive Gaussian noise on both stacks, log-normal confusion of the
/// appearance vectors, and drop handling: dropped vertebrae keep their
/// annotations but their responses are zeroed. Deterministic given the seed.
CorruptedPhantom corrupt(const PhantomTruth& truth, const PhantomSpec& spec);

}  // namespace spinekit::phantom
