#pragma once

#include <vector>

#include "spinekit/ndarray.hpp"
#include "spinekit/types.hpp"

namespace spinekit::targets {

/// Ground-truth channels rendered for one slice.
struct TargetMaps {
  NdArray detection;  // 5 x H x W, values in [0,1], peak 1.0 at landmarks
  NdArray grouping;   // 4 x 2 x H x W, displacement pixel - centroid
  NdArray mask;       // 4 x H x W, 1 where the grouping loss applies
};

struct RenderConfig {
  double c_var = 1.0;               // variance = c_var * sqrt(area)
  double nbhd_radius_factor = 2.0;  // grouping neighborhood radius / sigma
  double truncate_sigmas = 4.0;     // Gaussian support cutoff
};

/// Renders detection Gaussians (combined across vertebrae by pixelwise max)
/// and corner grouping fields for the quads of one slice. Overlapping
/// neighborhoods of the same corner type resolve nearest-corner-wins.
TargetMaps render_targets(const std::vector<Quadrilateral>& quads, long height,
                          long width, const RenderConfig& cfg = {});

/// Renders every slice of an annotation set into full stacks.
void render_stack(const AnnotationSet& ann, HeatmapStack& heatmaps,
                  VectorFieldStack& fields, const RenderConfig& cfg = {});

/// Weighted L1 detection loss over one 5xHxW slice pair. Pixels with target
/// >= threshold weigh N_k/(N_k+P_k), the rest P_k/(N_k+P_k), counted per
/// channel. A channel with no positives falls back to uniform 1/(H*W).
double detect_loss(const NdArray& response, const NdArray& target,
                   double threshold = 0.01);

/// Per-channel pixel counts and weights used by detect_loss. The total
/// weight mass above the threshold equals the mass below it.
struct ChannelWeights {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double w_pos = 0.0;  // weight of each supra-threshold pixel
  double w_neg = 0.0;
};

std::vector<ChannelWeights> detect_loss_weights(const NdArray& target,
                                                double threshold = 0.01);

/// Sum of squared vector errors over masked pixels only.
double group_loss(const NdArray& fields, const TargetMaps& targets);

}  // namespace spinekit::targets
