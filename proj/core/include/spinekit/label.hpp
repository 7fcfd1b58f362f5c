#pragma once

#include <string>
#include <vector>

#include "spinekit/ndarray.hpp"
#include "spinekit/types.hpp"

namespace spinekit::label {

/// Canonical level alphabet, top-down: C2..C7, T1..T12, L1..L5, S1.
/// Index 0 = C2, index 23 = S1.
inline constexpr int kNumLevels = 24;

/// Decoded sequences draw from a 25-token total order that inserts the
/// supernumerary L6 between L5 and S1:
///   tokens 0..22 = C2..L5, token 23 = L6, token 24 = S1.
inline constexpr int kTokenL6 = 23;
inline constexpr int kTokenS1 = 24;
inline constexpr int kNumTokens = 25;

/// Name of a canonical level index 0..23.
std::string level_name(int level_index);
/// Canonical index for a name; throws on unknown names. "L6" is not
/// canonical and is rejected here.
int level_index(const std::string& name);

/// Name of a decode token 0..24 (includes "L6").
std::string token_name(int token);
/// Token for a name, accepting "L6".
int token_from_name(const std::string& name);

inline bool token_is_l6(int token) { return token == kTokenL6; }
/// Canonical level index a token is scored against (L6 scores as L5).
inline int token_score_level(int token) {
  if (token == kTokenL6) return 22;  // L5
  return token == kTokenS1 ? 23 : token;
}
/// Position on the canonical level axis used for IDR±1 distances; L6 sits
/// halfway between L5 and S1.
inline double token_eval_position(int token) {
  if (token == kTokenL6) return 22.5;
  return token == kTokenS1 ? 23.0 : static_cast<double>(token);
}
inline bool token_is_lumbar(int token) {
  return (token >= 18 && token <= 22) || token == kTokenL6;
}

/// H x 24 matrix of level probabilities indexed by image row.
struct ProbabilityHeightMap {
  NdArray values;  // H x 24

  std::size_t height() const { return values.dim(0); }
  double at(std::size_t row, int level) const {
    return values.at(row, static_cast<std::size_t>(level));
  }
};

enum class LumbarVariant { None, Plus1, Minus1 };

const char* lumbar_variant_name(LumbarVariant v);

struct LabelSequence {
  std::vector<int> volume_ids;  // top-down
  std::vector<int> tokens;      // parallel to volume_ids, 25-token alphabet
  double log_score = 0.0;
  int skips_used = 0;
  LumbarVariant variant = LumbarVariant::None;

  std::vector<std::string> token_names() const;
};

struct BeamConfig {
  int beam_width = 5;
  double skip_penalty = 0.1;    // gamma, multiplies once per skipped level
  double lumbar_penalty = 0.2;  // lambda, multiplies once per sequence
  double temperature = 10.0;    // softmax recalibration temperature

  void validate() const;
};

/// Tight bounding box of a volume with each in-plane dimension doubled about
/// its center and clamped to the scan; carries the resample target expected
/// by downstream appearance models.
struct VolumeBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int slice0 = 0, slice1 = 0;
  std::array<int, 3> resample_shape{224, 224, 16};
};

VolumeBox extract_volume_box(const VertebraVolume& v, long height, long width);

/// exp(z/T) normalized, stabilized by max subtraction.
std::vector<double> softmax_temperature(const std::vector<double>& logits,
                                        double temperature);

/// Fills rows h_v1..h_v2 of each volume with its probability vector; rows
/// outside all spans stay zero. Overlapping rows are claimed in descending
/// detection-score order (first claim wins).
ProbabilityHeightMap build_phm(const std::vector<VertebraVolume>& volumes,
                               const std::vector<std::vector<double>>& probs,
                               long image_height);

/// Constrained beam search over level assignments, top-down. Levels must be
/// strictly increasing; each skipped level between consecutive detections
/// multiplies the probability by gamma; the one allowed lumbar variant
/// (insert L6, or let one lumbar skip cost lambda instead of gamma)
/// multiplies by lambda. Ties break toward lexicographically smaller token
/// sequences. `volumes_by_height` only supplies ids; probs[i] belongs to the
/// i-th volume from the top.
LabelSequence beam_decode(const std::vector<int>& volume_ids,
                          const std::vector<std::vector<double>>& probs,
                          const BeamConfig& cfg);

struct LabelResult {
  ProbabilityHeightMap phm;
  LabelSequence sequence;
};

/// Builds the probability-height map, reads each volume's vector back at its
/// centroid row, and decodes. An externally refined map can be supplied in
/// place of the built one (the refinement hook); by default the map is used
/// as built.
LabelResult label_scan(const std::vector<VertebraVolume>& volumes,
                       const std::vector<std::vector<double>>& probs,
                       long image_height, const BeamConfig& cfg,
                       const ProbabilityHeightMap* refined = nullptr);

}  // namespace spinekit::label
