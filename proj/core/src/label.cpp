#include "spinekit/label.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spinekit::label {

std::string level_name(int level_index) {
  if (level_index < 0 || level_index >= kNumLevels) {
    throw Error("level index out of range: " + std::to_string(level_index));
  }
  if (level_index <= 5) return "C" + std::to_string(level_index + 2);
  if (level_index <= 17) return "T" + std::to_string(level_index - 5);
  if (level_index <= 22) return "L" + std::to_string(level_index - 17);
  return "S1";
}

int level_index(const std::string& name) {
  for (int i = 0; i < kNumLevels; ++i) {
    if (level_name(i) == name) return i;
  }
  throw Error("unknown vertebra level '" + name + "'");
}

std::string token_name(int token) {
  if (token == kTokenL6) return "L6";
  if (token == kTokenS1) return "S1";
  return level_name(token);
}

int token_from_name(const std::string& name) {
  if (name == "L6") return kTokenL6;
  const int idx = level_index(name);
  return idx == 23 ? kTokenS1 : idx;
}

const char* lumbar_variant_name(LumbarVariant v) {
  switch (v) {
    case LumbarVariant::None: return "none";
    case LumbarVariant::Plus1: return "plus1";
    case LumbarVariant::Minus1: return "minus1";
  }
  return "?";
}

std::vector<std::string> LabelSequence::token_names() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (int t : tokens) out.push_back(token_name(t));
  return out;
}

void BeamConfig::validate() const {
  if (beam_width < 1) throw Error("beam width must be >= 1");
  if (!(skip_penalty > 0.0 && skip_penalty <= 1.0)) {
    throw Error("skip penalty must lie in (0,1]");
  }
  if (!(lumbar_penalty > 0.0 && lumbar_penalty <= 1.0)) {
    throw Error("lumbar penalty must lie in (0,1]");
  }
  if (!(temperature > 0.0)) throw Error("temperature must be positive");
}

VolumeBox extract_volume_box(const VertebraVolume& v, long height, long width) {
  if (v.quads.empty()) throw Error("extract_volume_box: empty volume");
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;
  for (const auto& [slice, quad] : v.quads) {
    for (const Point& p : quad.corners) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
  }
  if (!(x1 > x0) || !(y1 > y0)) {
    throw Error("extract_volume_box: degenerate volume (zero area)");
  }
  // Double each in-plane dimension about the box center.
  const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
  const double hx = x1 - x0, hy = y1 - y0;
  VolumeBox box;
  box.x0 = std::max(0.0, cx - hx);
  box.x1 = std::min(static_cast<double>(width - 1), cx + hx);
  box.y0 = std::max(0.0, cy - hy);
  box.y1 = std::min(static_cast<double>(height - 1), cy + hy);
  box.slice0 = v.first_slice();
  box.slice1 = v.last_slice();
  return box;
}

std::vector<double> softmax_temperature(const std::vector<double>& logits,
                                        double temperature) {
  if (logits.empty()) throw Error("softmax of an empty vector");
  if (!(temperature > 0.0)) throw Error("temperature must be positive");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - m) / temperature);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

namespace {

// Scores only depend on probabilities up to a per-volume scale, so the
// decoder accepts any non-negative weight vector; the height map is the
// normalized interface and insists on unit row sums.
double checked_vector_sum(const std::vector<double>& p) {
  if (p.size() != static_cast<std::size_t>(kNumLevels)) {
    throw Error("probability vectors must have 24 entries");
  }
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error("probability vectors must be finite and non-negative");
    }
    sum += v;
  }
  if (!(sum > 0.0)) throw Error("probability vector is all zero");
  return sum;
}

void check_prob_vector(const std::vector<double>& p) {
  if (std::abs(checked_vector_sum(p) - 1.0) > 1e-6) {
    throw Error("probability vector does not sum to 1");
  }
}

}  // namespace

ProbabilityHeightMap build_phm(const std::vector<VertebraVolume>& volumes,
                               const std::vector<std::vector<double>>& probs,
                               long image_height) {
  if (volumes.size() != probs.size()) {
    throw Error("build_phm: one probability vector per volume required");
  }
  if (image_height < 1) throw Error("build_phm: image height must be positive");
  for (const auto& p : probs) check_prob_vector(p);

  ProbabilityHeightMap map;
  map.values = NdArray({static_cast<std::size_t>(image_height),
                        static_cast<std::size_t>(kNumLevels)});

  // Rows are claimed in descending detection-score order; overlapping spans
  // only write rows nobody claimed yet.
  std::vector<std::size_t> order(volumes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (volumes[a].score != volumes[b].score) {
      return volumes[a].score > volumes[b].score;
    }
    return volumes[a].id < volumes[b].id;
  });

  std::vector<bool> claimed(static_cast<std::size_t>(image_height), false);
  for (std::size_t vi : order) {
    const auto [h1, h2] = volumes[vi].height_span;
    if (h1 < 0.0 || h2 > static_cast<double>(image_height - 1) || h2 < h1) {
      throw Error("build_phm: volume span outside the image");
    }
    const long r0 = static_cast<long>(std::ceil(h1));
    const long r1 = static_cast<long>(std::floor(h2));
    for (long r = r0; r <= r1; ++r) {
      if (claimed[static_cast<std::size_t>(r)]) continue;
      claimed[static_cast<std::size_t>(r)] = true;
      float* row = map.values.data() + static_cast<std::size_t>(r) * kNumLevels;
      for (int n = 0; n < kNumLevels; ++n) {
        row[n] = static_cast<float>(probs[vi][static_cast<std::size_t>(n)]);
      }
    }
  }
  return map;
}

namespace {

// Number of canonical levels strictly between tokens a and b; the optional
// L6 token is never counted as skipped.
int canonical_gap(int a, int b) {
  int gap = b - a - 1;
  if (a < kTokenL6 && b > kTokenL6) gap -= 1;
  return gap;
}

bool gap_contains_lumbar(int a, int b) {
  // Canonical lumbar levels are tokens 18..22 (L1..L5).
  const int lo = std::max(a + 1, 18);
  const int hi = std::min(b - 1, 22);
  return lo <= hi;
}

struct Hypothesis {
  std::int32_t parent = -1;
  std::int8_t token = 0;
  LumbarVariant variant = LumbarVariant::None;
  std::int16_t skips = 0;
  double score = 0.0;
};

// Token sequence of a hypothesis, walked back through the layers.
std::vector<int> backtrack(const std::vector<std::vector<Hypothesis>>& layers,
                           std::size_t layer, std::int32_t index) {
  std::vector<int> tokens(layer + 1);
  std::int32_t at = index;
  for (std::size_t l = layer + 1; l-- > 0;) {
    tokens[l] = layers[l][static_cast<std::size_t>(at)].token;
    at = layers[l][static_cast<std::size_t>(at)].parent;
  }
  return tokens;
}

}  // namespace

LabelSequence beam_decode(const std::vector<int>& volume_ids,
                          const std::vector<std::vector<double>>& probs,
                          const BeamConfig& cfg) {
  cfg.validate();
  const std::size_t n = volume_ids.size();
  if (n == 0) throw Error("beam_decode: need at least one volume");
  if (probs.size() != n) {
    throw Error("beam_decode: one probability vector per volume required");
  }
  if (n > static_cast<std::size_t>(kNumTokens)) {
    throw Error("beam_decode: " + std::to_string(n) +
                " volumes cannot be assigned distinct levels (max 25 with the "
                "+1 lumbar variant)");
  }
  for (const auto& p : probs) checked_vector_sum(p);

  const double log_gamma = std::log(cfg.skip_penalty);
  const double log_lambda = std::log(cfg.lumbar_penalty);

  auto emission = [&](std::size_t vol, int token) {
    const double p = probs[vol][static_cast<std::size_t>(token_score_level(token))];
    return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<Hypothesis>> layers(n);

  // Exact completion budget: a hypothesis sitting on `token` with
  // `remaining` volumes still to label needs that many strictly larger
  // tokens, and L6 only counts while the lumbar variant is unspent.
  auto can_complete = [](int token, bool variant_used, int remaining) {
    int available = kTokenS1 - token;  // tokens above `token`
    if (variant_used && token < kTokenL6) --available;
    return available >= remaining;
  };

  // First detection: any starting token is free (the field of view simply
  // starts there); hypothesizing L6 charges lambda and consumes the variant.
  std::vector<Hypothesis> candidates;
  for (int t = 0; t < kNumTokens; ++t) {
    Hypothesis h;
    h.parent = -1;
    h.token = static_cast<std::int8_t>(t);
    h.score = emission(0, t);
    if (token_is_l6(t)) {
      h.variant = LumbarVariant::Plus1;
      h.score += log_lambda;
    }
    if (!can_complete(t, h.variant != LumbarVariant::None,
                      static_cast<int>(n) - 1)) {
      continue;
    }
    if (std::isfinite(h.score)) candidates.push_back(h);
  }

  // Score-descending total order; exact score ties break toward the
  // lexicographically smaller token sequence.
  auto make_better = [&](std::size_t layer) {
    return [&, layer](const Hypothesis& a, const Hypothesis& b) {
      if (a.score != b.score) return a.score > b.score;
      if (layer == 0) {
        if (a.token != b.token) return a.token < b.token;
        return static_cast<int>(a.variant) < static_cast<int>(b.variant);
      }
      std::vector<int> ta = backtrack(layers, layer - 1, a.parent);
      ta.push_back(a.token);
      std::vector<int> tb = backtrack(layers, layer - 1, b.parent);
      tb.push_back(b.token);
      if (ta != tb) return ta < tb;
      return static_cast<int>(a.variant) < static_cast<int>(b.variant);
    };
  };

  auto prune = [&](std::size_t layer, std::vector<Hypothesis>& cands) {
    const std::size_t k = static_cast<std::size_t>(cfg.beam_width);
    if (cands.size() > k) {
      std::nth_element(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k),
                       cands.end(), make_better(layer));
      cands.resize(k);
    }
    layers[layer] = std::move(cands);
  };

  prune(0, candidates);

  for (std::size_t vol = 1; vol < n; ++vol) {
    std::vector<Hypothesis> next;
    const std::vector<Hypothesis>& prev = layers[vol - 1];
    if (prev.empty()) throw Error("beam_decode: no feasible label sequence");
    const int remaining = static_cast<int>(n - vol) - 1;
    for (std::size_t pi = 0; pi < prev.size(); ++pi) {
      const Hypothesis& h = prev[pi];
      for (int t = h.token + 1; t < kNumTokens; ++t) {
        // Monotonic: strictly increasing tokens, no repetitions. Once even
        // a variant-free hypothesis cannot finish, larger tokens cannot
        // either.
        if (!can_complete(t, false, remaining)) break;
        const double emit = emission(vol, t);
        if (!std::isfinite(emit)) continue;
        const bool variant_free = h.variant == LumbarVariant::None;
        if (token_is_l6(t) && !variant_free) continue;

        const int gap = canonical_gap(h.token, t);
        Hypothesis base;
        base.parent = static_cast<std::int32_t>(pi);
        base.token = static_cast<std::int8_t>(t);

        if (token_is_l6(t)) {
          base.variant = LumbarVariant::Plus1;
          base.skips = static_cast<std::int16_t>(h.skips + gap);
          base.score = h.score + emit + log_lambda + gap * log_gamma;
          next.push_back(base);
          continue;
        }

        // Plain transition: gamma once per skipped level.
        base.variant = h.variant;
        base.skips = static_cast<std::int16_t>(h.skips + gap);
        base.score = h.score + emit + gap * log_gamma;
        if (can_complete(t, base.variant != LumbarVariant::None, remaining)) {
          next.push_back(base);
        }

        // -1 lumbar variant: one skipped lumbar level costs lambda instead
        // of gamma, once per sequence.
        if (variant_free && gap >= 1 && gap_contains_lumbar(h.token, t) &&
            can_complete(t, true, remaining)) {
          Hypothesis alt;
          alt.parent = static_cast<std::int32_t>(pi);
          alt.token = static_cast<std::int8_t>(t);
          alt.variant = LumbarVariant::Minus1;
          alt.skips = static_cast<std::int16_t>(h.skips + gap - 1);
          alt.score = h.score + emit + (gap - 1) * log_gamma + log_lambda;
          next.push_back(alt);
        }
      }
    }
    if (next.empty()) throw Error("beam_decode: no feasible label sequence");
    prune(vol, next);
  }

  const std::vector<Hypothesis>& final_layer = layers[n - 1];
  if (final_layer.empty()) throw Error("beam_decode: no feasible label sequence");
  const auto best_it = std::min_element(
      final_layer.begin(), final_layer.end(),
      [better = make_better(n - 1)](const Hypothesis& a, const Hypothesis& b) {
        return better(a, b);
      });
  const Hypothesis& best = *best_it;

  LabelSequence seq;
  seq.volume_ids = volume_ids;
  seq.tokens = backtrack(layers, n - 1,
                         static_cast<std::int32_t>(best_it - final_layer.begin()));
  seq.log_score = best.score;
  seq.skips_used = best.skips;
  seq.variant = best.variant;
  return seq;
}

LabelResult label_scan(const std::vector<VertebraVolume>& volumes,
                       const std::vector<std::vector<double>>& probs,
                       long image_height, const BeamConfig& cfg,
                       const ProbabilityHeightMap* refined) {
  if (volumes.empty()) throw Error("label_scan: need at least one volume");
  LabelResult result;
  result.phm = refined ? *refined : build_phm(volumes, probs, image_height);

  // Decode top-down, reading each volume's vector back from the map at its
  // centroid height (the map is the interface, mirroring the pipeline).
  std::vector<std::size_t> order(volumes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (volumes[a].centroid3d.y != volumes[b].centroid3d.y) {
      return volumes[a].centroid3d.y < volumes[b].centroid3d.y;
    }
    return volumes[a].id < volumes[b].id;
  });

  std::vector<int> ids;
  std::vector<std::vector<double>> decode_probs;
  ids.reserve(order.size());
  for (std::size_t vi : order) {
    const long row = std::clamp<long>(
        std::lround(volumes[vi].centroid3d.y), 0, image_height - 1);
    std::vector<double> p(kNumLevels);
    double sum = 0.0;
    for (int nl = 0; nl < kNumLevels; ++nl) {
      p[static_cast<std::size_t>(nl)] =
          result.phm.at(static_cast<std::size_t>(row), nl);
      sum += p[static_cast<std::size_t>(nl)];
    }
    if (sum <= 0.0) {
      // Centroid row lost to an overlapping span claim; fall back to the
      // volume's own vector.
      p = probs[vi];
    }
    ids.push_back(volumes[vi].id);
    decode_probs.push_back(std::move(p));
  }

  result.sequence = beam_decode(ids, decode_probs, cfg);
  return result;
}

}  // namespace spinekit::label
