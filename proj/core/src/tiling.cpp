#include "spinekit/tiling.hpp"

#include <algorithm>
#include <cmath>

namespace spinekit {

NdArray resize_bilinear(const NdArray& image, long out_h, long out_w) {
  if (image.rank() != 2) throw Error("resize_bilinear expects a 2-D array");
  if (out_h < 1 || out_w < 1) throw Error("resize target must be positive");
  const long in_h = static_cast<long>(image.dim(0));
  const long in_w = static_cast<long>(image.dim(1));
  NdArray out({static_cast<std::size_t>(out_h), static_cast<std::size_t>(out_w)});
  const float* src = image.data();
  float* dst = out.data();

  // Align pixel centers: src = (dst + 0.5) * in/out - 0.5.
  const double sy = static_cast<double>(in_h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(in_w) / static_cast<double>(out_w);
  for (long r = 0; r < out_h; ++r) {
    double fy = (r + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(in_h - 1));
    const long y0 = static_cast<long>(fy);
    const long y1 = std::min(y0 + 1, in_h - 1);
    const double wy = fy - y0;
    for (long c = 0; c < out_w; ++c) {
      double fx = (c + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(in_w - 1));
      const long x0 = static_cast<long>(fx);
      const long x1 = std::min(x0 + 1, in_w - 1);
      const double wx = fx - x0;
      const double top = src[y0 * in_w + x0] * (1.0 - wx) + src[y0 * in_w + x1] * wx;
      const double bot = src[y1 * in_w + x0] * (1.0 - wx) + src[y1 * in_w + x1] * wx;
      dst[r * out_w + c] = static_cast<float>(top * (1.0 - wy) + bot * wy);
    }
  }
  return out;
}

std::vector<Tile> tile_scan(const NdArray& image, long target) {
  if (image.rank() != 2) throw Error("tile_scan expects a 2-D array");
  if (target < 1) throw Error("tile target side must be positive");
  const long h = static_cast<long>(image.dim(0));
  const long w = static_cast<long>(image.dim(1));
  if (h < 1 || w < 1) throw Error("tile_scan needs a non-empty image");

  const long side = std::min(h, w);
  const long stride = std::max<long>(1, std::lround(0.6 * side));
  const bool along_rows = h >= w;  // slide along the long axis
  const long span = along_rows ? h : w;

  std::vector<long> offsets{0};
  while (offsets.back() + side < span) {
    offsets.push_back(std::min(offsets.back() + stride, span - side));
  }

  std::vector<Tile> tiles;
  tiles.reserve(offsets.size());
  const float* src = image.data();
  for (long off : offsets) {
    NdArray crop({static_cast<std::size_t>(side), static_cast<std::size_t>(side)});
    float* dst = crop.data();
    const long r0 = along_rows ? off : 0;
    const long c0 = along_rows ? 0 : off;
    for (long r = 0; r < side; ++r) {
      const float* row = src + (r0 + r) * w + c0;
      std::copy(row, row + side, dst + r * side);
    }
    Tile t;
    t.data = side == target ? std::move(crop) : resize_bilinear(crop, target, target);
    t.row0 = r0;
    t.col0 = c0;
    t.side = side;
    tiles.push_back(std::move(t));
  }
  return tiles;
}

NdArray stitch_tiles(const std::vector<Tile>& tiles, long height, long width) {
  if (height < 1 || width < 1) throw Error("stitch target shape must be positive");
  NdArray sum({static_cast<std::size_t>(height), static_cast<std::size_t>(width)});
  std::vector<double> acc(static_cast<std::size_t>(height * width), 0.0);
  std::vector<double> cnt(static_cast<std::size_t>(height * width), 0.0);

  for (const Tile& t : tiles) {
    if (t.row0 < 0 || t.col0 < 0 || t.row0 + t.side > height ||
        t.col0 + t.side > width) {
      throw Error("tile offset out of bounds");
    }
    const long target = static_cast<long>(t.data.dim(0));
    NdArray restored = t.side == target
                           ? t.data
                           : resize_bilinear(t.data, t.side, t.side);
    const float* src = restored.data();
    for (long r = 0; r < t.side; ++r) {
      for (long c = 0; c < t.side; ++c) {
        const std::size_t at = static_cast<std::size_t>((t.row0 + r) * width + t.col0 + c);
        acc[at] += src[r * t.side + c];
        cnt[at] += 1.0;
      }
    }
  }

  float* out = sum.data();
  for (std::size_t i = 0; i < acc.size(); ++i) {
    out[i] = cnt[i] > 0 ? static_cast<float>(acc[i] / cnt[i]) : 0.0f;
  }
  return sum;
}

}  // namespace spinekit
