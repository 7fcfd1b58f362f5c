#pragma once

#include <vector>

#include "spinekit/ndarray.hpp"

namespace spinekit {

/// One square tile cut from a 2-D image and resized to target x target.
/// `row0/col0/side` give the footprint in original image coordinates, so
/// tile coordinate t maps back to image coordinate offset + t * side/target.
struct Tile {
  NdArray data;  // target x target
  long row0 = 0;
  long col0 = 0;
  long side = 0;
};

/// Splits an image into squares of side min(H, W), slid along the long axis
/// with 40% overlap (stride rounded to the nearest pixel, last tile clamped
/// to the image edge), each resized to target x target with bilinear
/// interpolation. A square image yields a single tile.
std::vector<Tile> tile_scan(const NdArray& image, long target = 224);

/// Inverse of tile_scan: tiles are resized back onto their footprints and
/// overlapping regions averaged. Output shape equals `height` x `width`.
NdArray stitch_tiles(const std::vector<Tile>& tiles, long height, long width);

/// Bilinear resize of a 2-D array. Shared by tiling and volume extraction.
NdArray resize_bilinear(const NdArray& image, long out_h, long out_w);

}  // namespace spinekit
