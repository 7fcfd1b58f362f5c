#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "spinekit/ndarray.hpp"

namespace spinekit {

/// Tensor-bundle interchange format: a directory holding `manifest.json`
/// plus one `<name>.raw` file per array (row-major float32, little-endian).
///
/// Manifest entry per array: name, dtype tag ("f32le"), shape, axis-order
/// string (e.g. "S,C,H,W") and byte-order tag ("little").
struct BundleEntry {
  std::vector<std::size_t> shape;
  std::string axis_order;
};

struct TensorBundle {
  std::map<std::string, NdArray> arrays;
  std::map<std::string, BundleEntry> manifest;

  bool has(const std::string& name) const { return arrays.count(name) > 0; }
  const NdArray& get(const std::string& name) const;
  void put(const std::string& name, NdArray array, std::string axis_order);
};

/// Canonical axis-order strings for the arrays this pipeline exchanges.
namespace bundle_axes {
inline constexpr const char* kHeatmaps = "S,C,H,W";
inline constexpr const char* kFields = "S,C,V,H,W";
inline constexpr const char* kProbs = "V,N";
}  // namespace bundle_axes

/// Round-trips bit-exactly with read_bundle for all finite inputs.
void write_bundle(const TensorBundle& bundle, const std::filesystem::path& dir);

TensorBundle read_bundle(const std::filesystem::path& dir);

}  // namespace spinekit
