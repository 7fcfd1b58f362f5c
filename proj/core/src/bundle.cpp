#include "spinekit/bundle.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace spinekit {

namespace {

using nlohmann::json;

// Payloads are little-endian on disk regardless of host order.
void swap_to_little_endian(std::vector<float>& values) {
  if constexpr (std::endian::native == std::endian::little) {
    (void)values;
  } else {
    for (float& v : values) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      bits = ((bits & 0x000000FFu) << 24) | ((bits & 0x0000FF00u) << 8) |
             ((bits & 0x00FF0000u) >> 8) | ((bits & 0xFF000000u) >> 24);
      std::memcpy(&v, &bits, 4);
    }
  }
}

}  // namespace

const NdArray& TensorBundle::get(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end()) throw Error("bundle has no array named '" + name + "'");
  return it->second;
}

void TensorBundle::put(const std::string& name, NdArray array,
                       std::string axis_order) {
  manifest[name] = BundleEntry{array.shape(), std::move(axis_order)};
  arrays[name] = std::move(array);
}

void write_bundle(const TensorBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create bundle directory " + dir.string());

  json manifest = json::object();
  json entries = json::array();
  for (const auto& [name, array] : bundle.arrays) {
    if (!array.all_finite()) {
      throw Error("array '" + name + "' contains non-finite values");
    }
    auto mit = bundle.manifest.find(name);
    json e;
    e["name"] = name;
    e["dtype"] = "f32le";
    e["shape"] = array.shape();
    e["axis_order"] = mit != bundle.manifest.end() ? mit->second.axis_order : "";
    e["byte_order"] = "little";
    entries.push_back(e);

    std::vector<float> payload = array.values();
    swap_to_little_endian(payload);
    const auto raw_path = dir / (name + ".raw");
    std::ofstream out(raw_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + raw_path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!out) throw Error("short write to " + raw_path.string());
  }
  manifest["arrays"] = entries;

  const auto manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw Error("cannot open " + manifest_path.string() + " for writing");
  out << manifest.dump(2) << "\n";
  if (!out) throw Error("short write to " + manifest_path.string());
}

TensorBundle read_bundle(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw Error("missing bundle manifest " + manifest_path.string());

  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw Error("unparseable manifest " + manifest_path.string() + ": " + e.what());
  }

  TensorBundle bundle;
  for (const auto& e : manifest.at("arrays")) {
    const std::string name = e.at("name").get<std::string>();
    const std::string dtype = e.at("dtype").get<std::string>();
    if (dtype != "f32le") {
      throw Error("array '" + name + "': unknown element type tag '" + dtype + "'");
    }
    const auto shape = e.at("shape").get<std::vector<std::size_t>>();
    const std::string axis_order = e.value("axis_order", std::string{});

    const auto raw_path = dir / (name + ".raw");
    std::ifstream raw(raw_path, std::ios::binary | std::ios::ate);
    if (!raw) throw Error("missing payload file " + raw_path.string());
    const std::size_t bytes = static_cast<std::size_t>(raw.tellg());
    const std::size_t expected = NdArray::element_count(shape) * sizeof(float);
    if (bytes != expected) {
      throw Error("array '" + name + "': payload is " + std::to_string(bytes) +
                  " bytes but shape " + NdArray::shape_string(shape) +
                  " needs " + std::to_string(expected));
    }
    std::vector<float> values(NdArray::element_count(shape));
    raw.seekg(0);
    raw.read(reinterpret_cast<char*>(values.data()),
             static_cast<std::streamsize>(bytes));
    if (!raw) throw Error("short read from " + raw_path.string());
    swap_to_little_endian(values);  // involution; converts back on BE hosts

    bundle.manifest[name] = BundleEntry{shape, axis_order};
    bundle.arrays[name] = NdArray(shape, std::move(values));
  }
  return bundle;
}

}  // namespace spinekit
