#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevlift/bev_grid.hpp"
#include "bevlift/binning.hpp"
#include "bevlift/container.hpp"
#include "bevlift/error.hpp"
#include "bevlift/feature_map.hpp"
#include "bevlift/fusion.hpp"
#include "bevlift/geometry.hpp"
#include "bevlift/lifting.hpp"
#include "bevlift/rng.hpp"
#include "bevlift/scene.hpp"

namespace bevlift {

using json = nlohmann::json;

inline json load_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

inline void save_json(const std::filesystem::path& path, const json& j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << j.dump(2) << "\n";
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

namespace detail {

template <typename T>
T require(const json& j, const std::string& key, const char* doc) {
  if (!j.contains(key))
    throw InvalidSpec(std::string(doc) + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidSpec(std::string(doc) + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace detail

// ---- calibration ----------------------------------------------------------

inline json rig_to_json(const CameraRig& rig) {
  json j;
  j["intrinsics"] = {{"fx", rig.intrinsics.fx},
                     {"fy", rig.intrinsics.fy},
                     {"cx", rig.intrinsics.cx},
                     {"cy", rig.intrinsics.cy}};
  std::vector<double> rot(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot[r * 3 + c] = rig.extrinsics.rotation(r, c);
  j["extrinsics"] = {
      {"rotation", rot},
      {"translation", {rig.extrinsics.translation.x(), rig.extrinsics.translation.y(),
                       rig.extrinsics.translation.z()}}};
  j["ground_height"] = rig.ground_height;
  j["image_size"] = {{"width", rig.image_size.width}, {"height", rig.image_size.height}};
  return j;
}

inline CameraRig rig_from_json(const json& j) {
  const json ji = detail::require<json>(j, "intrinsics", "calibration");
  Intrinsics k;
  k.fx = detail::require<double>(ji, "fx", "calibration.intrinsics");
  k.fy = detail::require<double>(ji, "fy", "calibration.intrinsics");
  k.cx = detail::require<double>(ji, "cx", "calibration.intrinsics");
  k.cy = detail::require<double>(ji, "cy", "calibration.intrinsics");

  const json je = detail::require<json>(j, "extrinsics", "calibration");
  const auto rot = detail::require<std::vector<double>>(je, "rotation", "calibration.extrinsics");
  const auto tr = detail::require<std::vector<double>>(je, "translation", "calibration.extrinsics");
  if (rot.size() != 9 || tr.size() != 3)
    throw InvalidSpec("calibration.extrinsics: rotation needs 9 values, translation 3");
  Extrinsics ext;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) ext.rotation(r, c) = rot[r * 3 + c];
  ext.translation = Vec3{tr[0], tr[1], tr[2]};

  const double ground_height = detail::require<double>(j, "ground_height", "calibration");
  ImageSize size;
  if (j.contains("image_size")) {
    const json js = j.at("image_size");
    size.width = detail::require<int>(js, "width", "calibration.image_size");
    size.height = detail::require<int>(js, "height", "calibration.image_size");
  }
  return make_rig(k, ext, ground_height, size);
}

// Loads a rig and reports whether the supplied ground height disagrees with
// the extrinsics-implied camera height by more than 1 cm.
inline CameraRig load_calibration(const std::filesystem::path& path,
                                  bool* height_mismatch = nullptr) {
  const CameraRig rig = rig_from_json(load_json(path));
  if (height_mismatch)
    *height_mismatch =
        std::abs(rig.extrinsic_implied_height() - rig.ground_height) > 0.01;
  return rig;
}

// Stable identifier for provenance metadata.
inline std::uint64_t rig_hash(const CameraRig& rig) {
  return hash64(rig_to_json(rig).dump());
}

// ---- bin / grid specs ------------------------------------------------------

inline json bin_spec_to_json(const BinSpec& s) {
  return {{"strategy", to_string(s.strategy)}, {"v_min", s.v_min},
          {"v_max", s.v_max},                  {"n_bins", s.n_bins},
          {"alpha", s.alpha},                  {"sid_offset", s.sid_offset}};
}

inline BinSpec bin_spec_from_json(const json& j) {
  return BinSpec::make(
      bin_strategy_from_string(detail::require<std::string>(j, "strategy", "bins")),
      detail::require<double>(j, "v_min", "bins"),
      detail::require<double>(j, "v_max", "bins"),
      detail::require<int>(j, "n_bins", "bins"),
      j.value("alpha", 1.0), j.value("sid_offset", 0.0));
}

inline json grid_spec_to_json(const GridSpec& s) {
  return {{"x_min", s.x_min},           {"x_max", s.x_max},
          {"y_min", s.y_min},           {"y_max", s.y_max},
          {"resolution", s.resolution}, {"reduction", to_string(s.reduction)}};
}

inline GridSpec grid_spec_from_json(const json& j) {
  GridSpec s;
  s.x_min = detail::require<double>(j, "x_min", "grid");
  s.x_max = detail::require<double>(j, "x_max", "grid");
  s.y_min = detail::require<double>(j, "y_min", "grid");
  s.y_max = detail::require<double>(j, "y_max", "grid");
  s.resolution = detail::require<double>(j, "resolution", "grid");
  s.reduction = reduction_from_string(j.value("reduction", std::string("sum")));
  s.validate();
  return s;
}

// ---- tensors ---------------------------------------------------------------

inline void save_feature_map(const std::filesystem::path& path,
                             const FeatureMap& m, json metadata = json::object()) {
  metadata["kind"] = "feature_map";
  write_container(path, TensorContainer::from_f32(
                            {static_cast<std::uint64_t>(m.channels),
                             static_cast<std::uint64_t>(m.height),
                             static_cast<std::uint64_t>(m.width)},
                            m.data, metadata.dump()));
}

inline FeatureMap load_feature_map(const std::filesystem::path& path) {
  const TensorContainer t = read_container(path);
  if (t.dims.size() != 3 || t.dtype != DType::F32)
    throw ShapeMismatch("'" + path.string() + "': expected rank-3 f32 feature map");
  FeatureMap m;
  m.channels = static_cast<int>(t.dims[0]);
  m.height = static_cast<int>(t.dims[1]);
  m.width = static_cast<int>(t.dims[2]);
  m.data = t.f32;
  return m;
}

// Distribution rows are renormalized on load when they drift from 1;
// `warned` reports a drift beyond 1e-4.
inline DistributionMap load_distribution(const std::filesystem::path& path,
                                         bool* warned = nullptr) {
  const TensorContainer t = read_container(path);
  if (t.dims.size() != 3 || t.dtype != DType::F32)
    throw ShapeMismatch("'" + path.string() + "': expected rank-3 f32 distribution");
  DistributionMap m;
  m.bins = static_cast<int>(t.dims[0]);
  m.height = static_cast<int>(t.dims[1]);
  m.width = static_cast<int>(t.dims[2]);
  m.data = t.f32;
  const NormalizeStats stats = normalize_distribution(m);
  if (warned) *warned = stats.warn();
  return m;
}

inline void save_distribution(const std::filesystem::path& path,
                              const DistributionMap& m,
                              json metadata = json::object()) {
  metadata["kind"] = "distribution_map";
  write_container(path, TensorContainer::from_f32(
                            {static_cast<std::uint64_t>(m.bins),
                             static_cast<std::uint64_t>(m.height),
                             static_cast<std::uint64_t>(m.width)},
                            m.data, metadata.dump()));
}

inline void save_bev_grid(const std::filesystem::path& path, const BevGrid& g,
                          json metadata = json::object()) {
  metadata["kind"] = "bev_grid";
  metadata["grid"] = grid_spec_to_json(g.spec);
  metadata["dropped_points"] = g.dropped_points;
  metadata["occupancy_total"] = [&] {
    std::uint64_t n = 0;
    for (auto o : g.occupancy) n += o;
    return n;
  }();
  write_container(path, TensorContainer::from_f64(
                            {static_cast<std::uint64_t>(g.size_x),
                             static_cast<std::uint64_t>(g.size_y),
                             static_cast<std::uint64_t>(g.channels)},
                            g.data, metadata.dump()));
}

inline BevGrid load_bev_grid(const std::filesystem::path& path) {
  const TensorContainer t = read_container(path);
  if (t.dims.size() != 3 || t.dtype != DType::F64)
    throw ShapeMismatch("'" + path.string() + "': expected rank-3 f64 BEV grid");
  json meta;
  try {
    meta = json::parse(t.metadata);
  } catch (const json::parse_error&) {
    throw ParseError("'" + path.string() + "': bad grid metadata");
  }
  BevGrid g;
  g.spec = grid_spec_from_json(meta.at("grid"));
  g.size_x = static_cast<int>(t.dims[0]);
  g.size_y = static_cast<int>(t.dims[1]);
  g.channels = static_cast<int>(t.dims[2]);
  g.data = t.f64;
  g.dropped_points = meta.value("dropped_points", 0ULL);
  g.occupancy.assign(static_cast<std::size_t>(g.size_x) * g.size_y, 0);
  return g;
}

// Pixel maps serialize as three rank-2 containers sharing one metadata
// record: depth (f64), height (f64), validity (f32 0/1).
inline void save_pixel_maps(const std::filesystem::path& dir, const PixelMaps& maps,
                            json metadata = json::object()) {
  metadata["kind"] = "pixel_maps";
  metadata["stride"] = maps.stride;
  metadata["dropped_behind"] = maps.dropped_behind;
  metadata["dropped_outside"] = maps.dropped_outside;
  const std::string meta = metadata.dump();
  const std::vector<std::uint64_t> dims{static_cast<std::uint64_t>(maps.height),
                                        static_cast<std::uint64_t>(maps.width)};
  write_container(dir / "depth_map.bvt", TensorContainer::from_f64(dims, maps.depth, meta));
  write_container(dir / "height_map.bvt",
                  TensorContainer::from_f64(dims, maps.heightv, meta));
  std::vector<float> valid(maps.valid.begin(), maps.valid.end());
  write_container(dir / "valid_mask.bvt",
                  TensorContainer::from_f32(dims, std::move(valid), meta));
}

inline PixelMaps load_pixel_maps(const std::filesystem::path& dir) {
  const TensorContainer depth = read_container(dir / "depth_map.bvt");
  const TensorContainer height = read_container(dir / "height_map.bvt");
  const TensorContainer valid = read_container(dir / "valid_mask.bvt");
  if (depth.dims.size() != 2 || depth.dims != height.dims || depth.dims != valid.dims)
    throw ShapeMismatch("pixel maps in '" + dir.string() + "' disagree in shape");
  PixelMaps maps;
  maps.height = static_cast<int>(depth.dims[0]);
  maps.width = static_cast<int>(depth.dims[1]);
  maps.depth = depth.f64;
  maps.heightv = height.f64;
  maps.valid.assign(valid.f32.size(), 0);
  for (std::size_t i = 0; i < valid.f32.size(); ++i)
    maps.valid[i] = valid.f32[i] != 0.0f ? 1 : 0;
  try {
    const json meta = json::parse(depth.metadata);
    maps.stride = meta.value("stride", 1);
    maps.dropped_behind = meta.value("dropped_behind", 0ULL);
    maps.dropped_outside = meta.value("dropped_outside", 0ULL);
  } catch (const json::parse_error&) {
    throw ParseError("pixel maps in '" + dir.string() + "': bad metadata");
  }
  return maps;
}

// Wedge volumes serialize as two aligned containers sharing one metadata
// record: <prefix>.positions.bvt (P x 3 f64) and <prefix>.features.bvt
// (P x C_f f32).
inline void save_wedge(const std::filesystem::path& prefix, const WedgeVolume& v,
                       json metadata = json::object()) {
  metadata["kind"] = "wedge_volume";
  metadata["source"] = v.source == LiftSource::Height ? "height" : "depth";
  metadata["dropped_rays"] = v.dropped_rays;
  metadata["dropped_bins"] = v.dropped_bins;
  metadata["pruned_points"] = v.pruned_points;
  std::vector<double> pos;
  pos.reserve(v.size() * 3);
  for (const auto& p : v.positions) pos.insert(pos.end(), p.begin(), p.end());
  const std::string meta = metadata.dump();
  write_container(prefix.string() + ".positions.bvt",
                  TensorContainer::from_f64({v.size(), 3}, std::move(pos), meta));
  write_container(prefix.string() + ".features.bvt",
                  TensorContainer::from_f32(
                      {v.size(), static_cast<std::uint64_t>(v.feature_dim)},
                      v.features, meta));
}

// Pixel/bin provenance is not stored; loaded volumes carry positions and
// features only, which is all pooling consumes.
inline WedgeVolume load_wedge(const std::filesystem::path& prefix) {
  const TensorContainer pos = read_container(prefix.string() + ".positions.bvt");
  const TensorContainer feat = read_container(prefix.string() + ".features.bvt");
  if (pos.dims.size() != 2 || pos.dims[1] != 3 || pos.dtype != DType::F64)
    throw ShapeMismatch("wedge positions must be P x 3 f64");
  if (feat.dims.size() != 2 || feat.dtype != DType::F32 || feat.dims[0] != pos.dims[0])
    throw ShapeMismatch("wedge features must be P x C_f f32, aligned with positions");
  WedgeVolume v;
  v.feature_dim = static_cast<int>(feat.dims[1]);
  v.positions.resize(pos.dims[0]);
  for (std::size_t i = 0; i < v.positions.size(); ++i)
    v.positions[i] = {pos.f64[i * 3], pos.f64[i * 3 + 1], pos.f64[i * 3 + 2]};
  v.pixels.assign(v.positions.size(), Pixel{});
  v.bins.assign(v.positions.size(), 0);
  v.features = feat.f32;
  try {
    const json meta = json::parse(pos.metadata);
    v.source = meta.value("source", std::string("height")) == "depth"
                   ? LiftSource::Depth
                   : LiftSource::Height;
    v.dropped_rays = meta.value("dropped_rays", 0ULL);
    v.dropped_bins = meta.value("dropped_bins", 0ULL);
    v.pruned_points = meta.value("pruned_points", 0ULL);
  } catch (const json::parse_error&) {
    throw ParseError("wedge volume '" + prefix.string() + "': bad metadata");
  }
  return v;
}

// ---- deformable-attention weights -------------------------------------------

// One container file per parameter next to a manifest that records shapes
// and the (M, K, C) configuration.
inline void save_weights(const std::filesystem::path& manifest_path,
                         const DeformAttnWeights& w) {
  w.validate();
  const auto dir = manifest_path.parent_path();
  const std::string stem = manifest_path.stem().string();
  json manifest;
  manifest["heads"] = w.heads;
  manifest["keys"] = w.keys;
  manifest["channels"] = w.channels;
  const auto hd = static_cast<std::uint64_t>(w.head_dim());
  const auto m = static_cast<std::uint64_t>(w.heads);
  const auto k = static_cast<std::uint64_t>(w.keys);
  const auto c = static_cast<std::uint64_t>(w.channels);
  const std::vector<std::pair<std::string, std::pair<const std::vector<double>*,
                                                     std::vector<std::uint64_t>>>>
      params = {
          {"value_proj", {&w.value_proj, {m, hd, c}}},
          {"output_proj", {&w.output_proj, {m, c, hd}}},
          {"offset_net_w", {&w.offset_net_w, {m * k * 2, c}}},
          {"offset_net_b", {&w.offset_net_b, {m * k * 2}}},
          {"weight_net_w", {&w.weight_net_w, {m * k, c}}},
          {"weight_net_b", {&w.weight_net_b, {m * k}}},
          {"query_proj", {&w.query_proj, {c, 2 * c}}},
      };
  json tensors;
  for (const auto& [name, payload] : params) {
    const std::string file = stem + "." + name + ".bvt";
    write_container(dir / file,
                    TensorContainer::from_f64(payload.second, *payload.first,
                                              json{{"param", name}}.dump()));
    tensors[name] = {{"file", file}, {"dims", payload.second}};
  }
  manifest["tensors"] = tensors;
  save_json(manifest_path, manifest);
}

inline DeformAttnWeights load_weights(const std::filesystem::path& manifest_path) {
  const json manifest = load_json(manifest_path);
  const auto dir = manifest_path.parent_path();
  DeformAttnWeights w;
  w.heads = detail::require<int>(manifest, "heads", "weights manifest");
  w.keys = detail::require<int>(manifest, "keys", "weights manifest");
  w.channels = detail::require<int>(manifest, "channels", "weights manifest");
  const json tensors = detail::require<json>(manifest, "tensors", "weights manifest");
  const auto read = [&](const char* name) {
    if (!tensors.contains(name))
      throw InvalidSpec(std::string("weights manifest: missing tensor '") + name + "'");
    const std::string file =
        detail::require<std::string>(tensors.at(name), "file", "weights manifest tensor");
    const TensorContainer t = read_container(dir / file);
    if (t.dtype == DType::F64) return t.f64;
    return std::vector<double>(t.f32.begin(), t.f32.end());
  };
  w.value_proj = read("value_proj");
  w.output_proj = read("output_proj");
  w.offset_net_w = read("offset_net_w");
  w.offset_net_b = read("offset_net_b");
  w.weight_net_w = read("weight_net_w");
  w.weight_net_b = read("weight_net_b");
  w.query_proj = read("query_proj");
  w.validate();
  return w;
}

}  // namespace bevlift
