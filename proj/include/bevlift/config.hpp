#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "bevlift/error.hpp"
#include "bevlift/scene.hpp"
#include "bevlift/serialize.hpp"

namespace bevlift {

struct SceneConfig {
  double sample_density = 100.0;
  double ground_radius = 120.0;
  std::optional<SceneGenSpec> generate;
  std::vector<Box3D> boxes;  // explicit boxes, appended after generation

  Scene build(std::uint64_t seed) const {
    Scene scene = generate ? generate_scene(*generate, seed, sample_density, ground_radius)
                           : Scene{{}, sample_density, ground_radius};
    scene.boxes.insert(scene.boxes.end(), boxes.begin(), boxes.end());
    return scene;
  }
};

struct MapConfig {
  int width = 24;
  int height = 12;
  int stride = 16;
  int feature_channels = 8;
};

// Everything one experiment needs, loaded from a single structured file.
// Flag overrides are applied by the CLI on top.
struct ExperimentConfig {
  std::filesystem::path calibration_path;
  CameraRig rig;
  bool rig_height_mismatch = false;
  BinSpec height_bins = BinSpec::make(BinStrategy::DID, -1.0, 1.0, 90, 2.0);
  BinSpec depth_bins = BinSpec::make(BinStrategy::UD, 1.0, 104.0, 206);
  BinSpec histogram_height_bins = BinSpec::make(BinStrategy::UD, -1.0, 2.0, 60);
  BinSpec histogram_depth_bins = BinSpec::make(BinStrategy::UD, 0.0, 208.0, 104);
  GridSpec grid;
  double disturbance_sigma_deg = 1.67;
  SceneConfig scene;
  MapConfig maps;
  ResidualSource residual = ResidualSource::HeightBev;
  std::uint64_t seed = 0;
};

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  const json j = load_json(path);
  ExperimentConfig cfg;

  const auto calib = detail::require<std::string>(j, "calibration", "config");
  cfg.calibration_path = path.parent_path() / calib;
  if (!std::filesystem::exists(cfg.calibration_path))
    throw InvalidSpec("config: calibration file '" + cfg.calibration_path.string() +
                      "' does not exist");
  cfg.rig = load_calibration(cfg.calibration_path, &cfg.rig_height_mismatch);

  if (j.contains("height_bins")) cfg.height_bins = bin_spec_from_json(j.at("height_bins"));
  if (j.contains("depth_bins")) cfg.depth_bins = bin_spec_from_json(j.at("depth_bins"));
  if (j.contains("histogram_height_bins"))
    cfg.histogram_height_bins = bin_spec_from_json(j.at("histogram_height_bins"));
  if (j.contains("histogram_depth_bins"))
    cfg.histogram_depth_bins = bin_spec_from_json(j.at("histogram_depth_bins"));
  if (j.contains("grid")) cfg.grid = grid_spec_from_json(j.at("grid"));

  if (j.contains("disturbance"))
    cfg.disturbance_sigma_deg = j.at("disturbance").value("sigma_deg", 1.67);
  if (!(cfg.disturbance_sigma_deg >= 0.0))
    throw InvalidSpec("config: disturbance sigma must be >= 0");

  if (j.contains("scene")) {
    const json js = j.at("scene");
    cfg.scene.sample_density = js.value("sample_density", 100.0);
    cfg.scene.ground_radius = js.value("ground_radius", 120.0);
    if (!(cfg.scene.sample_density > 0.0))
      throw InvalidSpec("config: scene sample density must be positive");
    if (js.contains("generate")) {
      const json jg = js.at("generate");
      SceneGenSpec gen;
      gen.count = jg.value("count", 20);
      gen.range_min = jg.value("range_min", 10.0);
      gen.range_max = jg.value("range_max", 100.0);
      gen.lateral = jg.value("lateral", 6.0);
      cfg.scene.generate = gen;
    }
    if (js.contains("boxes")) {
      for (const json& jb : js.at("boxes")) {
        Box3D b;
        b.x = detail::require<double>(jb, "x", "config.scene.boxes");
        b.y = detail::require<double>(jb, "y", "config.scene.boxes");
        b.z = detail::require<double>(jb, "z", "config.scene.boxes");
        b.l = detail::require<double>(jb, "l", "config.scene.boxes");
        b.w = detail::require<double>(jb, "w", "config.scene.boxes");
        b.h = detail::require<double>(jb, "h", "config.scene.boxes");
        b.theta = jb.value("theta", 0.0);
        if (!(b.l > 0) || !(b.w > 0) || !(b.h > 0))
          throw InvalidSpec("config: box dimensions must be positive");
        cfg.scene.boxes.push_back(b);
      }
    }
  }

  if (j.contains("maps")) {
    const json jm = j.at("maps");
    cfg.maps.width = jm.value("width", 24);
    cfg.maps.height = jm.value("height", 12);
    cfg.maps.stride = jm.value("stride", 16);
    cfg.maps.feature_channels = jm.value("feature_channels", 8);
    if (cfg.maps.width <= 0 || cfg.maps.height <= 0 || cfg.maps.stride < 1 ||
        cfg.maps.feature_channels <= 0)
      throw InvalidSpec("config: maps geometry must be positive");
  }

  if (j.contains("residual")) {
    const auto r = j.at("residual").get<std::string>();
    if (r == "height")
      cfg.residual = ResidualSource::HeightBev;
    else if (r == "depth")
      cfg.residual = ResidualSource::DepthBev;
    else
      throw InvalidSpec("config: residual must be 'height' or 'depth'");
  }

  cfg.seed = j.value("seed", 0ULL);
  return cfg;
}

}  // namespace bevlift
