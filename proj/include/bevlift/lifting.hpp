#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bevlift/binning.hpp"
#include "bevlift/error.hpp"
#include "bevlift/feature_map.hpp"
#include "bevlift/geometry.hpp"
#include "bevlift/parallel.hpp"

namespace bevlift {

inline constexpr double kHorizonRayEps = 1e-6;   // min virtual-frame y of a usable ray
inline constexpr double kAboveCameraEps = 1e-3;  // meters below the camera a height must stay

enum class LiftSource { Height, Depth };

struct LiftConfig {
  CameraRig rig;
  BinSpec bins;
  int feature_stride = 16;
  // Pseudo-points whose bin probability falls below this floor are pruned.
  // 0 keeps everything, including zero-weight points, so pooled results stay
  // bitwise comparable against the oracles.
  float prob_floor = 0.0f;
};

// Lifted pseudo-point set (the wedge volume for one camera), stored as
// aligned arrays in canonical emission order: feature cells row-major,
// bins ascending within a cell.
struct WedgeVolume {
  LiftSource source = LiftSource::Height;
  int feature_dim = 0;
  std::vector<std::array<double, 3>> positions;  // ego frame, meters
  std::vector<Pixel> pixels;
  std::vector<std::int32_t> bins;
  std::vector<float> features;     // point-major, feature_dim per point
  std::uint64_t dropped_rays = 0;  // cells whose ray failed the horizon guard
  std::uint64_t dropped_bins = 0;  // (cell, bin) pairs skipped by value guards
  std::uint64_t pruned_points = 0;  // (cell, bin) pairs below the probability floor

  std::size_t size() const { return positions.size(); }
};

// Virtual-frame coordinates of the pixel's reference-plane point
// (K^-1 [u, v, 1]^T mapped through cam_to_virtual).
inline Vec3 reference_point_virtual(const CameraRig& rig, Pixel p) {
  const Intrinsics& k = rig.intrinsics;
  const Vec3 ref_cam{(p.u - k.cx) / k.fx, (p.v - k.cy) / k.fy, 1.0};
  return rig.cam_to_virtual * ref_cam;
}

namespace detail {

// Similar-triangle scaling of the reference point; no above-camera guard so
// the degenerate collapse at h == H stays observable.
inline Vec3 lift_pixel_height_raw(const CameraRig& rig, Pixel p, double h) {
  const Vec3 ref_virt = reference_point_virtual(rig, p);
  if (ref_virt.y() <= kHorizonRayEps)
    throw HorizonRay("lift: ray at or above the horizon");
  const double scale = (rig.ground_height - h) / ref_virt.y();
  return rig.virtual_to_ego.apply(scale * ref_virt);
}

}  // namespace detail

inline Vec3 lift_pixel_height(const CameraRig& rig, Pixel p, double h) {
  if (h >= rig.ground_height - kAboveCameraEps)
    throw AboveCamera("lift: height reaches the camera level");
  return detail::lift_pixel_height_raw(rig, p, h);
}

inline Vec3 lift_pixel_height(const LiftConfig& cfg, Pixel p, double h) {
  return lift_pixel_height(cfg.rig, p, h);
}

inline Vec3 lift_pixel_depth(const CameraRig& rig, Pixel p, double d) {
  return rig.cam_to_ego(back_project(rig, p, d));
}

inline Vec3 lift_pixel_depth(const LiftConfig& cfg, Pixel p, double d) {
  return lift_pixel_depth(cfg.rig, p, d);
}

// Image coordinates of a downsampled feature cell's center.
inline Pixel cell_center_pixel(int x, int y, int stride) {
  return {(x + 0.5) * stride - 0.5, (y + 0.5) * stride - 0.5};
}

// Pushes per-cell features into the wedge volume, one pseudo-point per
// (cell, bin), each weighted by the cell's bin probability. Cells whose ray
// fails the horizon guard emit nothing and are counted; bins whose value
// violates the branch precondition (height at or above the camera,
// non-positive depth) are skipped and counted separately.
inline WedgeVolume lift_map(const LiftConfig& cfg, const FeatureMap& features,
                            const DistributionMap& dist, LiftSource source,
                            int threads = 1) {
  if (features.height != dist.height || features.width != dist.width)
    throw ShapeMismatch("lift_map: feature and distribution grids disagree");
  if (dist.bins != cfg.bins.n_bins)
    throw ShapeMismatch("lift_map: distribution bins != bin spec");

  const int w = features.width;
  const int h = features.height;
  const int cf = features.channels;

  std::vector<int> valid_bins;
  valid_bins.reserve(cfg.bins.n_bins);
  for (int b = 0; b < cfg.bins.n_bins; ++b) {
    const double value = bin_center(cfg.bins, b);
    const bool ok = source == LiftSource::Height
                        ? value < cfg.rig.ground_height - kAboveCameraEps
                        : value > 0.0;
    if (ok) valid_bins.push_back(b);
  }

  // Pass 1: per-cell ray validity (depth rays are always usable) and emit
  // counts under the probability floor.
  const std::size_t n_cells = static_cast<std::size_t>(w) * h;
  std::vector<std::uint8_t> cell_ok(n_cells, 1);
  std::vector<std::uint32_t> cell_count(n_cells, 0);
  detail::parallel_chunks(n_cells, threads, [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t i = begin; i < end; ++i) {
      const int y = static_cast<int>(i) / w;
      const int x = static_cast<int>(i) % w;
      if (source == LiftSource::Height) {
        const Vec3 ref =
            reference_point_virtual(cfg.rig, cell_center_pixel(x, y, cfg.feature_stride));
        cell_ok[i] = ref.y() > kHorizonRayEps ? 1 : 0;
        if (!cell_ok[i]) continue;
      }
      if (cfg.prob_floor <= 0.0f) {
        cell_count[i] = static_cast<std::uint32_t>(valid_bins.size());
        continue;
      }
      std::uint32_t n = 0;
      for (int b : valid_bins) n += dist.at(b, y, x) >= cfg.prob_floor ? 1 : 0;
      cell_count[i] = n;
    }
  });

  std::uint64_t valid_cells = 0;
  std::size_t total = 0;
  std::vector<std::size_t> cell_slot(n_cells + 1, 0);
  for (std::size_t i = 0; i < n_cells; ++i) {
    cell_slot[i] = total;
    total += cell_count[i];
    valid_cells += cell_ok[i];
  }
  cell_slot[n_cells] = total;

  WedgeVolume vol;
  vol.source = source;
  vol.feature_dim = cf;
  vol.dropped_rays = n_cells - valid_cells;
  vol.dropped_bins =
      valid_cells * (static_cast<std::uint64_t>(cfg.bins.n_bins) - valid_bins.size());
  vol.pruned_points = valid_cells * valid_bins.size() - total;
  vol.positions.resize(total);
  vol.pixels.resize(total);
  vol.bins.resize(total);
  vol.features.resize(total * cf);

  // Pass 2: emit into precomputed slots; output is independent of threads.
  detail::parallel_chunks(n_cells, threads, [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t i = begin; i < end; ++i) {
      if (!cell_ok[i] || cell_count[i] == 0) continue;
      const int y = static_cast<int>(i) / w;
      const int x = static_cast<int>(i) % w;
      const Pixel px = cell_center_pixel(x, y, cfg.feature_stride);
      std::size_t slot = cell_slot[i];
      for (int b : valid_bins) {
        const float prob = dist.at(b, y, x);
        if (cfg.prob_floor > 0.0f && prob < cfg.prob_floor) continue;
        const double value = bin_center(cfg.bins, b);
        const Vec3 pos = source == LiftSource::Height
                             ? lift_pixel_height(cfg.rig, px, value)
                             : lift_pixel_depth(cfg.rig, px, value);
        vol.positions[slot] = {pos.x(), pos.y(), pos.z()};
        vol.pixels[slot] = px;
        vol.bins[slot] = b;
        float* out = &vol.features[slot * cf];
        for (int c = 0; c < cf; ++c) out[c] = features.at(c, y, x) * prob;
        ++slot;
      }
    }
  });
  return vol;
}

}  // namespace bevlift
