#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "bevlift/error.hpp"
#include "bevlift/geometry.hpp"
#include "bevlift/rng.hpp"
#include "bevlift/scene.hpp"

namespace bevlift {

// Rotational calibration drift: roll about the camera z axis, pitch about
// the camera x axis.
struct Disturbance {
  double roll_deg = 0.0;
  double pitch_deg = 0.0;
  std::uint64_t seed = 0;
  double sigma_deg = 1.67;
};

inline Disturbance sample_disturbance(double sigma_deg, std::uint64_t seed) {
  if (!(sigma_deg >= 0.0)) throw InvalidSpec("disturbance: sigma must be >= 0");
  SplitMix64 g(derive_seed(seed, "extrinsic-disturbance"));
  const auto [a, b] = gaussian_pair(g);
  Disturbance d;
  d.roll_deg = sigma_deg * a;
  d.pitch_deg = sigma_deg * b;
  d.seed = seed;
  d.sigma_deg = sigma_deg;
  return d;
}

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

// R_pitch * R_roll in the camera frame. The order is fixed; the two do not
// commute.
inline Mat3 disturbance_rotation(const Disturbance& d) {
  return rotation_about_x(deg_to_rad(d.pitch_deg)) *
         rotation_about_z(deg_to_rad(d.roll_deg));
}

// Left-multiplies the extrinsic rotation by a camera-frame rotation while
// keeping the camera center fixed (the mounting point does not move), then
// rebuilds the derived virtual frame.
inline CameraRig apply_rotation(const CameraRig& rig, const Mat3& r_cam) {
  Extrinsics ext;
  ext.rotation = r_cam * rig.extrinsics.rotation;
  ext.translation = r_cam * rig.extrinsics.translation;
  return make_rig(rig.intrinsics, ext, rig.ground_height, rig.image_size);
}

inline CameraRig apply_disturbance(const CameraRig& rig, const Disturbance& d) {
  if (d.roll_deg == 0.0 && d.pitch_deg == 0.0) return rig;
  return apply_rotation(rig, disturbance_rotation(d));
}

// Pixel map from the clean image to the disturbed image, exact for the
// pure-rotation disturbance: K * R_d * K^-1.
inline Mat3 warp_homography(const CameraRig& rig, const Disturbance& d) {
  const Mat3 k = rig.intrinsics.matrix();
  return k * disturbance_rotation(d) * rig.intrinsics.inverse();
}

inline Pixel apply_homography(const Mat3& h, Pixel p) {
  const Vec3 q = h * Vec3{p.u, p.v, 1.0};
  return {q.x() / q.z(), q.y() / q.z()};
}

enum class Condition { Clean, Noisy };

struct ScatterRecord {
  int object_id = 0;
  Condition condition = Condition::Clean;
  double v = 0.0;       // image row of the object center
  double depth = 0.0;   // camera-frame z
  double height = 0.0;  // ego z of the object center (world quantity)
};

struct ScatterSet {
  std::vector<ScatterRecord> records;
};

struct OverlapReport {
  int visible_objects = 0;
  double mean_shift_v = 0.0;
  double mean_shift_depth = 0.0;
  double mean_shift_height = 0.0;  // identically 0: height is a world quantity
  double wasserstein_depth = 0.0;  // EMD between clean/noisy (v, depth) sets
  double wasserstein_height = 0.0;
};

namespace detail {

// Exact min-cost assignment (Jonker-Volgenant style shortest augmenting
// paths) on a dense n x n cost matrix.
inline double assignment_cost(const std::vector<double>& cost, int n) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0);  // column -> row (1-based)
  std::vector<int> way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j)
    total += cost[(match[j] - 1) * n + (j - 1)];
  return total;
}

}  // namespace detail

// Exact 1-Wasserstein distance between equal-size empirical 2D samples
// (Euclidean ground cost, uniform weights).
inline double wasserstein_2d(const std::vector<std::array<double, 2>>& a,
                             const std::vector<std::array<double, 2>>& b) {
  if (a.size() != b.size()) throw InvalidSpec("wasserstein: sample sizes differ");
  if (a.empty()) return 0.0;
  const int n = static_cast<int>(a.size());
  std::vector<double> cost(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cost[static_cast<std::size_t>(i) * n + j] =
          std::hypot(a[i][0] - b[j][0], a[i][1] - b[j][1]);
  return detail::assignment_cost(cost, n) / n;
}

// Records every box center visible under both the clean and disturbed rig
// and quantifies the clean-vs-noisy overlap per quantity.
inline std::pair<ScatterSet, OverlapReport> scatter_analysis(
    const Scene& scene, const CameraRig& rig, const Disturbance& d) {
  const CameraRig noisy_rig = apply_disturbance(rig, d);
  const double img_w = rig.image_size.width;
  const double img_h = rig.image_size.height;
  if (img_w <= 0 || img_h <= 0)
    throw InvalidSpec("scatter: rig needs an image size for visibility checks");

  ScatterSet set;
  OverlapReport report;
  std::vector<std::array<double, 2>> clean_d, noisy_d, clean_h, noisy_h;
  int object_id = 0;
  for (const Box3D& box : scene.boxes) {
    const Vec3 center{box.x, box.y, box.z};
    const Vec3 pc_clean = rig.ego_to_cam(center);
    const Vec3 pc_noisy = noisy_rig.ego_to_cam(center);
    if (!(pc_clean.z() > 0.0) || !(pc_noisy.z() > 0.0)) {
      ++object_id;
      continue;
    }
    const auto [px_clean, depth_clean] = project(rig, pc_clean);
    const auto [px_noisy, depth_noisy] = project(noisy_rig, pc_noisy);
    const auto inside = [&](Pixel p) {
      return p.u >= 0.0 && p.u < img_w && p.v >= 0.0 && p.v < img_h;
    };
    if (!inside(px_clean) || !inside(px_noisy)) {
      ++object_id;
      continue;
    }
    set.records.push_back({object_id, Condition::Clean, px_clean.v, depth_clean, center.z()});
    set.records.push_back({object_id, Condition::Noisy, px_noisy.v, depth_noisy, center.z()});
    clean_d.push_back({px_clean.v, depth_clean});
    noisy_d.push_back({px_noisy.v, depth_noisy});
    clean_h.push_back({px_clean.v, center.z()});
    noisy_h.push_back({px_noisy.v, center.z()});
    report.mean_shift_v += std::abs(px_noisy.v - px_clean.v);
    report.mean_shift_depth += std::abs(depth_noisy - depth_clean);
    ++report.visible_objects;
    ++object_id;
  }
  if (report.visible_objects < 2)
    throw NoVisibleObjects("scatter: fewer than 2 objects visible in both conditions");

  report.mean_shift_v /= report.visible_objects;
  report.mean_shift_depth /= report.visible_objects;
  report.mean_shift_height = 0.0;
  report.wasserstein_depth = wasserstein_2d(clean_d, noisy_d);
  report.wasserstein_height = wasserstein_2d(clean_h, noisy_h);
  return {std::move(set), report};
}

}  // namespace bevlift
