#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bevlift/binning.hpp"
#include "bevlift/error.hpp"
#include "bevlift/geometry.hpp"
#include "bevlift/lifting.hpp"
#include "bevlift/parallel.hpp"
#include "bevlift/rng.hpp"

namespace bevlift {

// 7-DoF box: center (ego frame), dimensions, yaw about ego z.
struct Box3D {
  double x = 0, y = 0, z = 0;
  double l = 1, w = 1, h = 1;
  double theta = 0;
};

// Ground plane is ego z = 0.
struct Scene {
  std::vector<Box3D> boxes;
  double sample_density = 100.0;  // surface points per m^2
  double ground_radius = 120.0;   // sampled disk radius around the camera foot
};

struct SceneGenSpec {
  int count = 20;
  double range_min = 10.0;  // forward distance band, meters
  double range_max = 100.0;
  double lateral = 6.0;  // |y| bound for box centers
};

// Vehicle-like boxes scattered over the forward ground band, resting on the
// ground plane.
inline Scene generate_scene(const SceneGenSpec& spec, std::uint64_t seed,
                            double sample_density = 100.0,
                            double ground_radius = 120.0) {
  if (spec.count < 0 || !(spec.range_max > spec.range_min))
    throw InvalidSpec("scene: bad generation spec");
  Scene scene;
  scene.sample_density = sample_density;
  scene.ground_radius = ground_radius;
  SplitMix64 g(derive_seed(seed, "scene-boxes"));
  scene.boxes.reserve(spec.count);
  for (int i = 0; i < spec.count; ++i) {
    Box3D b;
    b.x = uniform(g, spec.range_min, spec.range_max);
    b.y = uniform(g, -spec.lateral, spec.lateral);
    b.l = uniform(g, 3.8, 5.2);
    b.w = uniform(g, 1.6, 2.0);
    b.h = uniform(g, 1.3, 2.0);
    b.z = b.h / 2.0;  // resting on the ground
    b.theta = uniform(g, -std::numbers::pi, std::numbers::pi);
    scene.boxes.push_back(b);
  }
  return scene;
}

namespace detail {

// Stratified jittered samples of one box face. `axis` is the fixed local
// axis (0,1,2), `sign` picks the face.
inline void sample_face(const Box3D& box, int axis, double sign, double density,
                        SplitMix64& g, std::vector<Vec3>& out) {
  const double dims[3] = {box.l, box.w, box.h};
  const int u_axis = axis == 0 ? 1 : 0;
  const int v_axis = axis == 2 ? 1 : 2;
  const double du = dims[u_axis];
  const double dv = dims[v_axis];
  const double area = du * dv;
  const int n = std::max(1, static_cast<int>(std::llround(area * density)));
  const int nu = std::max(1, static_cast<int>(std::llround(std::sqrt(n * du / dv))));
  const int nv = std::max(1, (n + nu - 1) / nu);
  const double c = std::cos(box.theta), s = std::sin(box.theta);
  for (int iu = 0; iu < nu; ++iu) {
    for (int iv = 0; iv < nv; ++iv) {
      double local[3];
      local[axis] = sign * dims[axis] / 2.0;
      local[u_axis] = ((iu + uniform01(g)) / nu - 0.5) * du;
      local[v_axis] = ((iv + uniform01(g)) / nv - 0.5) * dv;
      const double wx = c * local[0] - s * local[1];
      const double wy = s * local[0] + c * local[1];
      out.emplace_back(box.x + wx, box.y + wy, box.z + local[2]);
    }
  }
}

}  // namespace detail

// Deterministic surface sampling: all six faces of every box, plus a ground
// disk around the camera foot.
inline std::vector<Vec3> sample_scene_points(const Scene& scene,
                                             const Vec3& camera_foot,
                                             std::uint64_t seed) {
  if (!(scene.sample_density > 0.0))
    throw InvalidSpec("scene: sample density must be positive");
  std::vector<Vec3> points;
  SplitMix64 g(derive_seed(seed, "scene-surface"));
  for (const Box3D& box : scene.boxes) {
    if (!(box.l > 0) || !(box.w > 0) || !(box.h > 0))
      throw InvalidSpec("scene: box dimensions must be positive");
    for (int axis = 0; axis < 3; ++axis)
      for (double sign : {-1.0, 1.0})
        detail::sample_face(box, axis, sign, scene.sample_density, g, points);
  }
  if (scene.ground_radius > 0.0) {
    const double r = scene.ground_radius;
    const double spacing = 1.0 / std::sqrt(scene.sample_density);
    const int half = static_cast<int>(std::ceil(r / spacing));
    for (int ix = -half; ix <= half; ++ix) {
      for (int iy = -half; iy <= half; ++iy) {
        const double px = (ix + uniform01(g)) * spacing;
        const double py = (iy + uniform01(g)) * spacing;
        if (px * px + py * py > r * r) continue;
        points.emplace_back(camera_foot.x() + px, camera_foot.y() + py, 0.0);
      }
    }
  }
  return points;
}

// Per-pixel depth/height maps at feature-cell resolution, plus validity.
struct PixelMaps {
  int width = 0;
  int height = 0;
  int stride = 1;
  std::vector<double> depth;    // camera-frame z of the winning point
  std::vector<double> heightv;  // ego z of the winning point
  std::vector<std::uint8_t> valid;
  std::uint64_t dropped_behind = 0;  // points at or behind the camera plane
  std::uint64_t dropped_outside = 0;

  std::size_t index(int y, int x) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  std::uint64_t valid_count() const {
    std::uint64_t n = 0;
    for (auto v : valid) n += v;
    return n;
  }
};

// z-buffers points into PixelMaps: nearest depth wins, ties go to the
// smaller point index, so the result is independent of scheduling.
inline PixelMaps render_points(std::span<const Vec3> points,
                               const CameraRig& rig, int map_width,
                               int map_height, int stride, int threads = 1) {
  if (map_width <= 0 || map_height <= 0 || stride < 1)
    throw InvalidSpec("render: bad map geometry");
  PixelMaps maps;
  maps.width = map_width;
  maps.height = map_height;
  maps.stride = stride;
  const std::size_t n_px = static_cast<std::size_t>(map_width) * map_height;
  maps.depth.assign(n_px, 0.0);
  maps.heightv.assign(n_px, 0.0);
  maps.valid.assign(n_px, 0);

  struct Hit {
    double depth = std::numeric_limits<double>::infinity();
    std::size_t point = std::numeric_limits<std::size_t>::max();
  };
  const int n_chunks = detail::chunk_count(points.size(), threads);
  std::vector<std::vector<Hit>> buffers(n_chunks, std::vector<Hit>(n_px));
  std::vector<std::uint64_t> behind(n_chunks, 0), outside(n_chunks, 0);

  detail::parallel_chunks(points.size(), threads,
                          [&](std::size_t b, std::size_t e, int chunk) {
    auto& buf = buffers[chunk];
    for (std::size_t i = b; i < e; ++i) {
      const Vec3 pc = rig.ego_to_cam(points[i]);
      if (!(pc.z() > 0.0)) {
        ++behind[chunk];
        continue;
      }
      const double u = rig.intrinsics.fx * pc.x() / pc.z() + rig.intrinsics.cx;
      const double v = rig.intrinsics.fy * pc.y() / pc.z() + rig.intrinsics.cy;
      const int px = static_cast<int>(std::floor((u + 0.5) / stride));
      const int py = static_cast<int>(std::floor((v + 0.5) / stride));
      if (px < 0 || px >= map_width || py < 0 || py >= map_height) {
        ++outside[chunk];
        continue;
      }
      Hit& hit = buf[static_cast<std::size_t>(py) * map_width + px];
      if (pc.z() < hit.depth || (pc.z() == hit.depth && i < hit.point)) {
        hit.depth = pc.z();
        hit.point = i;
      }
    }
  });

  for (int c = 0; c < n_chunks; ++c) {
    maps.dropped_behind += behind[c];
    maps.dropped_outside += outside[c];
  }
  for (std::size_t px = 0; px < n_px; ++px) {
    Hit best;
    for (int c = 0; c < n_chunks; ++c) {
      const Hit& h = buffers[c][px];
      if (h.depth < best.depth || (h.depth == best.depth && h.point < best.point))
        best = h;
    }
    if (best.point == std::numeric_limits<std::size_t>::max()) continue;
    maps.valid[px] = 1;
    maps.depth[px] = best.depth;
    maps.heightv[px] = points[best.point].z();
  }
  return maps;
}

inline PixelMaps render_maps(const Scene& scene, const CameraRig& rig,
                             int map_width, int map_height, int stride,
                             std::uint64_t seed, int threads = 1) {
  const Vec3 center = rig.camera_center_ego();
  const auto points = sample_scene_points(scene, {center.x(), center.y(), 0.0}, seed);
  return render_points(points, rig, map_width, map_height, stride, threads);
}

// Point file: one `x,y,z` row per point (meters, ego frame), `#` comments.
inline std::vector<Vec3> load_points(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<Vec3> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    double x, y, z;
    char extra;
    const int got = std::sscanf(line.c_str(), " %lf , %lf , %lf %c", &x, &y, &z, &extra);
    if (got != 3)
      throw ParseError("point file '" + path.string() + "': malformed row at line " +
                       std::to_string(line_no));
    points.emplace_back(x, y, z);
  }
  if (points.empty()) throw EmptyCloud("point file '" + path.string() + "' has no points");
  return points;
}

inline void save_points(const std::filesystem::path& path,
                        std::span<const Vec3> points) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << "# x,y,z (meters, ego frame)\n";
  char buf[96];
  for (const Vec3& p : points) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p.x(), p.y(), p.z());
    os << buf;
  }
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

inline PixelMaps ingest_points(const std::filesystem::path& path,
                               const CameraRig& rig, int map_width,
                               int map_height, int stride, int threads = 1) {
  const auto points = load_points(path);
  return render_points(points, rig, map_width, map_height, stride, threads);
}

enum class Quantity { Depth, Height };

// Counts over valid pixels; out-of-range values clamp into the end bins, so
// the total always equals the valid-pixel count.
inline std::vector<std::uint64_t> histogram(const PixelMaps& maps,
                                            Quantity quantity,
                                            const BinSpec& bins) {
  std::vector<std::uint64_t> counts(bins.n_bins, 0);
  const auto& values = quantity == Quantity::Depth ? maps.depth : maps.heightv;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (maps.valid[i]) ++counts[bin_index(bins, values[i])];
  return counts;
}

// Ground-truth bins-like distribution from a rendered map: probability 1 in
// the bin holding the pixel's value; invalid pixels get a uniform row.
inline DistributionMap distribution_from_maps(const PixelMaps& maps,
                                              Quantity quantity,
                                              const BinSpec& bins) {
  DistributionMap dist = DistributionMap::uniform(bins.n_bins, maps.height, maps.width);
  const auto& values = quantity == Quantity::Depth ? maps.depth : maps.heightv;
  for (int y = 0; y < maps.height; ++y) {
    for (int x = 0; x < maps.width; ++x) {
      if (!maps.valid[maps.index(y, x)]) continue;
      for (int b = 0; b < bins.n_bins; ++b) dist.at(b, y, x) = 0.0f;
      dist.at(bin_index(bins, values[maps.index(y, x)]), y, x) = 1.0f;
    }
  }
  return dist;
}

struct ErrorLawResult {
  Vec3 point_true;
  Vec3 point_perturbed;
  double range_error = 0.0;  // horizontal distance between the two points
  double closed_form = 0.0;  // |dh| * r_true / (H - h_true)
};

// Ground-plane displacement caused by a height error dh at one pixel. The
// lift is linear in h, so the closed form is exact.
inline ErrorLawResult error_law(const CameraRig& rig, Pixel p, double h_true,
                                double delta_h) {
  ErrorLawResult r;
  r.point_true = lift_pixel_height(rig, p, h_true);
  r.point_perturbed = lift_pixel_height(rig, p, h_true + delta_h);
  const double dx = r.point_perturbed.x() - r.point_true.x();
  const double dy = r.point_perturbed.y() - r.point_true.y();
  r.range_error = std::hypot(dx, dy);
  const Vec3 center = rig.camera_center_ego();
  const double r_true = std::hypot(r.point_true.x() - center.x(),
                                   r.point_true.y() - center.y());
  r.closed_form = std::abs(delta_h) * r_true / (rig.ground_height - h_true);
  return r;
}

}  // namespace bevlift
