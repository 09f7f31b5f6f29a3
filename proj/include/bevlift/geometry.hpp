#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "bevlift/error.hpp"

namespace bevlift {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Continuous image coordinates. Sub-pixel and out-of-bounds values are
// permitted; callers bound-check where it matters.
struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

struct ImageSize {
  int width = 0;
  int height = 0;
};

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  Mat3 matrix() const {
    Mat3 k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
  }

  // K is upper triangular; the closed form avoids a generic solve.
  Mat3 inverse() const {
    Mat3 ki;
    ki << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
    return ki;
  }
};

// Camera-from-ego rigid transform: P_cam = rotation * P_ego + translation.
struct Extrinsics {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

inline void validate_intrinsics(const Intrinsics& k) {
  if (!(k.fx > 0.0) || !(k.fy > 0.0))
    throw InvalidSpec("intrinsics: focal lengths must be positive");
}

inline void validate_rotation(const Mat3& r, double tol = 1e-12) {
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > tol) throw InvalidSpec("rotation is not orthonormal");
  if (std::abs(r.determinant() - 1.0) > tol)
    throw InvalidSpec("rotation determinant is not +1");
}

// Builds the gravity-aligned virtual frame: origin at the camera origin,
// +Y pointing straight down at the ground (so a ground point sits at
// y = ground_height), residual yaw fixed by the horizontal component of the
// camera optical axis, which becomes virtual +Z.
inline std::pair<Mat3, RigidTransform> build_virtual_frame(
    const Extrinsics& extrinsics, double ground_height) {
  if (!(ground_height > 0.0))
    throw InvalidSpec("ground_height must be positive");
  // Ego up-direction expressed in camera coordinates.
  const Vec3 up_cam = extrinsics.rotation * Vec3::UnitZ();
  const Vec3 y_virt = -up_cam;
  Vec3 z_virt = Vec3::UnitZ() - Vec3::UnitZ().dot(y_virt) * y_virt;
  const double horiz = z_virt.norm();
  if (horiz <= 1e-6)
    throw DegenerateOrientation(
        "camera optical axis is within 1e-6 rad of vertical");
  z_virt /= horiz;
  const Vec3 x_virt = y_virt.cross(z_virt);

  Mat3 cam_to_virtual;
  cam_to_virtual.row(0) = x_virt;
  cam_to_virtual.row(1) = y_virt;
  cam_to_virtual.row(2) = z_virt;

  RigidTransform virtual_to_ego;
  virtual_to_ego.rotation = extrinsics.rotation.transpose() * cam_to_virtual.transpose();
  virtual_to_ego.translation = -(extrinsics.rotation.transpose() * extrinsics.translation);
  return {cam_to_virtual, virtual_to_ego};
}

// Immutable after construction; all operations on it are pure.
struct CameraRig {
  Intrinsics intrinsics;
  Extrinsics extrinsics;
  double ground_height = 0.0;  // camera origin above the ground plane, meters
  ImageSize image_size;
  Mat3 cam_to_virtual = Mat3::Identity();      // derived
  RigidTransform virtual_to_ego;               // derived

  Vec3 camera_center_ego() const {
    return -(extrinsics.rotation.transpose() * extrinsics.translation);
  }
  // Height the extrinsics imply; calibration loaders warn when this
  // disagrees with ground_height by more than 1 cm.
  double extrinsic_implied_height() const { return camera_center_ego().z(); }

  Vec3 ego_to_cam(const Vec3& p) const {
    return extrinsics.rotation * p + extrinsics.translation;
  }
  Vec3 cam_to_ego(const Vec3& p) const {
    return extrinsics.rotation.transpose() * (p - extrinsics.translation);
  }
};

inline CameraRig make_rig(const Intrinsics& intrinsics,
                          const Extrinsics& extrinsics, double ground_height,
                          ImageSize image_size = {}) {
  validate_intrinsics(intrinsics);
  validate_rotation(extrinsics.rotation);
  CameraRig rig;
  rig.intrinsics = intrinsics;
  rig.extrinsics = extrinsics;
  rig.ground_height = ground_height;
  rig.image_size = image_size;
  std::tie(rig.cam_to_virtual, rig.virtual_to_ego) =
      build_virtual_frame(extrinsics, ground_height);
  return rig;
}

// K^-1 * depth * [u, v, 1]^T; the z component equals depth exactly.
inline Vec3 back_project(const CameraRig& rig, Pixel p, double depth) {
  if (!(depth > 0.0)) throw NonPositiveDepth("back_project: depth must be > 0");
  const Intrinsics& k = rig.intrinsics;
  return {(p.u - k.cx) / k.fx * depth, (p.v - k.cy) / k.fy * depth, depth};
}

inline std::pair<Pixel, double> project(const CameraRig& rig,
                                        const Vec3& point_cam) {
  if (!(point_cam.z() > 0.0))
    throw BehindCamera("project: point is at or behind the camera plane");
  const Intrinsics& k = rig.intrinsics;
  const double z = point_cam.z();
  return {Pixel{k.fx * point_cam.x() / z + k.cx, k.fy * point_cam.y() / z + k.cy}, z};
}

inline std::pair<Pixel, double> project_ego(const CameraRig& rig,
                                            const Vec3& point_ego) {
  return project(rig, rig.ego_to_cam(point_ego));
}

inline Mat3 rotation_about_x(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

inline Mat3 rotation_about_y(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

inline Mat3 rotation_about_z(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

}  // namespace bevlift
