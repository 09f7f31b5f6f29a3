#include "bevlift/lifting.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace bevlift;
using testutil::ray_plane_oracle;

namespace {

LiftConfig level_cfg(double h, int n_bins = 2) {
  LiftConfig cfg;
  cfg.rig = testutil::level_rig(h);
  cfg.bins = BinSpec::make(BinStrategy::UD, -1.0, 1.0, n_bins);
  cfg.feature_stride = 1;
  return cfg;
}

}  // namespace

TEST(Lifting, LevelCameraGroundPixelHandComputed) {
  // camera at 5 m, K = identity, ray (0, 0.5, 1): virtual point (0, 5, 10)
  const LiftConfig cfg = level_cfg(5.0);
  const Pixel p{0.0, 0.5};
  const Vec3 ref = reference_point_virtual(cfg.rig, p);
  EXPECT_NEAR(ref.x(), 0.0, 1e-15);
  EXPECT_NEAR(ref.y(), 0.5, 1e-15);
  EXPECT_NEAR(ref.z(), 1.0, 1e-15);

  // scale (5-0)/0.5 = 10 along the ray; in ego frame: 10 m ahead on the ground
  const Vec3 ground = lift_pixel_height(cfg, p, 0.0);
  EXPECT_NEAR(ground.x(), 10.0, 1e-12);
  EXPECT_NEAR(ground.y(), 0.0, 1e-12);
  EXPECT_NEAR(ground.z(), 0.0, 1e-12);

  // h = 1: scale (5-1)/0.5 = 8 along the same ray
  const Vec3 raised = lift_pixel_height(cfg, p, 1.0);
  EXPECT_NEAR(raised.x(), 8.0, 1e-12);
  EXPECT_NEAR(raised.y(), 0.0, 1e-12);
  EXPECT_NEAR(raised.z(), 1.0, 1e-12);
}

TEST(Lifting, HeightAtCameraLevelCollapsesToCameraOrigin) {
  const LiftConfig cfg = level_cfg(5.0);
  const Pixel p{0.2, 0.4};
  EXPECT_THROW(lift_pixel_height(cfg, p, 5.0), AboveCamera);
  EXPECT_THROW(lift_pixel_height(cfg, p, 7.0), AboveCamera);
  // with the guard relaxed, the scale factor hits zero at h = H
  const Vec3 collapsed = detail::lift_pixel_height_raw(cfg.rig, p, 5.0);
  EXPECT_NEAR((collapsed - cfg.rig.camera_center_ego()).norm(), 0.0, 1e-12);
}

TEST(Lifting, HorizonRayRejected) {
  const LiftConfig cfg = level_cfg(5.0);
  EXPECT_THROW(lift_pixel_height(cfg, Pixel{0.0, 0.0}, 0.0), HorizonRay);   // level ray
  EXPECT_THROW(lift_pixel_height(cfg, Pixel{0.0, -0.3}, 0.0), HorizonRay);  // sky ray
}

TEST(Lifting, RayPlaneOracleProperty) {
  SplitMix64 g(9001);
  for (int i = 0; i < 10000; ++i) {
    const CameraRig rig = testutil::random_rig(g);
    const Pixel p = testutil::random_ground_pixel(g, rig);
    const double h = uniform(g, -1.0, std::min(2.0, rig.ground_height - 0.5));
    const Vec3 lifted = lift_pixel_height(rig, p, h);
    const Vec3 oracle = ray_plane_oracle(rig, p, h);
    ASSERT_LE((lifted - oracle).norm(), 1e-9 * (1.0 + oracle.norm()));
  }
}

TEST(Lifting, HeightExactnessAndColinearity) {
  SplitMix64 g(9002);
  for (int i = 0; i < 10000; ++i) {
    const CameraRig rig = testutil::random_rig(g);
    const Pixel p = testutil::random_ground_pixel(g, rig);
    const double h = uniform(g, -1.0, std::min(2.0, rig.ground_height - 0.5));
    const Vec3 lifted = lift_pixel_height(rig, p, h);
    ASSERT_NEAR(lifted.z(), h, 1e-9);

    const Vec3 origin = rig.camera_center_ego();
    const Vec3 dir = rig.extrinsics.rotation.transpose() *
                     Vec3{(p.u - rig.intrinsics.cx) / rig.intrinsics.fx,
                          (p.v - rig.intrinsics.cy) / rig.intrinsics.fy, 1.0};
    const Vec3 to_point = lifted - origin;
    const double residual =
        to_point.cross(dir).norm() / (to_point.norm() * dir.norm());
    ASSERT_LE(residual, 1e-9);
  }
}

TEST(Lifting, DepthLiftHandComputed) {
  const LiftConfig cfg = level_cfg(5.0);
  // identity transforms in the virtual sense: camera at origin looking +x;
  // pixel (0,0) depth 7 -> 7 m ahead of the camera
  const Vec3 ahead = lift_pixel_depth(cfg, Pixel{0.0, 0.0}, 7.0);
  EXPECT_NEAR(ahead.x(), 7.0, 1e-12);
  EXPECT_NEAR(ahead.y(), 0.0, 1e-12);
  EXPECT_NEAR(ahead.z(), 5.0, 1e-12);

  // pixel (0.5, 0) depth 4 -> camera frame (2, 0, 4)
  const Vec3 side_cam = back_project(cfg.rig, Pixel{0.5, 0.0}, 4.0);
  EXPECT_NEAR(side_cam.x(), 2.0, 1e-15);
  EXPECT_NEAR(side_cam.y(), 0.0, 1e-15);
  EXPECT_EQ(side_cam.z(), 4.0);
  const Vec3 side = lift_pixel_depth(cfg, Pixel{0.5, 0.0}, 4.0);
  EXPECT_NEAR((side - cfg.rig.cam_to_ego(side_cam)).norm(), 0.0, 0.0);

  EXPECT_THROW(lift_pixel_depth(cfg, Pixel{0, 0}, 0.0), NonPositiveDepth);
}

TEST(Lifting, DepthLiftReprojectsToSamePixel) {
  SplitMix64 g(9003);
  for (int i = 0; i < 10000; ++i) {
    const CameraRig rig = testutil::random_rig(g);
    const Pixel p{uniform(g, 0.0, 1920.0), uniform(g, 0.0, 1080.0)};
    const double d = uniform(g, 0.1, 200.0);
    const Vec3 lifted = lift_pixel_depth(rig, p, d);
    const auto [q, depth] = project(rig, rig.ego_to_cam(lifted));
    ASSERT_NEAR(q.u, p.u, 1e-12 * (1.0 + std::abs(p.u)));
    ASSERT_NEAR(q.v, p.v, 1e-12 * (1.0 + std::abs(p.v)));
    ASSERT_NEAR(depth, d, 1e-12 * d);
  }
}

TEST(Lifting, DepthHeightAgreementOnGroundRay) {
  SplitMix64 g(9004);
  for (int i = 0; i < 5000; ++i) {
    const CameraRig rig = testutil::random_rig(g);
    const Pixel p = testutil::random_ground_pixel(g, rig);
    const double h = uniform(g, -1.0, std::min(2.0, rig.ground_height - 0.5));
    const Vec3 by_height = lift_pixel_height(rig, p, h);
    // the ray hits the plane at depth equal to the lifted point's camera z
    const double d = rig.ego_to_cam(by_height).z();
    const Vec3 by_depth = lift_pixel_depth(rig, p, d);
    ASSERT_NEAR((by_height - by_depth).norm(), 0.0, 1e-9);
  }
}

TEST(Lifting, LargerHeightMeansSmallerRange) {
  const CameraRig rig = testutil::pitched_rig(5.0, 0.4);
  const Pixel p{0.0, 0.1};
  double prev = std::numeric_limits<double>::infinity();
  for (double h : {0.0, 0.5, 1.0, 1.5, 2.0}) {
    const Vec3 q = lift_pixel_height(rig, p, h);
    const Vec3 foot = rig.camera_center_ego();
    const double range = std::hypot(q.x() - foot.x(), q.y() - foot.y());
    ASSERT_LT(range, prev);
    prev = range;
  }
}

TEST(Lifting, LiftMapTinyExample) {
  LiftConfig cfg = level_cfg(5.0, 2);
  cfg.bins = BinSpec::make(BinStrategy::UD, 0.0, 1.0, 2);
  FeatureMap features = FeatureMap::zeros(1, 1, 1);
  features.at(0, 0, 0) = 3.0f;
  DistributionMap dist = DistributionMap::uniform(2, 1, 1);
  dist.at(0, 0, 0) = 1.0f;
  dist.at(1, 0, 0) = 0.0f;

  // pixel (0,0) sits on the horizon for a level camera; pitch the rig down
  cfg.rig = testutil::pitched_rig(5.0, 0.4);
  const WedgeVolume vol = lift_map(cfg, features, dist, LiftSource::Height);
  ASSERT_EQ(vol.size(), 2u);
  EXPECT_EQ(vol.dropped_rays, 0u);
  EXPECT_EQ(vol.dropped_bins, 0u);
  EXPECT_EQ(vol.features[0], 3.0f);
  EXPECT_EQ(vol.features[1], 0.0f);
  EXPECT_EQ(vol.bins[0], 0);
  EXPECT_EQ(vol.bins[1], 1);
  // positions match the scalar lift of the cell-center pixel
  const Pixel px = cell_center_pixel(0, 0, cfg.feature_stride);
  const Vec3 p0 = lift_pixel_height(cfg, px, bin_center(cfg.bins, 0));
  EXPECT_EQ(vol.positions[0][0], p0.x());
  EXPECT_EQ(vol.positions[0][2], p0.z());
}

TEST(Lifting, ProbabilityFloorPrunesLowWeightBins) {
  LiftConfig cfg;
  cfg.rig = testutil::pitched_rig(5.0, 0.4);
  cfg.bins = BinSpec::make(BinStrategy::UD, 0.0, 1.0, 2);
  cfg.feature_stride = 1;
  FeatureMap features = FeatureMap::zeros(1, 1, 1);
  features.at(0, 0, 0) = 3.0f;
  DistributionMap dist = DistributionMap::uniform(2, 1, 1);
  dist.at(0, 0, 0) = 1.0f;
  dist.at(1, 0, 0) = 0.0f;

  // floor 0 keeps the zero-weight point; a positive floor prunes it
  const WedgeVolume keep_all = lift_map(cfg, features, dist, LiftSource::Height);
  EXPECT_EQ(keep_all.size(), 2u);
  EXPECT_EQ(keep_all.pruned_points, 0u);

  cfg.prob_floor = 0.5f;
  const WedgeVolume pruned = lift_map(cfg, features, dist, LiftSource::Height);
  ASSERT_EQ(pruned.size(), 1u);
  EXPECT_EQ(pruned.pruned_points, 1u);
  EXPECT_EQ(pruned.bins[0], 0);
  EXPECT_EQ(pruned.features[0], 3.0f);
}

TEST(Lifting, LiftMapCountLaw) {
  LiftConfig cfg;
  cfg.rig = testutil::pitched_rig(5.0, 0.5);
  cfg.bins = BinSpec::make(BinStrategy::DID, -1.0, 1.0, 90, 2.0);
  cfg.feature_stride = 1;
  const FeatureMap features = FeatureMap::zeros(4, 4, 4);
  const DistributionMap dist = DistributionMap::uniform(90, 4, 4);
  const WedgeVolume vol = lift_map(cfg, features, dist, LiftSource::Height);
  EXPECT_EQ(vol.size(), 4u * 4u * 90u);
  EXPECT_EQ(vol.dropped_rays, 0u);
}

TEST(Lifting, HeightToDepthPointCountRatio) {
  // 90 height bins vs 206 depth bins on the same feature grid
  LiftConfig height_cfg;
  height_cfg.rig = testutil::pitched_rig(5.0, 0.5);
  height_cfg.bins = BinSpec::make(BinStrategy::DID, -1.0, 1.0, 90, 2.0);
  height_cfg.feature_stride = 16;
  LiftConfig depth_cfg = height_cfg;
  depth_cfg.bins = BinSpec::make(BinStrategy::UD, 1.0, 104.0, 206);

  const FeatureMap features = FeatureMap::zeros(8, 6, 10);
  const DistributionMap height_dist = DistributionMap::uniform(90, 6, 10);
  const DistributionMap depth_dist = DistributionMap::uniform(206, 6, 10);

  const WedgeVolume wh = lift_map(height_cfg, features, height_dist, LiftSource::Height);
  const WedgeVolume wd = lift_map(depth_cfg, features, depth_dist, LiftSource::Depth);
  ASSERT_EQ(wh.dropped_rays, 0u);
  ASSERT_EQ(wd.dropped_rays, 0u);
  EXPECT_EQ(wh.size() * 206u, wd.size() * 90u);
}

TEST(Lifting, LiftMapHorizonCellsDropEntirely) {
  LiftConfig cfg;
  cfg.rig = testutil::level_rig(5.0);  // top rows of a level camera see sky
  cfg.bins = BinSpec::make(BinStrategy::UD, 0.0, 1.0, 3);
  cfg.feature_stride = 1;
  // 1-wide, 3-tall map: stride-1 cell centers sit at v = 0, 1, 2
  const FeatureMap features = FeatureMap::zeros(1, 3, 1);
  const DistributionMap dist = DistributionMap::uniform(3, 3, 1);
  const WedgeVolume vol = lift_map(cfg, features, dist, LiftSource::Height);
  // row 0 ray is exactly on the horizon; rows 1 and 2 hit the ground
  EXPECT_EQ(vol.dropped_rays, 1u);
  EXPECT_EQ(vol.size(), 2u * 3u);
}

TEST(Lifting, LiftMapShapeMismatchRejected) {
  const LiftConfig cfg = level_cfg(5.0, 2);
  const FeatureMap features = FeatureMap::zeros(1, 2, 2);
  const DistributionMap wrong_spatial = DistributionMap::uniform(2, 3, 2);
  EXPECT_THROW(lift_map(cfg, features, wrong_spatial, LiftSource::Height), ShapeMismatch);
  const DistributionMap wrong_bins = DistributionMap::uniform(3, 2, 2);
  EXPECT_THROW(lift_map(cfg, features, wrong_bins, LiftSource::Height), ShapeMismatch);
}

TEST(Lifting, LiftMapDeterministicAcrossThreads) {
  LiftConfig cfg;
  cfg.rig = testutil::pitched_rig(6.0, 0.45);
  cfg.bins = BinSpec::make(BinStrategy::DID, -1.0, 1.0, 30, 1.5);
  cfg.feature_stride = 8;
  SplitMix64 g(9005);
  FeatureMap features = FeatureMap::zeros(5, 9, 13);
  for (auto& v : features.data) v = static_cast<float>(gaussian(g));
  DistributionMap dist = DistributionMap::uniform(30, 9, 13);
  for (auto& v : dist.data) v = static_cast<float>(uniform01(g));
  normalize_distribution(dist, 0.0);

  const WedgeVolume a = lift_map(cfg, features, dist, LiftSource::Height, 1);
  const WedgeVolume b = lift_map(cfg, features, dist, LiftSource::Height, 8);
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.features, b.features);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a.positions[i], b.positions[i]);
    ASSERT_EQ(a.bins[i], b.bins[i]);
  }
}
