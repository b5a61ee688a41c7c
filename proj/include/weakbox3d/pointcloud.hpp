// Copyright 2026 The weakbox3d Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "weakbox3d/geom.hpp"

namespace weakbox3d {

struct LidarPoint {
  float x = 0;
  float y = 0;
  float z = 0;
  float reflectance = 0;
};

/// One velodyne sweep in the LiDAR frame.
struct RawScan {
  std::vector<LidarPoint> points;
};

/// Pinhole intrinsics plus the LiDAR -> rectified camera transform
/// (R0_rect * Tr_velo_to_cam).
struct CameraModel {
  double fx = 721.5377;
  double fy = 721.5377;
  double cx = 609.5593;
  double cy = 172.854;
  Eigen::Matrix4d extrinsic = Eigen::Matrix4d::Identity();
  int width = 1242;
  int height = 375;

  bool valid() const;
};

/// Binary instance mask in image coordinates; nonzero = instance.
struct InstanceMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  bool at(int u, int v) const {
    if (u < 0 || v < 0 || u >= width || v >= height) return false;
    return data[static_cast<std::size_t>(v) * width + u] != 0;
  }
};

struct BBox2D {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;

  double height() const { return y2 - y1; }
  bool contains(double u, double v) const { return u >= x1 && u <= x2 && v >= y1 && v <= y2; }
};

struct Detection2D {
  std::string frame_id;
  std::string cls;
  double score = 1.0;
  BBox2D bbox;
  std::optional<InstanceMask> mask;
};

/// Filtered per-object LiDAR points with cached BEV coordinates, per-point
/// neighbour counts within the density radius, mean camera-y and x-extent.
struct ObjectPoints {
  std::vector<Vec3d> pts3d;
  std::vector<Vec2d> bev;
  std::vector<int> density;
  double y_l = 0;
  double d_x = 0;

  std::size_t size() const { return pts3d.size(); }

  /// Builds all cached fields from camera-frame points.
  static ObjectPoints from_points(std::vector<Vec3d> pts, double radius);
};

struct ExtractConfig {
  double min_depth = 0.1;
  double ransac_threshold = 0.2;
  int ransac_iters = 200;
  double min_inlier_ratio = 0.2;
  double fallback_ground_height = 1.65;
  double dbscan_eps = 0.6;
  int dbscan_min_pts = 4;
  int min_object_points = 15;
  int n_sample = 100;
  double density_radius = 0.4;
};

/// Ground plane n . p + d = 0 with n pointing up (negative camera y).
struct GroundPlane {
  Vec3d normal{0, -1, 0};
  double offset = 1.65;
  double inlier_ratio = 0;

  /// Signed height above the plane.
  double height_of(const Vec3d& p) const { return normal.dot(p) + offset; }
  static GroundPlane horizontal(double camera_height) { return {{0, -1, 0}, camera_height, 0}; }
};

Vec3d to_camera(const Eigen::Matrix4d& extrinsic, const LidarPoint& p);

/// Applies the extrinsic and drops points at depth <= min_depth.
std::vector<Vec3d> transform_to_camera(const RawScan& scan, const CameraModel& cam,
                                       double min_depth = 0.1);

/// Throws std::invalid_argument for z <= 0.
Vec2d project_to_image(const Vec3d& p, const CameraModel& cam);

/// RANSAC over 3-point hypotheses, then least-squares refit on the inliers.
/// Throws std::invalid_argument below 50 points and std::runtime_error when the
/// best inlier ratio is under cfg.min_inlier_ratio.
GroundPlane fit_ground_plane(std::span<const Vec3d> points, const ExtractConfig& cfg,
                             std::uint64_t seed);

/// Keeps points more than `threshold` above the plane.
std::vector<Vec3d> remove_ground(std::span<const Vec3d> points, const GroundPlane& plane,
                                 double threshold);

/// Clamps a 2D box to the image rectangle [0, width] x [0, height].
BBox2D clamp_to_image(const BBox2D& box, const CameraModel& cam);

/// Points whose projection falls in the bbox, or on the mask when one is given.
std::vector<Vec3d> select_frustum(std::span<const Vec3d> points, const Detection2D& det,
                                  const CameraModel& cam);

inline constexpr int kNoise = -1;

/// DBSCAN labels (cluster ids from 0 in discovery order, kNoise for noise).
std::vector<int> dbscan(std::span<const Vec3d> points, double eps, int min_pts);

/// Largest DBSCAN cluster (ties to the lower cluster id). Throws SkipError.
std::vector<Vec3d> cluster_select(std::span<const Vec3d> points, const ExtractConfig& cfg);

/// Median-y filter (keeps y <= median), fixed-size sampling, density and caches.
ObjectPoints finalize_object_points(std::span<const Vec3d> cluster, const ExtractConfig& cfg,
                                    std::uint64_t seed);

/// Neighbour counts with strict radius in BEV, self included.
std::vector<int> bev_density(std::span<const Vec2d> bev, double radius);

double median(std::vector<double> values);

}  // namespace weakbox3d
