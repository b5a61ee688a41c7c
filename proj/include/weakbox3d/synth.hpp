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
#include <filesystem>
#include <string>
#include <vector>

#include "weakbox3d/fitter.hpp"
#include "weakbox3d/geom.hpp"
#include "weakbox3d/kitti.hpp"
#include "weakbox3d/losses.hpp"
#include "weakbox3d/pointcloud.hpp"

namespace weakbox3d::synth {

/// Camera-frame ground y for a camera 1.65 m above the road.
inline constexpr double kDefaultGroundHeight = 1.65;

/// KITTI-like velodyne -> camera transform (axis permutation plus offset).
Eigen::Matrix4d kitti_like_extrinsic();
CameraModel default_camera();

struct SceneSpec {
  std::vector<Box3D> boxes;
  CameraModel cam = default_camera();
  double ground_height = kDefaultGroundHeight;
  double noise_sigma = 0.02;
  double h_res_deg = 0.2;
  int rows_per_box = 2;
  double fan_half_angle_deg = 45.0;
  bool with_ground = true;
  double ground_min_range = 4.0;
  double ground_max_range = 60.0;
  double ground_res_deg = 0.4;
};

inline constexpr int kGroundOwner = -1;

struct SynthScene {
  std::vector<Box3D> gt_boxes;
  CameraModel cam;
  std::vector<Vec3d> points;        // camera frame, noisy
  std::vector<Vec3d> clean_points;  // before noise
  std::vector<int> owner;           // box index or kGroundOwner
  std::vector<int> face;            // RectFace of the hit, -1 for ground
  double ground_height = kDefaultGroundHeight;
  double noise_sigma = 0;
  std::uint64_t seed = 0;

  std::vector<Vec3d> object_points(int box, bool clean = false) const;
  /// Number of points per face of `box` (indexed by RectFace).
  std::array<int, 4> face_counts(int box) const;
};

/// Ray-casts horizontal fans at `rows_per_box` heights inside each box's
/// vertical span; each ray keeps its first box hit. Throws
/// std::invalid_argument on overlapping boxes or boxes not in front (z <= l).
SynthScene generate_scene(const SceneSpec& spec, std::uint64_t seed);

/// Projected 8-corner bbox clamped to the image.
BBox2D project_box(const Box3D& box, const CameraModel& cam);

/// GT-derived 2D detections (score 1, class "Car" unless overridden).
std::vector<Detection2D> detections_for(const SynthScene& scene, const std::string& frame_id,
                                        const std::string& cls = "Car");

/// Full-surface samples on all four BEV edges at the box's mid-height.
std::vector<Vec3d> edge_points(const Box3D& box, int per_edge);

struct GridSurface {
  Vec2d origin = Vec2d::Zero();  // center of cell (0, 0)
  double step = 0.05;
  int nx = 0;
  int nz = 0;
  std::vector<double> values;  // row-major in z
  Vec2d argmin = Vec2d::Zero();
  double min_value = 0;

  double at(int ix, int iz) const { return values[static_cast<std::size_t>(iz) * nx + ix]; }
  Vec2d center_of(int ix, int iz) const { return origin + step * Vec2d(ix, iz); }
};

/// Exhaustive total-loss evaluation over a square window around
/// `window_center` with the footprint, yaw and y of `box` held fixed.
GridSurface grid_oracle(const ObjectPoints& pts, const Box3D& box, const LossConfig& cfg,
                        const Vec2d& window_center, double window = 4.0, double step = 0.05);

/// Lowest grid values on either side of a line (the visible face): the side
/// containing the camera versus the far side. gap = |a - b| / max(a, b).
struct BasinComparison {
  double near_min = 0;
  double far_min = 0;
  Vec2d near_arg = Vec2d::Zero();
  Vec2d far_arg = Vec2d::Zero();
  double gap = 0;
};

BasinComparison compare_face_basins(const GridSurface& s, const Vec2d& face_point,
                                    const Vec2d& normal_to_camera);

/// Cell-center counting over the union bounding window, computed row by row.
double rasterized_iou_oracle(const BevRectd& a, const BevRectd& b, double cell);

// ---- random scene families -------------------------------------------------

struct SceneFamily {
  double z_min = 8.0;
  double z_max = 40.0;
  double max_bearing_deg = 30.0;
  double noise_sigma = 0.02;
  ClassDims dims{};
};

/// One car, uniform yaw, 1-2 visible faces.
SceneSpec random_single_car(const SceneFamily& fam, std::uint64_t seed);

/// One car turned so exactly one face is visible: the width face when
/// `width_face`, else the length face.
SceneSpec random_single_face_car(const SceneFamily& fam, bool width_face, std::uint64_t seed);

/// Camera-facing face of `box` for a single-face scene: point on the face and
/// its outward normal.
std::pair<Vec2d, Vec2d> camera_facing_face(const Box3D& box, const Vec2d& camera = Vec2d::Zero());

// ---- dataset export --------------------------------------------------------

struct DatasetSpec {
  int frames = 20;
  int objects_per_frame = 2;
  std::uint64_t seed = 7;
  SceneFamily family;
  SceneSpec base;  // sensor/ground settings; explicit boxes become an extra frame
};

/// Parses `key = value` lines; `box = x,y,z,h,w,l,theta` may repeat.
DatasetSpec parse_dataset_spec(const std::string& text, const std::string& origin = "<spec>");
std::string format_dataset_spec(const DatasetSpec& spec);

/// Writes velodyne/, calib/, label_2/ and detections.csv under `out`.
/// Returns the frame ids in order.
std::vector<std::string> export_dataset(const DatasetSpec& spec, const std::filesystem::path& out);

/// Scenes of the dataset, in export order.
std::vector<SynthScene> dataset_scenes(const DatasetSpec& spec);

}  // namespace weakbox3d::synth
