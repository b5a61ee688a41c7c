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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "weakbox3d/synth.hpp"

using namespace weakbox3d;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

Box3D car(double x, double z, double theta) { return Box3D{Vec3d(x, 1.65, z), 1.6, 1.8, 4.0, theta}; }

synth::SynthScene scene_of(std::vector<Box3D> boxes, std::uint64_t seed, double noise = 0, bool ground = false) {
  synth::SceneSpec spec;
  spec.boxes = std::move(boxes);
  spec.noise_sigma = noise;
  spec.with_ground = ground;
  return synth::generate_scene(spec, seed);
}

// Bearing subtended by a BEV segment as seen from the origin.
double subtended(const Vec2d& a, const Vec2d& b) {
  return std::abs(std::atan2(a.x(), a.y()) - std::atan2(b.x(), b.y()));
}

std::string bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Scene, FacingBoxShowsOneFace) {
  const auto s = scene_of({car(0, 15, 0)}, 1);
  const auto faces = s.face_counts(0);
  EXPECT_GT(faces[static_cast<int>(RectFace::kNegWidth)], 50);
  int others = 0;
  for (int f = 0; f < 4; ++f) others += f == static_cast<int>(RectFace::kNegWidth) ? 0 : faces[f];
  EXPECT_EQ(others, 0);
  const ObjectPoints pts = ObjectPoints::from_points(s.object_points(0), 0.4);
  EXPECT_NEAR(pts.d_x, 4.0, 0.15);
  for (const auto& p : pts.pts3d) EXPECT_NEAR(p.z(), 15 - 0.9, 1e-9);
}

TEST(Scene, DiagonalBoxFaceRatioMatchesVisibleArc) {
  const Box3D b = car(2, 14, kPi / 4);
  const auto s = scene_of({b}, 2);
  const auto faces = s.face_counts(0);
  const BevRectd r = bev_rect_of(b);
  // visible faces are the ones whose outward normal points at the camera
  double arc[4] = {};
  const Vec2d half[4] = {{r.half_l, 0}, {-r.half_l, 0}, {0, r.half_w}, {0, -r.half_w}};
  for (int f = 0; f < 4; ++f) {
    const Vec2d mid = r.to_world(half[f]);
    const Vec2d normal = (mid - r.center).normalized();
    if (normal.dot(-mid) <= 0) continue;
    const Vec2d along = f < 2 ? Vec2d(0, r.half_w) : Vec2d(r.half_l, 0);
    arc[f] = subtended(r.to_world(half[f] + along), r.to_world(half[f] - along));
  }
  int visible = 0;
  const double step = 0.2 * kPi / 180;
  for (int f = 0; f < 4; ++f) {
    if (arc[f] == 0) {
      EXPECT_EQ(faces[f], 0);
      continue;
    }
    ++visible;
    // per row, one ray per fan step; two rows
    EXPECT_NEAR(faces[f], 2 * arc[f] / step, 2 * 2 + 1) << "face " << f;
  }
  EXPECT_EQ(visible, 2);
}

TEST(Scene, FullOcclusion) {
  const auto s = scene_of({car(0, 10, 0), car(0, 20, 0)}, 3);
  EXPECT_GT(s.object_points(0).size(), 0u);
  EXPECT_EQ(s.object_points(1).size(), 0u);
}

TEST(Scene, FirstHitProperty) {
  const auto s = scene_of({car(-3, 12, 0.3), car(1, 18, -0.9), car(4, 25, 1.2)}, 4, 0.02, true);
  for (std::size_t i = 0; i < s.clean_points.size(); ++i) {
    if (s.owner[i] == synth::kGroundOwner) continue;
    const Vec2d p = bev_of(s.clean_points[i]);
    const auto ray = Ray2d::from_direction(Vec2d::Zero(), p);
    double nearest = 1e300;
    int who = -1;
    for (std::size_t b = 0; b < s.gt_boxes.size(); ++b) {
      const auto hits = ray_rect_intersect(ray, bev_rect_of(s.gt_boxes[b]));
      if (!hits.empty() && hits.front().t < nearest) {
        nearest = hits.front().t;
        who = static_cast<int>(b);
      }
    }
    EXPECT_EQ(who, s.owner[i]);
    EXPECT_NEAR(nearest, p.norm(), 1e-9);
    const auto hits = ray_rect_intersect(ray, bev_rect_of(s.gt_boxes[static_cast<std::size_t>(who)]));
    EXPECT_EQ(static_cast<int>(hits.front().face), s.face[i]);
  }
}

TEST(Scene, NoiseAndDeterminism) {
  const auto a = scene_of({car(0, 12, 0.5)}, 5, 0.02);
  const auto b = scene_of({car(0, 12, 0.5)}, 5, 0.02);
  const auto c = scene_of({car(0, 12, 0.5)}, 6, 0.02);
  EXPECT_EQ(a.points, b.points);
  EXPECT_NE(a.points, c.points);
  double sum2 = 0;
  for (std::size_t i = 0; i < a.points.size(); ++i) sum2 += (a.points[i] - a.clean_points[i]).squaredNorm();
  const double sigma = std::sqrt(sum2 / (3.0 * a.points.size()));
  EXPECT_NEAR(sigma, 0.02, 0.004);
}

TEST(Scene, RejectsBadBoxes) {
  EXPECT_THROW(scene_of({car(0, 12, 0), car(1, 12.5, 0)}, 1), std::invalid_argument);
  EXPECT_THROW(scene_of({car(0, 3, 0)}, 1), std::invalid_argument);
}

TEST(Scene, GtIsLocalMinimum) {
  const Box3D b = car(1.5, 12, 0.3);
  const auto s = scene_of({b}, 7);
  const ObjectPoints pts = ObjectPoints::from_points(s.object_points(0), 0.4);
  LossConfig cfg;
  Box3D gt = b;
  gt.location.y() = pts.y_l + gt.h / 2;
  const double at_gt = total_loss(pts, gt, cfg).total;
  const double deg10 = 10 * kPi / 180;
  const std::vector<std::array<double, 3>> moves = {{0.5, 0, 0},  {-0.5, 0, 0}, {0, 0.5, 0},    {0, -0.5, 0},
                                                    {0.5, 0.5, 0}, {-0.5, -0.5, 0}, {0, 0, deg10}, {0, 0, -deg10}};
  for (const auto& m : moves) {
    Box3D moved = gt;
    moved.location.x() += m[0];
    moved.location.z() += m[1];
    moved.theta_y += m[2];
    EXPECT_GT(total_loss(pts, moved, cfg, gt.theta_y).total, at_gt);
  }
}

TEST(GridOracle, FourEdgeArgmin) {
  const Box3D b = car(-1, 16, 0.6);
  const ObjectPoints pts = ObjectPoints::from_points(synth::edge_points(b, 20), 0.4);
  const auto s = synth::grid_oracle(pts, b, LossConfig{}, b.bev_center() + Vec2d(0.3, -0.2));
  EXPECT_EQ(s.nx, 81);
  EXPECT_LE((s.argmin - b.bev_center()).norm(), 0.05 * std::sqrt(2.0) + 1e-9);
}

TEST(GridOracle, RayLossBreaksFaceAmbiguity) {
  const Box3D b = car(0, 10, 0);
  const auto scene = scene_of({b}, 8);
  const ObjectPoints pts = ObjectPoints::from_points(scene.object_points(0), 0.4);
  const auto [face, normal] = synth::camera_facing_face(b);
  EXPECT_NEAR(face.y(), 9.1, 1e-12);
  LossConfig no_ray;
  no_ray.w_ray = 0;
  const auto off = synth::compare_face_basins(synth::grid_oracle(pts, b, no_ray, face), face, normal);
  EXPECT_LT(off.gap, 0.05);
  const auto on = synth::compare_face_basins(synth::grid_oracle(pts, b, LossConfig{}, face), face, normal);
  EXPECT_GT(on.gap, 0.25);
  EXPECT_LT(on.far_min, on.near_min);
  EXPECT_LT((on.far_arg - b.bev_center()).norm(), 0.1);
}

TEST(RasterOracle, Cases) {
  const BevRectd a{{0, 0}, 2, 0.9, 0.3};
  EXPECT_EQ(synth::rasterized_iou_oracle(a, a, 0.005), 1.0);
  EXPECT_EQ(synth::rasterized_iou_oracle(a, BevRectd{{10, 0}, 2, 0.9, 0}, 0.005), 0.0);
  const BevRectd sq{{0, 0}, 1, 1, 0}, turned{{0, 0}, 1, 1, kPi / 4};
  EXPECT_NEAR(synth::rasterized_iou_oracle(sq, turned, 0.001), bev_iou(sq, turned), 1e-3);
}

TEST(Families, SingleFaceCars) {
  const synth::SceneFamily fam;
  for (std::uint64_t s = 0; s < 20; ++s) {
    for (bool width_face : {true, false}) {
      const auto spec = synth::random_single_face_car(fam, width_face, s);
      const auto scene = synth::generate_scene(spec, s);
      const auto faces = scene.face_counts(0);
      int visible = 0;
      for (int c : faces) visible += c > 0;
      EXPECT_EQ(visible, 1);
      const int face = width_face ? std::max(faces[0], faces[1]) : std::max(faces[2], faces[3]);
      EXPECT_GT(face, 0);
    }
  }
}

TEST(Dataset, SpecRoundTripAndExportDeterminism) {
  const auto spec = synth::parse_dataset_spec("frames = 3\nseed = 11\nbox = 1,1.65,15,1.6,1.8,4,0.2\n");
  EXPECT_EQ(spec.frames, 3);
  const auto again = synth::parse_dataset_spec(synth::format_dataset_spec(spec));
  EXPECT_EQ(synth::format_dataset_spec(again), synth::format_dataset_spec(spec));
  EXPECT_THROW(synth::parse_dataset_spec("bogus = 1\n"), std::exception);

  const fs::path root = fs::temp_directory_path() / "weakbox3d_synth_export";
  fs::remove_all(root);
  const auto ids = synth::export_dataset(spec, root / "a");
  synth::export_dataset(spec, root / "b");
  ASSERT_EQ(ids.size(), 4u);  // three random frames plus the explicit boxes
  for (const auto& id : ids) {
    for (const std::string sub : {"velodyne/" + id + ".bin", "calib/" + id + ".txt", "label_2/" + id + ".txt"}) {
      ASSERT_TRUE(fs::exists(root / "a" / sub)) << sub;
      EXPECT_EQ(bytes_of(root / "a" / sub), bytes_of(root / "b" / sub)) << sub;
    }
  }
  EXPECT_EQ(bytes_of(root / "a/detections.csv"), bytes_of(root / "b/detections.csv"));
}
