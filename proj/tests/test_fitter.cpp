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
#include <limits>

#include <gtest/gtest.h>

#include "weakbox3d/errors.hpp"
#include "weakbox3d/fitter.hpp"
#include "weakbox3d/synth.hpp"

using namespace weakbox3d;

namespace {

constexpr double kPi = 3.14159265358979323846;

Box3D car(double x, double z, double theta) { return Box3D{Vec3d(x, 1.65, z), 1.6, 1.8, 4.0, theta}; }

synth::SynthScene single(const Box3D& box, std::uint64_t seed, double noise = 0.02) {
  synth::SceneSpec spec;
  spec.boxes = {box};
  spec.with_ground = false;
  spec.noise_sigma = noise;
  return synth::generate_scene(spec, seed);
}

Detection2D gt_detection(const Box3D& box, const CameraModel& cam, const std::string& cls = "Car") {
  Detection2D d;
  d.cls = cls;
  d.score = 0.9;
  d.bbox = synth::project_box(box, cam);
  return d;
}

// Brute-force (x, z) grid over the balancing loss with fixed footprint size and yaw.
Vec2d grid_argmin(const ObjectPoints& pts, const BevRectd& like, const Vec2d& c, double half, double step,
                  const LossConfig& cfg) {
  Vec2d best = c;
  double best_v = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(std::round(half / step));
  for (int i = -n; i <= n; ++i) {
    for (int j = -n; j <= n; ++j) {
      BevRectd r = like;
      r.center = c + step * Vec2d(i, j);
      const double v = balanced_loss_value(pts, r, cfg);
      if (v < best_v) {
        best_v = v;
        best = r.center;
      }
    }
  }
  return best;
}

}  // namespace

TEST(FitObject, TwoFaceSyntheticCar) {
  const Box3D gt = car(1.5, 12, 0.3);
  const auto scene = single(gt, 21);
  const ObjectPoints pts = finalize_object_points(scene.object_points(0), ExtractConfig{}, 3);
  const FitConfig cfg;
  const FitResult r = fit_object(pts, gt_detection(gt, scene.cam), scene.cam, cfg);
  EXPECT_GE(bev_iou(r.box, gt), 0.7);
  // frozen quantities are bit-identical
  EXPECT_EQ(r.box.h, 1.6);
  EXPECT_EQ(r.box.w, 1.8);
  EXPECT_EQ(r.box.l, 4.0);
  EXPECT_EQ(r.box.theta_y, r.orientation.theta_y);
  EXPECT_EQ(r.score, 0.9);

  const Vec2d argmin = grid_argmin(pts, bev_rect_of(r.box), gt.bev_center(), 2.0, 0.05, cfg.loss);
  EXPECT_LT((argmin - gt.bev_center()).norm(), 0.3);
  EXPECT_LT((argmin - r.box.bev_center()).norm(), 0.1);
}

TEST(FitObject, AllEdgesExactCenter) {
  const Box3D gt = car(-2, 15, 0.8);
  std::vector<Vec3d> pts3 = synth::edge_points(gt, 25);
  const ObjectPoints pts = ObjectPoints::from_points(pts3, 0.4);
  const FitConfig cfg;
  BevRectd rect = bev_rect_of(gt);
  rect.center = gt.bev_center() + Vec2d(0.6, -0.4);
  const DescentResult d = minimize_center(pts, rect, cfg.loss, cfg.optimizer);
  EXPECT_LT((d.center - gt.bev_center()).norm(), 1e-3);
}

TEST(FitObject, NeverWorseThanAnyInit) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto spec = synth::random_single_car(synth::SceneFamily{}, s);
    const auto scene = synth::generate_scene(spec, s);
    const auto obj = scene.object_points(0);
    if (obj.size() < 20) continue;
    const ObjectPoints pts = finalize_object_points(obj, ExtractConfig{}, s);
    FitConfig cfg;
    cfg.adjust_y = false;
    const FitResult r = fit_object(pts, gt_detection(scene.gt_boxes[0], scene.cam), scene.cam, cfg);
    const double final_loss = balanced_loss_value(pts, bev_rect_of(r.box), cfg.loss);
    for (const Vec2d& init : initial_centers(pts, cfg.class_dims.at("Car"), cfg)) {
      BevRectd rect = bev_rect_of(r.box);
      rect.center = init;
      EXPECT_LE(final_loss, balanced_loss_value(pts, rect, cfg.loss) + 1e-12);
    }
    EXPECT_DOUBLE_EQ(r.box.center_y(), pts.y_l);
  }
}

TEST(FitObject, CenterOnlyPulledTowardFace) {
  // one visible face: the length face of a car seen broadside at z = 10
  const Box3D gt = car(0, 10, 0);
  const auto scene = single(gt, 5, 0);
  const ObjectPoints pts = finalize_object_points(scene.object_points(0), ExtractConfig{}, 1);
  FitConfig full;
  full.adjust_y = false;
  FitConfig naive = full;
  naive.loss.center_only = true;
  const Detection2D det = gt_detection(gt, scene.cam);
  const FitResult a = fit_object(pts, det, scene.cam, full);
  const FitResult b = fit_object(pts, det, scene.cam, naive);
  // visible face at z = 9.1: the naive center is nearer to the camera
  EXPECT_GT(a.box.location.z() - b.box.location.z(), 0.5);
  EXPECT_LT(std::abs(a.box.location.z() - gt.location.z()), 0.15);
}

TEST(FitObject, SkipReasons) {
  const Box3D gt = car(1, 14, 0.2);
  const auto scene = single(gt, 2);
  const ObjectPoints pts = finalize_object_points(scene.object_points(0), ExtractConfig{}, 1);
  try {
    fit_object(pts, gt_detection(gt, scene.cam, "Van"), scene.cam, FitConfig{});
    FAIL();
  } catch (const SkipError& e) {
    EXPECT_EQ(e.reason(), SkipReason::kNoDims);
    EXPECT_EQ(std::string(to_string(e.reason())), "no-dims");
  }
  const ObjectPoints one = ObjectPoints::from_points({{0, 0.8, 10}}, 0.4);
  EXPECT_THROW(fit_object(one, gt_detection(gt, scene.cam), scene.cam, FitConfig{}), SkipError);
}

TEST(FitObject, PedestrianDims) {
  const auto dims = default_class_dims();
  EXPECT_EQ(dims.at("Pedestrian").h, 1.75);
  EXPECT_EQ(dims.at("Pedestrian").w, 0.6);
  EXPECT_EQ(dims.at("Pedestrian").l, 0.8);
  EXPECT_EQ(dims.at("Cyclist").l, 1.8);
  EXPECT_EQ(dims.at("Car").l, 4.0);
}

TEST(AdjustY, FixedPointShiftAndIdempotence) {
  CameraModel cam;
  cam.fx = cam.fy = 700;
  cam.cx = 600;
  cam.cy = 180;
  cam.width = 2000;
  cam.height = 1000;
  // facing the camera squarely: near and far faces project to different spans
  const Box3D box{Vec3d(0, 1.65, 10), 1.6, 1.8, 4.0, kPi / 2};
  Detection2D det;
  det.bbox = synth::project_box(box, cam);
  EXPECT_NEAR(adjust_y_2d3d(box, det, cam).location.y(), box.location.y(), 1e-9);

  // a thin box at z = 10 so the pinhole shift is 10 z / f
  const Box3D thin{Vec3d(0, 1.65, 10), 1.6, 1e-4, 1e-4, 0};
  Detection2D shifted;
  shifted.bbox = synth::project_box(thin, cam);
  shifted.bbox.y1 += 10;
  shifted.bbox.y2 += 10;
  const Box3D moved = adjust_y_2d3d(thin, shifted, cam);
  EXPECT_NEAR(moved.location.y() - thin.location.y(), 10.0 * 10 / 700, 1e-4);
  EXPECT_NEAR(adjust_y_2d3d(moved, shifted, cam).location.y(), moved.location.y(), 1e-9);
  EXPECT_EQ(moved.location.x(), thin.location.x());
  EXPECT_EQ(moved.location.z(), thin.location.z());
}

TEST(FitFrame, EmptyAndMixed) {
  synth::SceneSpec spec;
  spec.boxes = {car(-4, 12, 0.2), car(3, 16, 1.4), car(-1, 25, -0.5)};
  const auto scene = synth::generate_scene(spec, 8);
  FrameInput in;
  in.frame_id = "000042";
  in.points = scene.points;
  in.cam = scene.cam;
  EXPECT_TRUE(fit_frame(in, ExtractConfig{}, FitConfig{}, 1).objects.empty());

  in.detections = synth::detections_for(scene, in.frame_id);
  Detection2D empty;
  empty.cls = "Car";
  empty.bbox = {5, 5, 30, 30};  // sky corner: no points
  in.detections.push_back(empty);
  const FrameResult a = fit_frame(in, ExtractConfig{}, FitConfig{}, 1);
  ASSERT_EQ(a.objects.size(), 4u);
  int fitted = 0;
  for (const auto& o : a.objects) fitted += o.fit.has_value();
  EXPECT_EQ(fitted, 3);
  ASSERT_TRUE(a.objects[3].skip.has_value());
  EXPECT_EQ(*a.objects[3].skip, SkipReason::kEmptyFrustum);

  const FrameResult b = fit_frame(in, ExtractConfig{}, FitConfig{}, 1);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.objects[i].fit->box.location, b.objects[i].fit->box.location);
    EXPECT_EQ(a.objects[i].points->pts3d, b.objects[i].points->pts3d);
  }
}

TEST(FitFrame, PointsInsideSourceBox) {
  synth::SceneSpec spec;
  spec.boxes = {car(-4, 12, 0.2), car(3, 16, 1.4)};
  const auto scene = synth::generate_scene(spec, 9);
  FrameInput in{"7", scene.points, scene.cam, synth::detections_for(scene, "7")};
  const FrameResult r = extract_frame(in, ExtractConfig{}, 3);
  for (const auto& o : r.objects) {
    ASSERT_TRUE(o.points.has_value());
    const BBox2D& b = in.detections[o.det_index].bbox;
    for (const auto& p : o.points->pts3d) {
      const Vec2d uv = project_to_image(p, in.cam);
      EXPECT_TRUE(b.contains(uv.x(), uv.y()));
    }
  }
}

TEST(FrameSeed, DependsOnFrame) {
  EXPECT_EQ(frame_seed(1, "000001"), frame_seed(1, "000001"));
  EXPECT_NE(frame_seed(1, "000001"), frame_seed(1, "000002"));
  EXPECT_NE(frame_seed(1, "000001"), frame_seed(2, "000001"));
}
