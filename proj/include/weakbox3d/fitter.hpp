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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "weakbox3d/errors.hpp"
#include "weakbox3d/geom.hpp"
#include "weakbox3d/losses.hpp"
#include "weakbox3d/orientation.hpp"
#include "weakbox3d/pointcloud.hpp"

namespace weakbox3d {

struct ClassDims {
  double h = 1.6;
  double w = 1.8;
  double l = 4.0;
};

std::map<std::string, ClassDims> default_class_dims();

struct OptimizerConfig {
  double step_size = 0.5;  // meters
  int max_iters = 500;
  double plateau_tol = 1e-7;
  int plateau_iters = 10;
};

enum class InitStrategy { kCentroid, kPushHalfWidth, kPushHalfLength };

struct FitConfig {
  std::map<std::string, ClassDims> class_dims = default_class_dims();
  LossConfig loss;
  double offset_threshold = kDefaultOffsetThreshold;
  double bin_width = kDefaultBinWidth;
  OptimizerConfig optimizer;
  std::vector<InitStrategy> multistart = {InitStrategy::kCentroid, InitStrategy::kPushHalfWidth,
                                          InitStrategy::kPushHalfLength};
  bool adjust_y = true;
};

struct FitResult {
  Box3D box;
  LossReport loss_report;
  OrientationEstimate orientation;
  double y_from_points = 0;  // geometric-center y before any 2D-3D adjustment
  bool converged = false;
  int iters = 0;
  double score = 0;
};

struct DescentResult {
  Vec2d center = Vec2d::Zero();
  double loss = 0;
  int iters = 0;
  bool converged = false;
};

/// Normalised-gradient descent on L_balancing over the footprint center with
/// step halving on non-decrease.
DescentResult minimize_center(const ObjectPoints& pts, BevRectd rect, const LossConfig& loss,
                              const OptimizerConfig& opt);

/// Starting BEV centers, in `cfg.multistart` order.
std::vector<Vec2d> initial_centers(const ObjectPoints& pts, const ClassDims& dims,
                                   const FitConfig& cfg);

/// Throws SkipError (kTooFewPoints, kNoDims, kDegenerateOrientation).
FitResult fit_object(const ObjectPoints& pts, const Detection2D& det, const CameraModel& cam,
                     const FitConfig& cfg);

/// Shifts box.y so the projected corners' vertical span best matches the bbox.
Box3D adjust_y_2d3d(const Box3D& box, const Detection2D& det, const CameraModel& cam);

struct FrameInput {
  std::string frame_id;
  std::vector<Vec3d> points;  // camera frame
  CameraModel cam;
  std::vector<Detection2D> detections;
};

struct ObjectOutcome {
  std::size_t det_index = 0;
  std::optional<ObjectPoints> points;
  std::optional<FitResult> fit;
  std::optional<SkipReason> skip;
  std::string detail;
};

struct FrameResult {
  std::string frame_id;
  std::optional<GroundPlane> ground;
  bool ground_fallback = false;
  std::vector<ObjectOutcome> objects;
};

std::uint64_t frame_seed(std::uint64_t seed, const std::string& frame_id);

/// Ground removal, frustum selection, clustering and sampling per detection.
FrameResult extract_frame(const FrameInput& in, const ExtractConfig& cfg, std::uint64_t seed);

/// extract_frame followed by fit_object per extracted object.
FrameResult fit_frame(const FrameInput& in, const ExtractConfig& extract, const FitConfig& fit,
                      std::uint64_t seed);

/// Fits already-extracted objects; `objects` entries without points keep their skip.
void fit_extracted(FrameResult& frame, const FrameInput& in, const FitConfig& fit);

}  // namespace weakbox3d
