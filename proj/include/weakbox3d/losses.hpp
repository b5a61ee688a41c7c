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

#include <vector>

#include "weakbox3d/geom.hpp"
#include "weakbox3d/pointcloud.hpp"

namespace weakbox3d {

/// Box center parameterized by its image projection and instance depth.
struct CenterParam {
  double t_x = 0;
  double t_y = 0;
  double z = 1;
};

struct LossConfig {
  double density_radius = 0.4;
  double lambda = 0.1;
  double w_geom = 1.0;
  double w_ray = 1.0;
  double smooth_l1_beta = 1.0;
  bool use_balancing = true;
  // Only the L1 center term (unit weight), for the naive-baseline comparison.
  bool center_only = false;
  double h_fd = 1e-3;
  Vec2d camera_origin = Vec2d::Zero();
};

/// Points closer than this to the box center have no defined ray.
inline constexpr double kCenterEpsilon = 1e-6;

Vec3d lift_center(const CenterParam& c, const CameraModel& cam);

/// Per-point terms of one object point against one BEV rectangle.
struct PointTerms {
  double geometry = 0;
  double ray_tracing = 0;
  double center = 0;
};

PointTerms point_terms(const Vec2d& p, const BevRectd& rect, const Vec2d& camera_origin);

std::vector<double> center_loss(const ObjectPoints& pts, const Box3D& box);
std::vector<double> geometric_alignment_loss(const ObjectPoints& pts, const Box3D& box);
std::vector<double> ray_tracing_loss(const ObjectPoints& pts, const Box3D& box,
                                     const Vec2d& camera_origin = Vec2d::Zero());

/// Weighted per-point sum before density normalisation.
double combined_point_loss(const PointTerms& t, const LossConfig& cfg);

struct BalancedLoss {
  double value = 0;
  // combined_i / E_i, before the 1/M average
  std::vector<double> weighted;
  // Sum of `weighted`, accumulated per density value so a coincident
  // k-cluster contributes (k * l) / k, which is exactly l.
  double weighted_sum = 0;
};

BalancedLoss balanced_loss(const ObjectPoints& pts, const Box3D& box, const LossConfig& cfg);

/// L_balancing for the footprint `rect`; the allocation-free path used by the
/// optimizer and the grid oracle.
double balanced_loss_value(const ObjectPoints& pts, const BevRectd& rect, const LossConfig& cfg);

/// Closed-form gradient of L_balancing with respect to the BEV center.
Vec2d balanced_loss_gradient(const ObjectPoints& pts, const BevRectd& rect, const LossConfig& cfg);

/// Central-difference gradient of L_balancing with respect to the BEV center.
Vec2d balanced_loss_gradient_fd(const ObjectPoints& pts, const BevRectd& rect,
                                const LossConfig& cfg, double h);

double smooth_l1(double d, double beta);

/// SmoothL1 between the box's geometric-center y and the points' mean y.
double loc_y_loss(const ObjectPoints& pts, const Box3D& box, const LossConfig& cfg);

/// 1 - cos(2 (theta - target)); zero at equality modulo pi.
double orient_loss(double theta, double target);

struct LossReport {
  double geometry = 0;
  double ray_tracing = 0;
  double center = 0;
  double balancing = 0;
  double loc_y = 0;
  double orient = 0;
  double total = 0;
  double grad_x = 0;
  double grad_z = 0;
};

/// All loss terms at `box`; `orient_target` defaults to the box's own yaw
/// (orientation frozen to its estimate).
LossReport total_loss(const ObjectPoints& pts, const Box3D& box, const LossConfig& cfg);
LossReport total_loss(const ObjectPoints& pts, const Box3D& box, const LossConfig& cfg,
                      double orient_target);

/// Per-point discrete state (hit faces, inside/outside, L1 signs). The loss is
/// smooth in the box center wherever no signature changes.
struct PointSignature {
  int geom_face = -1;
  int geom_side = 0;
  int ray_face = -1;
  int ray_side = 0;
  int sign_x = 0;
  int sign_z = 0;

  bool operator==(const PointSignature&) const = default;
};

std::vector<PointSignature> point_signatures(const ObjectPoints& pts, const BevRectd& rect,
                                             const Vec2d& camera_origin);

/// True when no point's signature changes at center offsets of +-radius
/// (axes and diagonals).
bool assignment_stable(const ObjectPoints& pts, const BevRectd& rect, const Vec2d& camera_origin,
                       double radius);

}  // namespace weakbox3d
