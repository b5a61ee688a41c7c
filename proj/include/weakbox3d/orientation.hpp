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

#include <numbers>
#include <vector>

#include "weakbox3d/geom.hpp"
#include "weakbox3d/pointcloud.hpp"

namespace weakbox3d {

inline constexpr double kDefaultBinWidth = std::numbers::pi / 90.0;
inline constexpr double kDefaultOffsetThreshold = 3.0;

/// Histogram of undirected pair directions over [0, pi). Directions use the
/// yaw convention of BevRect: angle phi is the BEV line (cos phi, -sin phi).
struct DirectionHistogram {
  double bin_width = kDefaultBinWidth;
  std::vector<int> counts;
  double mode_angle = 0;
  std::size_t mode_bin = 0;

  double bin_lower(std::size_t b) const { return static_cast<double>(b) * bin_width; }
  double bin_upper(std::size_t b) const { return static_cast<double>(b + 1) * bin_width; }
};

struct OrientationEstimate {
  double theta_y = 0;   // global yaw in [0, pi)
  double alpha_y = 0;   // histogram mode normalised into (pi/4, 3pi/4]
  double d_x = 0;
  double delta_y = 0;   // observation angle for the points' centroid
};

/// Pair direction in [0, pi) under the BevRect yaw convention.
double pair_direction(const Vec2d& a, const Vec2d& b);

/// Throws std::invalid_argument when every pair is degenerate.
DirectionHistogram pairwise_direction_histogram(const ObjectPoints& pts,
                                                double bin_width = kDefaultBinWidth);

/// Moves an angle into (pi/4, 3pi/4] by adding or subtracting pi/2.
double normalize_mode_angle(double alpha);

/// Picks between the normalised mode and its perpendicular from the x-extent.
double orientation_rule(double alpha, double d_x, double offset_threshold);

OrientationEstimate estimate_orientation(const ObjectPoints& pts,
                                         double offset_threshold = kDefaultOffsetThreshold,
                                         double bin_width = kDefaultBinWidth);

/// theta_y = delta_y + atan2(x, z), wrapped into [-pi, pi).
double local_to_global(double delta_y, const Vec2d& center);
double global_to_local(double theta_y, const Vec2d& center);

}  // namespace weakbox3d
