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

#include "weakbox3d/orientation.hpp"

#include <cmath>
#include <stdexcept>

namespace weakbox3d {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kDegeneratePair = 1e-6;
}  // namespace

double pair_direction(const Vec2d& a, const Vec2d& b) {
  const Vec2d d = b - a;
  return fold_to_half_turn(std::atan2(-d.y(), d.x()));
}

DirectionHistogram pairwise_direction_histogram(const ObjectPoints& pts, double bin_width) {
  if (!(bin_width > 0)) throw std::invalid_argument("histogram bin width must be positive");
  DirectionHistogram h;
  h.bin_width = bin_width;
  const auto n_bins = static_cast<std::size_t>(std::ceil(kPi / bin_width - 1e-9));
  h.counts.assign(n_bins, 0);

  long long used = 0;
  const std::size_t m = pts.bev.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if ((pts.bev[j] - pts.bev[i]).norm() <= kDegeneratePair) continue;
      const double a = pair_direction(pts.bev[i], pts.bev[j]);
      auto bin = static_cast<std::size_t>(a / bin_width);
      if (bin >= n_bins) bin = n_bins - 1;
      ++h.counts[bin];
      ++used;
    }
  }
  if (used == 0) throw std::invalid_argument("all point pairs are degenerate");

  std::size_t best = 0;
  for (std::size_t b = 1; b < n_bins; ++b) {
    if (h.counts[b] > h.counts[best]) best = b;
  }
  h.mode_bin = best;
  h.mode_angle = std::min(0.5 * (h.bin_lower(best) + h.bin_upper(best)), kPi * (1 - 1e-15));
  return h;
}

double normalize_mode_angle(double alpha) {
  while (alpha <= kPi / 4) alpha += kPi / 2;
  while (alpha > 3 * kPi / 4) alpha -= kPi / 2;
  return alpha;
}

double orientation_rule(double alpha, double d_x, double offset_threshold) {
  const double a = normalize_mode_angle(alpha);
  double theta = a;
  if (d_x > offset_threshold) theta = a >= kPi / 2 ? a - kPi / 2 : a + kPi / 2;
  return fold_to_half_turn(theta);
}

OrientationEstimate estimate_orientation(const ObjectPoints& pts, double offset_threshold,
                                         double bin_width) {
  const DirectionHistogram h = pairwise_direction_histogram(pts, bin_width);
  OrientationEstimate est;
  est.alpha_y = normalize_mode_angle(h.mode_angle);
  est.d_x = pts.d_x;
  est.theta_y = orientation_rule(h.mode_angle, pts.d_x, offset_threshold);
  Vec2d centroid = Vec2d::Zero();
  for (const auto& p : pts.bev) centroid += p;
  centroid /= static_cast<double>(pts.bev.size());
  est.delta_y = global_to_local(est.theta_y, centroid);
  return est;
}

double local_to_global(double delta_y, const Vec2d& center) {
  return wrap_angle(delta_y + std::atan2(center.x(), center.y()));
}

double global_to_local(double theta_y, const Vec2d& center) {
  return wrap_angle(theta_y - std::atan2(center.x(), center.y()));
}

}  // namespace weakbox3d
