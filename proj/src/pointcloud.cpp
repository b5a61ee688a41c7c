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

#include "weakbox3d/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "weakbox3d/errors.hpp"
#include "weakbox3d/random.hpp"

namespace weakbox3d {

bool CameraModel::valid() const {
  if (!(fx > 0 && fy > 0) || !extrinsic.allFinite()) return false;
  const Eigen::Matrix3d r = extrinsic.topLeftCorner<3, 3>();
  return (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-6;
}

ObjectPoints ObjectPoints::from_points(std::vector<Vec3d> pts, double radius) {
  ObjectPoints out;
  out.pts3d = std::move(pts);
  out.bev.reserve(out.pts3d.size());
  double sum_y = 0;
  double min_x = std::numeric_limits<double>::infinity();
  double max_x = -min_x;
  for (const auto& p : out.pts3d) {
    out.bev.push_back(bev_of(p));
    sum_y += p.y();
    min_x = std::min(min_x, p.x());
    max_x = std::max(max_x, p.x());
  }
  out.density = bev_density(out.bev, radius);
  if (!out.pts3d.empty()) {
    out.y_l = sum_y / static_cast<double>(out.pts3d.size());
    out.d_x = max_x - min_x;
  }
  return out;
}

Vec3d to_camera(const Eigen::Matrix4d& extrinsic, const LidarPoint& p) {
  const Eigen::Vector4d h(p.x, p.y, p.z, 1.0);
  return (extrinsic * h).head<3>();
}

std::vector<Vec3d> transform_to_camera(const RawScan& scan, const CameraModel& cam,
                                       double min_depth) {
  std::vector<Vec3d> out;
  out.reserve(scan.points.size());
  for (const auto& p : scan.points) {
    const Vec3d c = to_camera(cam.extrinsic, p);
    if (c.z() > min_depth) out.push_back(c);
  }
  return out;
}

Vec2d project_to_image(const Vec3d& p, const CameraModel& cam) {
  if (!(p.z() > 0)) throw std::invalid_argument("project_to_image: point behind camera");
  return {cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy};
}

namespace {

GroundPlane plane_through(const Vec3d& p0, const Vec3d& p1, const Vec3d& p2) {
  Vec3d n = (p1 - p0).cross(p2 - p0);
  const double norm = n.norm();
  if (!(norm > 1e-9)) return {Vec3d::Zero(), 0, 0};
  n /= norm;
  return {n, -n.dot(p0), 0};
}

std::size_t count_inliers(std::span<const Vec3d> points, const GroundPlane& plane, double thr) {
  std::size_t n = 0;
  for (const auto& p : points) {
    if (std::abs(plane.height_of(p)) < thr) ++n;
  }
  return n;
}

}  // namespace

GroundPlane fit_ground_plane(std::span<const Vec3d> points, const ExtractConfig& cfg,
                             std::uint64_t seed) {
  if (points.size() < 50) throw std::invalid_argument("fit_ground_plane: fewer than 50 points");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);

  GroundPlane best;
  std::size_t best_count = 0;
  for (int it = 0; it < cfg.ransac_iters; ++it) {
    const std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    std::size_t k = pick(rng);
    if (i == j || j == k || i == k) continue;
    const GroundPlane h = plane_through(points[i], points[j], points[k]);
    if (h.normal.isZero()) continue;
    const std::size_t c = count_inliers(points, h, cfg.ransac_threshold);
    if (c > best_count) {
      best_count = c;
      best = h;
    }
  }
  const double ratio = static_cast<double>(best_count) / static_cast<double>(points.size());
  if (ratio < cfg.min_inlier_ratio) {
    throw std::runtime_error("fit_ground_plane: no dominant plane");
  }

  Vec3d centroid = Vec3d::Zero();
  std::vector<const Vec3d*> inliers;
  inliers.reserve(best_count);
  for (const auto& p : points) {
    if (std::abs(best.height_of(p)) < cfg.ransac_threshold) {
      inliers.push_back(&p);
      centroid += p;
    }
  }
  centroid /= static_cast<double>(inliers.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const Vec3d* p : inliers) {
    const Vec3d d = *p - centroid;
    cov += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  Vec3d n = es.eigenvectors().col(0).normalized();
  if (n.y() > 0) n = -n;

  GroundPlane refit{n, -n.dot(centroid), 0};
  refit.inlier_ratio = static_cast<double>(count_inliers(points, refit, cfg.ransac_threshold)) /
                       static_cast<double>(points.size());
  return refit;
}

std::vector<Vec3d> remove_ground(std::span<const Vec3d> points, const GroundPlane& plane,
                                 double threshold) {
  std::vector<Vec3d> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (plane.height_of(p) > threshold) out.push_back(p);
  }
  return out;
}

BBox2D clamp_to_image(const BBox2D& box, const CameraModel& cam) {
  const double w = cam.width, h = cam.height;
  return {std::clamp(box.x1, 0.0, w), std::clamp(box.y1, 0.0, h), std::clamp(box.x2, 0.0, w),
          std::clamp(box.y2, 0.0, h)};
}

std::vector<Vec3d> select_frustum(std::span<const Vec3d> points, const Detection2D& det,
                                  const CameraModel& cam) {
  std::vector<Vec3d> out;
  for (const auto& p : points) {
    if (!(p.z() > 0)) continue;
    const Vec2d uv = project_to_image(p, cam);
    bool keep = false;
    if (det.mask) {
      keep = det.mask->at(static_cast<int>(std::floor(uv.x())), static_cast<int>(std::floor(uv.y())));
    } else {
      keep = det.bbox.contains(uv.x(), uv.y());
    }
    if (keep) out.push_back(p);
  }
  return out;
}

std::vector<int> dbscan(std::span<const Vec3d> points, double eps, int min_pts) {
  const std::size_t n = points.size();
  const double eps2 = eps * eps;
  std::vector<std::vector<std::size_t>> neighbours(n);
  for (std::size_t i = 0; i < n; ++i) {
    neighbours[i].push_back(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      if ((points[i] - points[j]).squaredNorm() <= eps2) {
        neighbours[i].push_back(j);
        neighbours[j].push_back(i);
      }
    }
  }
  const auto is_core = [&](std::size_t i) {
    return static_cast<int>(neighbours[i].size()) >= min_pts;
  };

  constexpr int kUnvisited = -2;
  std::vector<int> label(n, kUnvisited);
  int next_id = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] != kUnvisited) continue;
    if (!is_core(i)) {
      label[i] = kNoise;
      continue;
    }
    const int id = next_id++;
    label[i] = id;
    std::deque<std::size_t> frontier(neighbours[i].begin(), neighbours[i].end());
    while (!frontier.empty()) {
      const std::size_t q = frontier.front();
      frontier.pop_front();
      if (label[q] == kNoise) label[q] = id;  // border point
      if (label[q] != kUnvisited) continue;
      label[q] = id;
      if (is_core(q)) {
        for (std::size_t r : neighbours[q]) {
          if (label[r] == kUnvisited || label[r] == kNoise) frontier.push_back(r);
        }
      }
    }
  }
  return label;
}

std::vector<Vec3d> cluster_select(std::span<const Vec3d> points, const ExtractConfig& cfg) {
  if (points.empty()) throw SkipError(SkipReason::kEmptyFrustum, "no points in frustum");
  const std::vector<int> labels = dbscan(points, cfg.dbscan_eps, cfg.dbscan_min_pts);
  const int n_clusters = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  if (n_clusters == 0) throw SkipError(SkipReason::kAllNoise, "all frustum points are noise");

  std::vector<std::size_t> sizes(static_cast<std::size_t>(n_clusters), 0);
  for (int l : labels) {
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
  }
  const auto best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  if (static_cast<int>(sizes[static_cast<std::size_t>(best)]) < cfg.min_object_points) {
    throw SkipError(SkipReason::kTooFewPoints, "largest cluster below min_object_points");
  }
  std::vector<Vec3d> out;
  out.reserve(sizes[static_cast<std::size_t>(best)]);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels[i] == best) out.push_back(points[i]);
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

ObjectPoints finalize_object_points(std::span<const Vec3d> cluster, const ExtractConfig& cfg,
                                    std::uint64_t seed) {
  if (cluster.empty()) throw SkipError(SkipReason::kTooFewPoints, "empty cluster");
  std::vector<double> ys;
  ys.reserve(cluster.size());
  for (const auto& p : cluster) ys.push_back(p.y());
  const double med = median(ys);

  std::vector<Vec3d> upper;
  upper.reserve(cluster.size());
  for (const auto& p : cluster) {
    if (p.y() <= med) upper.push_back(p);
  }

  std::vector<Vec3d> sampled;
  const auto n_sample = static_cast<std::size_t>(std::max(cfg.n_sample, 0));
  if (n_sample == 0) {
    sampled = std::move(upper);
  } else {
    Rng rng(seed);
    sampled.reserve(n_sample);
    if (upper.size() >= n_sample) {
      // partial Fisher-Yates: first n_sample slots are a uniform draw without replacement
      std::vector<std::size_t> idx(upper.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t i = 0; i < n_sample; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
        sampled.push_back(upper[idx[i]]);
      }
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, upper.size() - 1);
      for (std::size_t i = 0; i < n_sample; ++i) sampled.push_back(upper[pick(rng)]);
    }
  }
  return ObjectPoints::from_points(std::move(sampled), cfg.density_radius);
}

std::vector<int> bev_density(std::span<const Vec2d> bev, double radius) {
  const double r2 = radius * radius;
  std::vector<int> e(bev.size(), 1);
  for (std::size_t i = 0; i < bev.size(); ++i) {
    for (std::size_t j = i + 1; j < bev.size(); ++j) {
      if ((bev[i] - bev[j]).squaredNorm() < r2) {
        ++e[i];
        ++e[j];
      }
    }
  }
  return e;
}

}  // namespace weakbox3d
