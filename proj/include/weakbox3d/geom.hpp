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

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace weakbox3d {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;

/// Bird's-eye-view coordinates are (x, z) of the rectified camera frame.
template <typename Scalar>
Vec2<Scalar> bev_of(const Vec3<Scalar>& p) {
  return {p.x(), p.z()};
}

/// Wraps an angle into [-pi, pi).
template <typename Scalar>
Scalar wrap_angle(Scalar a) {
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar two_pi = 2 * pi;
  a = std::fmod(a + pi, two_pi);
  if (a < 0) a += two_pi;
  if (a >= two_pi) a -= two_pi;
  return a - pi;
}

/// Folds an angle into [0, pi), i.e. an undirected line direction.
template <typename Scalar>
Scalar fold_to_half_turn(Scalar a) {
  const Scalar pi = std::numbers::pi_v<Scalar>;
  a = std::fmod(a, pi);
  if (a < 0) a += pi;
  if (a >= pi) a -= pi;
  return a;
}

/// Oriented 3D box in the rectified camera frame. `location` is the
/// bottom-face center (camera y points down), `theta_y` the yaw about the
/// camera y axis in the KITTI convention.
template <typename Scalar>
struct Box3 {
  Vec3<Scalar> location = Vec3<Scalar>::Zero();
  Scalar h = 1;
  Scalar w = 1;
  Scalar l = 1;
  Scalar theta_y = 0;

  Vec2<Scalar> bev_center() const { return {location.x(), location.z()}; }
  Scalar center_y() const { return location.y() - h / 2; }
  Scalar top_y() const { return location.y() - h; }
  Scalar volume() const { return h * w * l; }

  bool valid() const {
    return location.allFinite() && std::isfinite(theta_y) && h > 0 && w > 0 && l > 0;
  }

  /// The 8 corners: bottom face first (counter-clockwise in BEV), then top.
  std::array<Vec3<Scalar>, 8> corners() const;
};

using Box3D = Box3<double>;

/// BEV footprint of a box. The local length axis maps to (cos theta, -sin theta)
/// and the width axis to (sin theta, cos theta).
template <typename Scalar>
struct BevRect {
  Vec2<Scalar> center = Vec2<Scalar>::Zero();
  Scalar half_l = Scalar(0.5);
  Scalar half_w = Scalar(0.5);
  Scalar theta = 0;

  Vec2<Scalar> length_axis() const { return {std::cos(theta), -std::sin(theta)}; }
  Vec2<Scalar> width_axis() const { return {std::sin(theta), std::cos(theta)}; }

  Vec2<Scalar> to_local(const Vec2<Scalar>& p) const {
    const Vec2<Scalar> d = p - center;
    return {length_axis().dot(d), width_axis().dot(d)};
  }

  Vec2<Scalar> to_world(const Vec2<Scalar>& q) const {
    return center + q.x() * length_axis() + q.y() * width_axis();
  }

  /// Counter-clockwise in (x, z).
  std::array<Vec2<Scalar>, 4> corners() const {
    return {to_world({half_l, half_w}), to_world({-half_l, half_w}),
            to_world({-half_l, -half_w}), to_world({half_l, -half_w})};
  }

  bool contains(const Vec2<Scalar>& p, Scalar tol = 0) const {
    const Vec2<Scalar> q = to_local(p);
    return std::abs(q.x()) <= half_l + tol && std::abs(q.y()) <= half_w + tol;
  }

  Scalar area() const { return 4 * half_l * half_w; }
};

using BevRectd = BevRect<double>;

template <typename Scalar>
BevRect<Scalar> bev_rect_of(const Box3<Scalar>& box) {
  return {box.bev_center(), box.l / 2, box.w / 2, box.theta_y};
}

template <typename Scalar>
std::array<Vec3<Scalar>, 8> Box3<Scalar>::corners() const {
  const auto footprint = bev_rect_of(*this).corners();
  std::array<Vec3<Scalar>, 8> out;
  for (std::size_t k = 0; k < 4; ++k) {
    out[k] = {footprint[k].x(), location.y(), footprint[k].y()};
    out[k + 4] = {footprint[k].x(), location.y() - h, footprint[k].y()};
  }
  return out;
}

/// Half-line origin + t * direction, t >= 0, with a unit direction.
template <typename Scalar>
class Ray2 {
 public:
  /// Ray from `origin` toward `target`; nullopt when the two coincide.
  static std::optional<Ray2> through(const Vec2<Scalar>& origin, const Vec2<Scalar>& target) {
    const Vec2<Scalar> d = target - origin;
    const Scalar n = d.norm();
    if (!(n > 0)) return std::nullopt;
    return Ray2(origin, d / n);
  }

  static Ray2 from_direction(const Vec2<Scalar>& origin, const Vec2<Scalar>& direction) {
    const Scalar n = direction.norm();
    if (!(n > 0)) throw std::invalid_argument("Ray2: zero-length direction");
    return Ray2(origin, direction / n);
  }

  const Vec2<Scalar>& origin() const { return origin_; }
  const Vec2<Scalar>& direction() const { return direction_; }
  Vec2<Scalar> at(Scalar t) const { return origin_ + t * direction_; }

 private:
  Ray2(const Vec2<Scalar>& o, const Vec2<Scalar>& d) : origin_(o), direction_(d) {}

  Vec2<Scalar> origin_;
  Vec2<Scalar> direction_;
};

using Ray2d = Ray2<double>;

/// Rectangle faces in local coordinates: +length, -length, +width, -width.
enum class RectFace : int { kPosLength = 0, kNegLength = 1, kPosWidth = 2, kNegWidth = 3 };

template <typename Scalar>
struct RayHit {
  Scalar t = 0;
  Vec2<Scalar> point = Vec2<Scalar>::Zero();
  RectFace face = RectFace::kPosLength;
};

/// Zero, one or two hits sorted by distance along the ray.
template <typename Scalar>
class RayHits {
 public:
  void push(const RayHit<Scalar>& h) { hits_[count_++] = h; }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  const RayHit<Scalar>& operator[](std::size_t i) const { return hits_[i]; }
  const RayHit<Scalar>& front() const { return hits_[0]; }
  const RayHit<Scalar>& back() const { return hits_[count_ - 1]; }
  const RayHit<Scalar>* begin() const { return hits_.data(); }
  const RayHit<Scalar>* end() const { return hits_.data() + count_; }

 private:
  std::array<RayHit<Scalar>, 2> hits_{};
  std::size_t count_ = 0;
};

/// Slab intersection of a half-line with a rectangle boundary. An origin
/// strictly inside yields the single exit hit; a grazing ray yields one hit.
template <typename Scalar>
RayHits<Scalar> ray_rect_intersect(const Ray2<Scalar>& ray, const BevRect<Scalar>& rect) {
  constexpr Scalar kInf = std::numeric_limits<Scalar>::infinity();
  const Vec2<Scalar> o = rect.to_local(ray.origin());
  const Vec2<Scalar> d{rect.length_axis().dot(ray.direction()),
                       rect.width_axis().dot(ray.direction())};
  const Scalar half[2] = {rect.half_l, rect.half_w};

  Scalar t_enter = -kInf;
  Scalar t_exit = kInf;
  RectFace face_enter = RectFace::kPosLength;
  RectFace face_exit = RectFace::kPosLength;
  for (int k = 0; k < 2; ++k) {
    const auto pos_face = static_cast<RectFace>(2 * k);
    const auto neg_face = static_cast<RectFace>(2 * k + 1);
    if (d[k] == 0) {
      if (std::abs(o[k]) > half[k]) return {};
      continue;
    }
    Scalar t_neg = (-half[k] - o[k]) / d[k];
    Scalar t_pos = (half[k] - o[k]) / d[k];
    RectFace f_near = neg_face;
    RectFace f_far = pos_face;
    if (t_neg > t_pos) {
      std::swap(t_neg, t_pos);
      std::swap(f_near, f_far);
    }
    if (t_neg > t_enter) {
      t_enter = t_neg;
      face_enter = f_near;
    }
    if (t_pos < t_exit) {
      t_exit = t_pos;
      face_exit = f_far;
    }
  }

  // rounding in to_local grows with the world coordinates involved
  const Scalar tol = 64 * std::numeric_limits<Scalar>::epsilon() *
                     std::max({Scalar(1), std::abs(t_exit), ray.origin().norm(), rect.center.norm(),
                               rect.half_l + rect.half_w});
  RayHits<Scalar> hits;
  if (t_enter > t_exit + tol || t_exit < 0) return hits;
  if (t_enter >= 0) {
    // a grazing ray (enter and exit coincide) is one hit, at the smaller t
    const Scalar t = std::min(t_enter, t_exit);
    hits.push({t, ray.at(t), face_enter});
    if (t_exit - t_enter > tol) hits.push({t_exit, ray.at(t_exit), face_exit});
  } else {
    hits.push({t_exit, ray.at(t_exit), face_exit});
  }
  return hits;
}

template <typename Scalar>
Scalar cross2(const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
  return a.x() * b.y() - a.y() * b.x();
}

/// Signed shoelace area; positive for counter-clockwise polygons.
template <typename Scalar>
Scalar polygon_area(const std::vector<Vec2<Scalar>>& poly) {
  Scalar s = 0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) s += cross2(poly[i], poly[(i + 1) % n]);
  return s / 2;
}

/// Sutherland-Hodgman clipping of `subject` against a convex counter-clockwise
/// `clip` polygon.
template <typename Scalar>
std::vector<Vec2<Scalar>> clip_convex(std::vector<Vec2<Scalar>> subject,
                                      const std::vector<Vec2<Scalar>>& clip) {
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !subject.empty(); ++e) {
    const Vec2<Scalar>& a = clip[e];
    const Vec2<Scalar> edge = clip[(e + 1) % m] - a;
    std::vector<Vec2<Scalar>> out;
    out.reserve(subject.size() + 2);
    const std::size_t n = subject.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2<Scalar>& p = subject[i];
      const Vec2<Scalar>& q = subject[(i + 1) % n];
      const Scalar sp = cross2<Scalar>(edge, p - a);
      const Scalar sq = cross2<Scalar>(edge, q - a);
      if (sp >= 0) out.push_back(p);
      if ((sp >= 0) != (sq >= 0)) {
        const Scalar t = sp / (sp - sq);
        out.push_back(p + t * (q - p));
      }
    }
    subject = std::move(out);
  }
  return subject;
}

template <typename Scalar>
Scalar bev_intersection_area(const BevRect<Scalar>& a, const BevRect<Scalar>& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  std::vector<Vec2<Scalar>> subject(ca.begin(), ca.end());
  const std::vector<Vec2<Scalar>> clip(cb.begin(), cb.end());
  const auto poly = clip_convex(std::move(subject), clip);
  if (poly.size() < 3) return 0;
  return std::max<Scalar>(0, polygon_area(poly));
}

/// Rotated-rectangle intersection over union by exact polygon clipping.
template <typename Scalar>
Scalar bev_iou(const BevRect<Scalar>& a, const BevRect<Scalar>& b) {
  const Scalar inter = bev_intersection_area(a, b);
  const Scalar uni = a.area() + b.area() - inter;
  if (!(uni > 0)) return 0;
  return std::clamp<Scalar>(inter / uni, 0, 1);
}

template <typename Scalar>
Scalar bev_iou(const Box3<Scalar>& a, const Box3<Scalar>& b) {
  return bev_iou(bev_rect_of(a), bev_rect_of(b));
}

/// Vertical extent is [y - h, y] since y is the bottom face and camera y points down.
template <typename Scalar>
Scalar iou_3d(const Box3<Scalar>& a, const Box3<Scalar>& b) {
  const Scalar lo = std::max(a.top_y(), b.top_y());
  const Scalar hi = std::min(a.location.y(), b.location.y());
  const Scalar overlap_h = std::max<Scalar>(0, hi - lo);
  const Scalar inter = bev_intersection_area(bev_rect_of(a), bev_rect_of(b)) * overlap_h;
  const Scalar uni = a.volume() + b.volume() - inter;
  if (!(uni > 0)) return 0;
  return std::clamp<Scalar>(inter / uni, 0, 1);
}

}  // namespace weakbox3d
