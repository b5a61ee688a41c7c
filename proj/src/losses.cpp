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

#include "weakbox3d/losses.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace weakbox3d {

namespace {

int sign_of(double v) { return (v > 0) - (v < 0); }

Vec2d axis_of(const BevRectd& rect, RectFace face) {
  return static_cast<int>(face) < 2 ? rect.length_axis() : rect.width_axis();
}

double half_of(const BevRectd& rect, RectFace face) {
  return static_cast<int>(face) < 2 ? rect.half_l : rect.half_w;
}

struct PointEval {
  PointTerms terms;
  Vec2d grad_geometry = Vec2d::Zero();
  Vec2d grad_ray = Vec2d::Zero();
  Vec2d grad_center = Vec2d::Zero();
  PointSignature sig;
};

PointEval eval_point(const Vec2d& p, const BevRectd& rect, const Vec2d& camera_origin) {
  PointEval out;
  const Vec2d d = p - rect.center;
  out.terms.center = d.lpNorm<1>();
  out.grad_center = {-sign_of(d.x()), -sign_of(d.y())};
  out.sig.sign_x = sign_of(d.x());
  out.sig.sign_z = sign_of(d.y());

  if (d.norm() >= kCenterEpsilon) {
    const auto ray = Ray2d::through(rect.center, p);
    const auto hits = ray_rect_intersect(*ray, rect);
    if (!hits.empty()) {
      const RayHit<double>& exit = hits.back();
      out.terms.geometry = (p - exit.point).lpNorm<1>();
      // P - P_I = D (1 - 1/m), m = |a.D| / half on the exit face
      const Vec2d a = axis_of(rect, exit.face);
      const double half = half_of(rect, exit.face);
      const double q = a.dot(d);
      const double m = std::abs(q) / half;
      const double g = 1.0 - 1.0 / m;
      const Vec2d dm_dc = -sign_of(q) * a / half;
      const Vec2d sign_d{static_cast<double>(sign_of(d.x())), static_cast<double>(sign_of(d.y()))};
      out.grad_geometry = sign_of(g) / (m * m) * d.lpNorm<1>() * dm_dc - std::abs(g) * sign_d;
      out.sig.geom_face = static_cast<int>(exit.face);
      out.sig.geom_side = sign_of(m - 1.0);
    }
  }

  if (const auto ray = Ray2d::through(camera_origin, p)) {
    const auto hits = ray_rect_intersect(*ray, rect);
    if (!hits.empty()) {
      const RayHit<double>& near = hits.front();
      out.terms.ray_tracing = (p - near.point).lpNorm<1>();
      const double rho = (p - camera_origin).norm();
      const Vec2d a = axis_of(rect, near.face);
      const double dk = a.dot(ray->direction());
      const int s = sign_of(rho - near.t);
      if (dk != 0) out.grad_ray = -s * ray->direction().lpNorm<1>() * a / dk;
      out.sig.ray_face = static_cast<int>(near.face);
      out.sig.ray_side = s;
    }
  }
  return out;
}

double point_weight(const ObjectPoints& pts, std::size_t i, const LossConfig& cfg) {
  return cfg.use_balancing ? 1.0 / static_cast<double>(pts.density[i]) : 1.0;
}

}  // namespace

Vec3d lift_center(const CenterParam& c, const CameraModel& cam) {
  if (!(c.z > 0)) throw std::invalid_argument("lift_center: depth must be positive");
  return {(c.t_x - cam.cx) / cam.fx * c.z, (c.t_y - cam.cy) / cam.fy * c.z, c.z};
}

PointTerms point_terms(const Vec2d& p, const BevRectd& rect, const Vec2d& camera_origin) {
  return eval_point(p, rect, camera_origin).terms;
}

std::vector<double> center_loss(const ObjectPoints& pts, const Box3D& box) {
  std::vector<double> out;
  out.reserve(pts.size());
  const Vec2d c = box.bev_center();
  for (const auto& p : pts.bev) out.push_back((p - c).lpNorm<1>());
  return out;
}

std::vector<double> geometric_alignment_loss(const ObjectPoints& pts, const Box3D& box) {
  const BevRectd rect = bev_rect_of(box);
  std::vector<double> out;
  out.reserve(pts.size());
  for (const auto& p : pts.bev) out.push_back(eval_point(p, rect, Vec2d::Zero()).terms.geometry);
  return out;
}

std::vector<double> ray_tracing_loss(const ObjectPoints& pts, const Box3D& box,
                                     const Vec2d& camera_origin) {
  const BevRectd rect = bev_rect_of(box);
  std::vector<double> out;
  out.reserve(pts.size());
  for (const auto& p : pts.bev) out.push_back(eval_point(p, rect, camera_origin).terms.ray_tracing);
  return out;
}

double combined_point_loss(const PointTerms& t, const LossConfig& cfg) {
  if (cfg.center_only) return t.center;
  return cfg.w_geom * t.geometry + cfg.w_ray * t.ray_tracing + cfg.lambda * t.center;
}

BalancedLoss balanced_loss(const ObjectPoints& pts, const Box3D& box, const LossConfig& cfg) {
  const BevRectd rect = bev_rect_of(box);
  BalancedLoss out;
  out.weighted.reserve(pts.size());
  // extended precision keeps k * l exact for small k
  std::map<int, long double> by_density;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const PointTerms t = eval_point(pts.bev[i], rect, cfg.camera_origin).terms;
    const double l = combined_point_loss(t, cfg);
    out.weighted.push_back(l * point_weight(pts, i, cfg));
    const int e = cfg.use_balancing ? pts.density[i] : 1;
    by_density[e] += l;
  }
  long double sum = 0;
  for (const auto& [e, l] : by_density) sum += l / e;
  out.weighted_sum = static_cast<double>(sum);
  out.value = pts.size() == 0 ? 0.0 : out.weighted_sum / static_cast<double>(pts.size());
  return out;
}

double balanced_loss_value(const ObjectPoints& pts, const BevRectd& rect, const LossConfig& cfg) {
  if (pts.size() == 0) return 0.0;
  double sum = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const PointTerms t = eval_point(pts.bev[i], rect, cfg.camera_origin).terms;
    sum += combined_point_loss(t, cfg) * point_weight(pts, i, cfg);
  }
  return sum / static_cast<double>(pts.size());
}

Vec2d balanced_loss_gradient(const ObjectPoints& pts, const BevRectd& rect, const LossConfig& cfg) {
  if (pts.size() == 0) return Vec2d::Zero();
  Vec2d g = Vec2d::Zero();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const PointEval e = eval_point(pts.bev[i], rect, cfg.camera_origin);
    Vec2d gi = e.grad_center;
    if (!cfg.center_only) {
      gi = cfg.w_geom * e.grad_geometry + cfg.w_ray * e.grad_ray + cfg.lambda * e.grad_center;
    }
    g += gi * point_weight(pts, i, cfg);
  }
  return g / static_cast<double>(pts.size());
}

Vec2d balanced_loss_gradient_fd(const ObjectPoints& pts, const BevRectd& rect,
                                const LossConfig& cfg, double h) {
  Vec2d g;
  for (int k = 0; k < 2; ++k) {
    BevRectd plus = rect;
    BevRectd minus = rect;
    plus.center[k] += h;
    minus.center[k] -= h;
    g[k] = (balanced_loss_value(pts, plus, cfg) - balanced_loss_value(pts, minus, cfg)) / (2 * h);
  }
  return g;
}

double smooth_l1(double d, double beta) {
  const double a = std::abs(d);
  if (a < beta) return 0.5 * a * a / beta;
  return a - 0.5 * beta;
}

double loc_y_loss(const ObjectPoints& pts, const Box3D& box, const LossConfig& cfg) {
  return smooth_l1(box.center_y() - pts.y_l, cfg.smooth_l1_beta);
}

double orient_loss(double theta, double target) { return 1.0 - std::cos(2.0 * (theta - target)); }

LossReport total_loss(const ObjectPoints& pts, const Box3D& box, const LossConfig& cfg) {
  return total_loss(pts, box, cfg, box.theta_y);
}

LossReport total_loss(const ObjectPoints& pts, const Box3D& box, const LossConfig& cfg,
                      double orient_target) {
  const BevRectd rect = bev_rect_of(box);
  LossReport r;
  const std::size_t m = pts.size();
  if (m > 0) {
    double sum_balanced = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const PointTerms t = eval_point(pts.bev[i], rect, cfg.camera_origin).terms;
      r.geometry += t.geometry;
      r.ray_tracing += t.ray_tracing;
      r.center += t.center;
      sum_balanced += combined_point_loss(t, cfg) * point_weight(pts, i, cfg);
    }
    const double inv_m = 1.0 / static_cast<double>(m);
    r.geometry *= inv_m;
    r.ray_tracing *= inv_m;
    r.center *= inv_m;
    r.balancing = sum_balanced * inv_m;
  }
  r.loc_y = loc_y_loss(pts, box, cfg);
  r.orient = orient_loss(box.theta_y, orient_target);
  r.total = r.balancing + r.loc_y + r.orient;
  const Vec2d g = balanced_loss_gradient_fd(pts, rect, cfg, cfg.h_fd);
  r.grad_x = g.x();
  r.grad_z = g.y();
  return r;
}

std::vector<PointSignature> point_signatures(const ObjectPoints& pts, const BevRectd& rect,
                                             const Vec2d& camera_origin) {
  std::vector<PointSignature> out;
  out.reserve(pts.size());
  for (const auto& p : pts.bev) out.push_back(eval_point(p, rect, camera_origin).sig);
  return out;
}

bool assignment_stable(const ObjectPoints& pts, const BevRectd& rect, const Vec2d& camera_origin,
                       double radius) {
  const auto base = point_signatures(pts, rect, camera_origin);
  for (int dx = -1; dx <= 1; ++dx) {
    for (int dz = -1; dz <= 1; ++dz) {
      if (dx == 0 && dz == 0) continue;
      BevRectd probe = rect;
      probe.center += radius * Vec2d(dx, dz);
      if (point_signatures(pts, probe, camera_origin) != base) return false;
    }
  }
  return true;
}

}  // namespace weakbox3d
