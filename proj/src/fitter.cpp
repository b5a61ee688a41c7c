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

#include "weakbox3d/fitter.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "weakbox3d/random.hpp"

namespace weakbox3d {

std::map<std::string, ClassDims> default_class_dims() {
  return {{"Car", {1.6, 1.8, 4.0}},
          {"Pedestrian", {1.75, 0.6, 0.8}},
          {"Cyclist", {1.75, 0.6, 1.8}}};
}

namespace {

constexpr double kDiag = 0.70710678118654752440;
const std::array<Vec2d, 8> kCompass = {
    Vec2d(1, 0),         Vec2d(-1, 0),         Vec2d(0, 1),          Vec2d(0, -1),
    Vec2d(kDiag, kDiag), Vec2d(kDiag, -kDiag), Vec2d(-kDiag, kDiag), Vec2d(-kDiag, -kDiag)};

}  // namespace

DescentResult minimize_center(const ObjectPoints& pts, BevRectd rect, const LossConfig& loss,
                              const OptimizerConfig& opt) {
  DescentResult r;
  double f = balanced_loss_value(pts, rect, loss);
  double step = opt.step_size;
  int plateau = 0;
  int it = 0;
  for (; it < opt.max_iters; ++it) {
    const Vec2d g = balanced_loss_gradient_fd(pts, rect, loss, loss.h_fd);
    const double gn = g.norm();
    if (!(gn > 0)) {
      r.converged = true;
      break;
    }
    BevRectd cand = rect;
    cand.center -= step * g / gn;
    double fc = balanced_loss_value(pts, cand, loss);
    if (!(fc < f)) {
      // At a kink of the L1 terms the differenced gradient can point uphill;
      // probe the compass directions at the same step before shrinking it.
      const BevRectd base = rect;
      for (const Vec2d& dir : kCompass) {
        BevRectd probe = base;
        probe.center += step * dir;
        const double fp = balanced_loss_value(pts, probe, loss);
        if (fp < fc) {
          fc = fp;
          cand = probe;
        }
      }
    }
    double delta = 0;
    if (fc < f) {
      delta = f - fc;
      rect = cand;
      f = fc;
    } else {
      step *= 0.5;
    }
    plateau = delta < opt.plateau_tol ? plateau + 1 : 0;
    if (plateau >= opt.plateau_iters) {
      r.converged = true;
      ++it;
      break;
    }
  }
  r.center = rect.center;
  r.loss = f;
  r.iters = it;
  return r;
}

std::vector<Vec2d> initial_centers(const ObjectPoints& pts, const ClassDims& dims,
                                   const FitConfig& cfg) {
  Vec2d centroid = Vec2d::Zero();
  for (const auto& p : pts.bev) centroid += p;
  centroid /= static_cast<double>(pts.bev.size());
  Vec2d away = centroid - cfg.loss.camera_origin;
  away = away.norm() > 0 ? Vec2d(away.normalized()) : Vec2d(0, 1);

  std::vector<Vec2d> out;
  for (InitStrategy s : cfg.multistart) {
    switch (s) {
      case InitStrategy::kCentroid: out.push_back(centroid); break;
      case InitStrategy::kPushHalfWidth: out.push_back(centroid + 0.5 * dims.w * away); break;
      case InitStrategy::kPushHalfLength: out.push_back(centroid + 0.5 * dims.l * away); break;
    }
  }
  return out;
}

FitResult fit_object(const ObjectPoints& pts, const Detection2D& det, const CameraModel& cam,
                     const FitConfig& cfg) {
  if (pts.size() < 2) throw SkipError(SkipReason::kTooFewPoints, "fewer than 2 object points");
  const auto dims_it = cfg.class_dims.find(det.cls);
  if (dims_it == cfg.class_dims.end()) {
    throw SkipError(SkipReason::kNoDims, "no frozen dimensions for class '" + det.cls + "'");
  }
  const ClassDims dims = dims_it->second;

  OrientationEstimate orient;
  try {
    orient = estimate_orientation(pts, cfg.offset_threshold, cfg.bin_width);
  } catch (const std::invalid_argument& e) {
    throw SkipError(SkipReason::kDegenerateOrientation, e.what());
  }

  FitResult best;
  best.orientation = orient;
  best.y_from_points = pts.y_l;
  double best_loss = std::numeric_limits<double>::infinity();
  int total_iters = 0;
  for (const Vec2d& init : initial_centers(pts, dims, cfg)) {
    const BevRectd rect{init, dims.l / 2, dims.w / 2, orient.theta_y};
    const DescentResult d = minimize_center(pts, rect, cfg.loss, cfg.optimizer);
    total_iters += d.iters;
    if (d.loss < best_loss) {
      best_loss = d.loss;
      best.box.location = {d.center.x(), pts.y_l + dims.h / 2, d.center.y()};
      best.converged = d.converged;
    }
  }
  best.box.h = dims.h;
  best.box.w = dims.w;
  best.box.l = dims.l;
  best.box.theta_y = orient.theta_y;
  best.iters = total_iters;
  best.score = det.score;
  best.loss_report = total_loss(pts, best.box, cfg.loss, orient.theta_y);
  if (cfg.adjust_y) best.box = adjust_y_2d3d(best.box, det, cam);
  return best;
}

Box3D adjust_y_2d3d(const Box3D& box, const Detection2D& det, const CameraModel& cam) {
  const auto corners = box.corners();
  for (const auto& c : corners) {
    if (!(c.z() > 1e-3)) return box;
  }
  double shift = 0;
  for (int it = 0; it < 20; ++it) {
    std::size_t top = 0;
    std::size_t bottom = 0;
    double v_top = std::numeric_limits<double>::infinity();
    double v_bottom = -v_top;
    for (std::size_t k = 0; k < corners.size(); ++k) {
      const double v = cam.fy * (corners[k].y() + shift) / corners[k].z() + cam.cy;
      if (v < v_top) {
        v_top = v;
        top = k;
      }
      if (v > v_bottom) {
        v_bottom = v;
        bottom = k;
      }
    }
    const double a_top = cam.fy / corners[top].z();
    const double a_bottom = cam.fy / corners[bottom].z();
    const double r_top = v_top - det.bbox.y1;
    const double r_bottom = v_bottom - det.bbox.y2;
    const double step = -(a_top * r_top + a_bottom * r_bottom) / (a_top * a_top + a_bottom * a_bottom);
    shift += step;
    if (std::abs(step) < 1e-12) break;
  }
  Box3D out = box;
  out.location.y() += shift;
  return out;
}

std::uint64_t frame_seed(std::uint64_t seed, const std::string& frame_id) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (unsigned char c : frame_id) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return derive_seed(seed, h);
}

FrameResult extract_frame(const FrameInput& in, const ExtractConfig& cfg, std::uint64_t seed) {
  FrameResult out;
  out.frame_id = in.frame_id;
  const std::uint64_t fseed = frame_seed(seed, in.frame_id);

  GroundPlane ground = GroundPlane::horizontal(cfg.fallback_ground_height);
  try {
    ground = fit_ground_plane(in.points, cfg, derive_seed(fseed, 0xF00D));
    out.ground = ground;
  } catch (const std::exception&) {
    out.ground_fallback = true;
  }
  const std::vector<Vec3d> above = remove_ground(in.points, ground, cfg.ransac_threshold);

  for (std::size_t i = 0; i < in.detections.size(); ++i) {
    ObjectOutcome obj;
    obj.det_index = i;
    Detection2D det = in.detections[i];
    det.bbox = clamp_to_image(det.bbox, in.cam);
    try {
      if (!(det.bbox.x1 < det.bbox.x2 && det.bbox.y1 < det.bbox.y2)) {
        throw SkipError(SkipReason::kInvalidDetection, "degenerate 2D box");
      }
      const auto frustum = select_frustum(above, det, in.cam);
      const auto cluster = cluster_select(frustum, cfg);
      obj.points = finalize_object_points(cluster, cfg, derive_seed(fseed, i + 1));
    } catch (const SkipError& e) {
      obj.skip = e.reason();
      obj.detail = e.what();
    }
    out.objects.push_back(std::move(obj));
  }
  return out;
}

void fit_extracted(FrameResult& frame, const FrameInput& in, const FitConfig& fit) {
  for (auto& obj : frame.objects) {
    if (!obj.points || obj.skip) continue;
    try {
      obj.fit = fit_object(*obj.points, in.detections[obj.det_index], in.cam, fit);
    } catch (const SkipError& e) {
      obj.skip = e.reason();
      obj.detail = e.what();
    }
  }
}

FrameResult fit_frame(const FrameInput& in, const ExtractConfig& extract, const FitConfig& fit,
                      std::uint64_t seed) {
  FrameResult out = extract_frame(in, extract, seed);
  fit_extracted(out, in, fit);
  return out;
}

}  // namespace weakbox3d
