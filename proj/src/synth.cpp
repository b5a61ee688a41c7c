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

#include "weakbox3d/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "weakbox3d/config.hpp"
#include "weakbox3d/errors.hpp"
#include "weakbox3d/random.hpp"

namespace weakbox3d::synth {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

struct BoxHit {
  int box = -1;
  double t = std::numeric_limits<double>::infinity();
  RectFace face = RectFace::kPosLength;
};

BoxHit first_box_hit(const Ray2d& ray, const std::vector<BevRectd>& rects,
                     const std::vector<int>& eligible) {
  BoxHit best;
  for (int b : eligible) {
    const auto hits = ray_rect_intersect(ray, rects[static_cast<std::size_t>(b)]);
    if (hits.empty()) continue;
    if (hits.front().t < best.t) {
      best = {b, hits.front().t, hits.front().face};
    }
  }
  return best;
}

}  // namespace

Eigen::Matrix4d kitti_like_extrinsic() {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  // camera x = -lidar y, camera y = -lidar z, camera z = lidar x
  m.topLeftCorner<3, 3>() << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  m.topRightCorner<3, 1>() << -0.004, -0.076, -0.272;
  return m;
}

CameraModel default_camera() {
  CameraModel cam;
  cam.extrinsic = kitti_like_extrinsic();
  return cam;
}

std::vector<Vec3d> SynthScene::object_points(int box, bool clean) const {
  std::vector<Vec3d> out;
  const auto& src = clean ? clean_points : points;
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (owner[i] == box) out.push_back(src[i]);
  }
  return out;
}

std::array<int, 4> SynthScene::face_counts(int box) const {
  std::array<int, 4> c{};
  for (std::size_t i = 0; i < owner.size(); ++i) {
    if (owner[i] == box) ++c[static_cast<std::size_t>(face[i])];
  }
  return c;
}

SynthScene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  std::vector<BevRectd> rects;
  for (const auto& b : spec.boxes) {
    if (!b.valid()) throw std::invalid_argument("generate_scene: invalid box");
    if (!(b.location.z() > b.l)) throw std::invalid_argument("generate_scene: box not in front of camera");
    rects.push_back(bev_rect_of(b));
  }
  for (std::size_t i = 0; i < rects.size(); ++i) {
    for (std::size_t j = i + 1; j < rects.size(); ++j) {
      if (bev_intersection_area(rects[i], rects[j]) > 1e-9) {
        throw std::invalid_argument("generate_scene: overlapping boxes");
      }
    }
  }

  SynthScene scene;
  scene.gt_boxes = spec.boxes;
  scene.cam = spec.cam;
  scene.ground_height = spec.ground_height;
  scene.noise_sigma = spec.noise_sigma;
  scene.seed = seed;

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  const double res = spec.h_res_deg * kDeg;
  const double half_fan = spec.fan_half_angle_deg * kDeg;
  const auto n_rays = static_cast<int>(std::floor(2 * half_fan / res));

  auto emit = [&](const Vec3d& p, int owner, int face) {
    scene.clean_points.push_back(p);
    Vec3d q = p;
    if (spec.noise_sigma > 0) {
      for (int k = 0; k < 3; ++k) q[k] += spec.noise_sigma * noise(rng);
    }
    scene.points.push_back(q);
    scene.owner.push_back(owner);
    scene.face.push_back(face);
  };

  const Vec2d origin = Vec2d::Zero();
  for (std::size_t b = 0; b < spec.boxes.size(); ++b) {
    const Box3D& box = spec.boxes[b];
    for (int r = 0; r < spec.rows_per_box; ++r) {
      const double y = box.top_y() + box.h * (r + 1.0) / (spec.rows_per_box + 1.0);
      std::vector<int> eligible;
      for (std::size_t k = 0; k < spec.boxes.size(); ++k) {
        if (y > spec.boxes[k].top_y() && y < spec.boxes[k].location.y()) {
          eligible.push_back(static_cast<int>(k));
        }
      }
      const double phase = unit(rng) * res;
      for (int i = 0; i < n_rays; ++i) {
        const double phi = -half_fan + phase + i * res;
        const Ray2d ray = Ray2d::from_direction(origin, {std::sin(phi), std::cos(phi)});
        const BoxHit hit = first_box_hit(ray, rects, eligible);
        // rows are generated per box; keep only hits on the box that owns this row
        if (hit.box != static_cast<int>(b)) continue;
        const Vec2d p = ray.at(hit.t);
        emit({p.x(), y, p.y()}, hit.box, static_cast<int>(hit.face));
      }
    }
  }

  if (spec.with_ground) {
    std::vector<int> all(spec.boxes.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = static_cast<int>(k);
    const double gres = spec.ground_res_deg * kDeg;
    const auto n_ground = static_cast<int>(std::floor(2 * half_fan / gres));
    for (double range = spec.ground_min_range; range <= spec.ground_max_range; range *= 1.03) {
      for (int i = 0; i < n_ground; ++i) {
        const double phi = -half_fan + (i + 0.5) * gres;
        const Ray2d ray = Ray2d::from_direction(origin, {std::sin(phi), std::cos(phi)});
        if (first_box_hit(ray, rects, all).t < range) continue;
        const Vec2d p = ray.at(range);
        emit({p.x(), spec.ground_height, p.y()}, kGroundOwner, -1);
      }
    }
  }
  return scene;
}

BBox2D project_box(const Box3D& box, const CameraModel& cam) {
  double u0 = std::numeric_limits<double>::infinity();
  double v0 = u0;
  double u1 = -u0;
  double v1 = -u0;
  for (const auto& c : box.corners()) {
    const Vec3d q{c.x(), c.y(), std::max(c.z(), 0.1)};
    const Vec2d uv = project_to_image(q, cam);
    u0 = std::min(u0, uv.x());
    v0 = std::min(v0, uv.y());
    u1 = std::max(u1, uv.x());
    v1 = std::max(v1, uv.y());
  }
  const double w = cam.width - 1.0;
  const double h = cam.height - 1.0;
  return {std::clamp(u0, 0.0, w), std::clamp(v0, 0.0, h), std::clamp(u1, 0.0, w),
          std::clamp(v1, 0.0, h)};
}

std::vector<Detection2D> detections_for(const SynthScene& scene, const std::string& frame_id,
                                        const std::string& cls) {
  std::vector<Detection2D> out;
  for (const auto& box : scene.gt_boxes) {
    Detection2D d;
    d.frame_id = frame_id;
    d.cls = cls;
    d.score = 1.0;
    d.bbox = project_box(box, scene.cam);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Vec3d> edge_points(const Box3D& box, int per_edge) {
  const BevRectd rect = bev_rect_of(box);
  const auto c = rect.corners();
  std::vector<Vec3d> out;
  for (std::size_t e = 0; e < 4; ++e) {
    const Vec2d& a = c[e];
    const Vec2d& b = c[(e + 1) % 4];
    for (int k = 0; k < per_edge; ++k) {
      const Vec2d p = a + (k + 0.5) / per_edge * (b - a);
      out.push_back({p.x(), box.center_y(), p.y()});
    }
  }
  return out;
}

GridSurface grid_oracle(const ObjectPoints& pts, const Box3D& box, const LossConfig& cfg,
                        const Vec2d& window_center, double window, double step) {
  GridSurface s;
  s.step = step;
  s.nx = static_cast<int>(std::lround(window / step)) + 1;
  s.nz = s.nx;
  s.origin = window_center - Vec2d::Constant(0.5 * window);
  s.values.resize(static_cast<std::size_t>(s.nx) * s.nz);
  const double constant = loc_y_loss(pts, box, cfg) + orient_loss(box.theta_y, box.theta_y);
  BevRectd rect = bev_rect_of(box);
  s.min_value = std::numeric_limits<double>::infinity();
  for (int iz = 0; iz < s.nz; ++iz) {
    for (int ix = 0; ix < s.nx; ++ix) {
      rect.center = s.center_of(ix, iz);
      const double v = balanced_loss_value(pts, rect, cfg) + constant;
      s.values[static_cast<std::size_t>(iz) * s.nx + ix] = v;
      if (v < s.min_value) {
        s.min_value = v;
        s.argmin = rect.center;
      }
    }
  }
  return s;
}

BasinComparison compare_face_basins(const GridSurface& s, const Vec2d& face_point,
                                    const Vec2d& normal_to_camera) {
  BasinComparison out;
  out.near_min = std::numeric_limits<double>::infinity();
  out.far_min = out.near_min;
  for (int iz = 0; iz < s.nz; ++iz) {
    for (int ix = 0; ix < s.nx; ++ix) {
      const Vec2d c = s.center_of(ix, iz);
      const double side = normal_to_camera.dot(c - face_point);
      const double v = s.at(ix, iz);
      if (side > 0 && v < out.near_min) {
        out.near_min = v;
        out.near_arg = c;
      } else if (side < 0 && v < out.far_min) {
        out.far_min = v;
        out.far_arg = c;
      }
    }
  }
  const double hi = std::max(out.near_min, out.far_min);
  out.gap = hi > 0 ? std::abs(out.near_min - out.far_min) / hi : 0.0;
  return out;
}

namespace {

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool empty() const { return lo > hi; }
};

// x-range of { |a (x - cx) + b| <= half } on one row
Interval slab_interval(double a, double b, double cx, double half) {
  if (std::abs(a) < 1e-15) {
    if (std::abs(b) <= half) return {};
    return {1, 0};
  }
  double x0 = (-half - b) / a + cx;
  double x1 = (half - b) / a + cx;
  if (x0 > x1) std::swap(x0, x1);
  return {x0, x1};
}

Interval row_interval(const BevRectd& r, double z) {
  const Vec2d u = r.length_axis();
  const Vec2d v = r.width_axis();
  const double dz = z - r.center.y();
  const Interval a = slab_interval(u.x(), u.y() * dz, r.center.x(), r.half_l);
  const Interval b = slab_interval(v.x(), v.y() * dz, r.center.x(), r.half_w);
  return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

long long count_cells(const Interval& iv, double x0, double cell, long long ncols) {
  if (iv.empty()) return 0;
  long long lo = static_cast<long long>(std::ceil((iv.lo - x0) / cell - 0.5));
  long long hi = static_cast<long long>(std::floor((iv.hi - x0) / cell - 0.5));
  lo = std::max(lo, 0LL);
  hi = std::min(hi, ncols - 1);
  return std::max(0LL, hi - lo + 1);
}

}  // namespace

double rasterized_iou_oracle(const BevRectd& a, const BevRectd& b, double cell) {
  double x0 = std::numeric_limits<double>::infinity();
  double z0 = x0;
  double x1 = -x0;
  double z1 = -x0;
  for (const auto& r : {a, b}) {
    for (const auto& c : r.corners()) {
      x0 = std::min(x0, c.x());
      z0 = std::min(z0, c.y());
      x1 = std::max(x1, c.x());
      z1 = std::max(z1, c.y());
    }
  }
  const auto ncols = static_cast<long long>(std::ceil((x1 - x0) / cell));
  const auto nrows = static_cast<long long>(std::ceil((z1 - z0) / cell));
  long long in_a = 0;
  long long in_b = 0;
  long long in_both = 0;
  for (long long j = 0; j < nrows; ++j) {
    const double z = z0 + (static_cast<double>(j) + 0.5) * cell;
    const Interval ia = row_interval(a, z);
    const Interval ib = row_interval(b, z);
    in_a += count_cells(ia, x0, cell, ncols);
    in_b += count_cells(ib, x0, cell, ncols);
    in_both += count_cells({std::max(ia.lo, ib.lo), std::min(ia.hi, ib.hi)}, x0, cell, ncols);
  }
  const long long uni = in_a + in_b - in_both;
  return uni > 0 ? static_cast<double>(in_both) / static_cast<double>(uni) : 0.0;
}

SceneSpec random_single_car(const SceneFamily& fam, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double z = fam.z_min + (fam.z_max - fam.z_min) * unit(rng);
  const double bearing = (2 * unit(rng) - 1) * fam.max_bearing_deg * kDeg;
  const double theta = -kPi + 2 * kPi * unit(rng);
  SceneSpec spec;
  spec.noise_sigma = fam.noise_sigma;
  Box3D box;
  box.h = fam.dims.h;
  box.w = fam.dims.w;
  box.l = fam.dims.l;
  box.location = {z * std::tan(bearing), spec.ground_height, z};
  box.theta_y = wrap_angle(theta);
  spec.boxes.push_back(box);
  return spec;
}

SceneSpec random_single_face_car(const SceneFamily& fam, bool width_face, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double z = fam.z_min + (fam.z_max - fam.z_min) * unit(rng);
  const double bearing = (2 * unit(rng) - 1) * fam.max_bearing_deg * kDeg;
  const double x = z * std::tan(bearing);
  const double dist = std::hypot(x, z);
  const Vec2d view{x / dist, z / dist};
  // the camera must stay inside the slab of the face it looks at
  const double half_extent = width_face ? fam.dims.w / 2 : fam.dims.l / 2;
  const double max_jitter = std::asin(std::min(1.0, 0.8 * half_extent / dist));
  const double jitter = (2 * unit(rng) - 1) * max_jitter;
  const double flip = unit(rng) < 0.5 ? 0.0 : kPi;
  double theta = width_face ? std::atan2(-view.y(), view.x()) : std::atan2(view.x(), view.y());
  theta = wrap_angle(theta + jitter + flip);

  SceneSpec spec;
  spec.noise_sigma = fam.noise_sigma;
  Box3D box;
  box.h = fam.dims.h;
  box.w = fam.dims.w;
  box.l = fam.dims.l;
  box.location = {x, spec.ground_height, z};
  box.theta_y = theta;
  spec.boxes.push_back(box);
  return spec;
}

std::pair<Vec2d, Vec2d> camera_facing_face(const Box3D& box, const Vec2d& camera) {
  const BevRectd r = bev_rect_of(box);
  const Vec2d q = r.to_local(camera);
  const double excess_l = std::abs(q.x()) - r.half_l;
  const double excess_w = std::abs(q.y()) - r.half_w;
  if (excess_l >= excess_w) {
    const double s = q.x() >= 0 ? 1.0 : -1.0;
    return {r.to_world({s * r.half_l, 0}), s * r.length_axis()};
  }
  const double s = q.y() >= 0 ? 1.0 : -1.0;
  return {r.to_world({0, s * r.half_w}), s * r.width_axis()};
}

// ---- dataset ---------------------------------------------------------------

DatasetSpec parse_dataset_spec(const std::string& text, const std::string& origin) {
  DatasetSpec spec;
  spec.family.noise_sigma = 0.0;
  spec.base.noise_sigma = 0.0;
  for (const auto& kv : parse_key_values(text, origin)) {
    const auto d = [&] { return parse_double(kv, origin); };
    if (kv.key == "frames") spec.frames = static_cast<int>(parse_int(kv, origin));
    else if (kv.key == "objects_per_frame") spec.objects_per_frame = static_cast<int>(parse_int(kv, origin));
    else if (kv.key == "seed") spec.seed = static_cast<std::uint64_t>(parse_int(kv, origin));
    else if (kv.key == "z_min") spec.family.z_min = d();
    else if (kv.key == "z_max") spec.family.z_max = d();
    else if (kv.key == "max_bearing_deg") spec.family.max_bearing_deg = d();
    else if (kv.key == "noise_sigma") spec.family.noise_sigma = spec.base.noise_sigma = d();
    else if (kv.key == "h_res_deg") spec.base.h_res_deg = d();
    else if (kv.key == "rows_per_box") spec.base.rows_per_box = static_cast<int>(parse_int(kv, origin));
    else if (kv.key == "ground_height") spec.base.ground_height = d();
    else if (kv.key == "with_ground") spec.base.with_ground = parse_bool(kv, origin);
    else if (kv.key == "fx") spec.base.cam.fx = d();
    else if (kv.key == "fy") spec.base.cam.fy = d();
    else if (kv.key == "cx") spec.base.cam.cx = d();
    else if (kv.key == "cy") spec.base.cam.cy = d();
    else if (kv.key == "width") spec.base.cam.width = static_cast<int>(parse_int(kv, origin));
    else if (kv.key == "height") spec.base.cam.height = static_cast<int>(parse_int(kv, origin));
    else if (kv.key == "box") {
      std::vector<double> v;
      std::stringstream ss(kv.value);
      std::string item;
      while (std::getline(ss, item, ',')) v.push_back(parse_double({kv.key, item, kv.line}, origin));
      if (v.size() != 7) throw ParseError(origin, kv.line, "box needs x,y,z,h,w,l,theta");
      Box3D b;
      b.location = {v[0], v[1], v[2]};
      b.h = v[3];
      b.w = v[4];
      b.l = v[5];
      b.theta_y = wrap_angle(v[6]);
      if (!b.valid()) throw ParseError(origin, kv.line, "box dimensions must be positive");
      spec.base.boxes.push_back(b);
    } else {
      throw ParseError(origin, kv.line, "unknown key '" + kv.key + "'");
    }
  }
  if (spec.frames < 0 || spec.objects_per_frame < 1) {
    throw ParseError(origin, 0, "frames >= 0 and objects_per_frame >= 1 required");
  }
  return spec;
}

std::string format_dataset_spec(const DatasetSpec& s) {
  std::ostringstream os;
  os.precision(17);
  os << "frames = " << s.frames << "\nobjects_per_frame = " << s.objects_per_frame
     << "\nseed = " << s.seed << "\nz_min = " << s.family.z_min << "\nz_max = " << s.family.z_max
     << "\nmax_bearing_deg = " << s.family.max_bearing_deg
     << "\nnoise_sigma = " << s.base.noise_sigma << "\nh_res_deg = " << s.base.h_res_deg
     << "\nrows_per_box = " << s.base.rows_per_box << "\nground_height = " << s.base.ground_height
     << "\nwith_ground = " << (s.base.with_ground ? "true" : "false") << "\nfx = " << s.base.cam.fx
     << "\nfy = " << s.base.cam.fy << "\ncx = " << s.base.cam.cx << "\ncy = " << s.base.cam.cy
     << "\nwidth = " << s.base.cam.width << "\nheight = " << s.base.cam.height << "\n";
  for (const auto& b : s.base.boxes) {
    os << "box = " << b.location.x() << "," << b.location.y() << "," << b.location.z() << ","
       << b.h << "," << b.w << "," << b.l << "," << b.theta_y << "\n";
  }
  return os.str();
}

namespace {

SceneSpec random_frame(const DatasetSpec& ds, std::uint64_t seed) {
  SceneSpec spec = ds.base;
  spec.boxes.clear();
  Rng rng(seed);
  for (int k = 0; k < ds.objects_per_frame; ++k) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      SceneSpec one = random_single_car(ds.family, rng());
      Box3D b = one.boxes.front();
      b.location.y() = spec.ground_height;
      const BevRectd rb = bev_rect_of(b);
      const bool clash = std::any_of(spec.boxes.begin(), spec.boxes.end(), [&](const Box3D& o) {
        return (o.bev_center() - b.bev_center()).norm() < 0.5 * (o.l + b.l) + 1.0 ||
               bev_intersection_area(rb, bev_rect_of(o)) > 0;
      });
      if (!clash) {
        spec.boxes.push_back(b);
        break;
      }
    }
  }
  return spec;
}

double overlap_fraction(const BBox2D& a, const BBox2D& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double area = (a.x2 - a.x1) * (a.y2 - a.y1);
  if (iw <= 0 || ih <= 0 || area <= 0) return 0;
  return iw * ih / area;
}

}  // namespace

std::vector<SynthScene> dataset_scenes(const DatasetSpec& ds) {
  std::vector<SynthScene> scenes;
  for (int f = 0; f < ds.frames; ++f) {
    const std::uint64_t s = derive_seed(ds.seed, static_cast<std::uint64_t>(f));
    scenes.push_back(generate_scene(random_frame(ds, s), derive_seed(s, 1)));
  }
  if (!ds.base.boxes.empty()) {
    scenes.push_back(generate_scene(ds.base, derive_seed(ds.seed, 0xB0B)));
  }
  return scenes;
}

std::vector<std::string> export_dataset(const DatasetSpec& ds, const fs::path& out) {
  for (const char* sub : {"velodyne", "calib", "label_2"}) fs::create_directories(out / sub);
  const auto scenes = dataset_scenes(ds);
  std::vector<std::string> ids;
  std::string det_csv = "frame_id,cls,score,x1,y1,x2,y2\n";
  for (std::size_t f = 0; f < scenes.size(); ++f) {
    const SynthScene& sc = scenes[f];
    char id[16];
    std::snprintf(id, sizeof id, "%06zu", f);
    ids.emplace_back(id);

    const Eigen::Matrix4d to_lidar = sc.cam.extrinsic.inverse();
    RawScan scan;
    scan.points.reserve(sc.points.size());
    for (const auto& p : sc.points) {
      const Eigen::Vector4d q = to_lidar * Eigen::Vector4d(p.x(), p.y(), p.z(), 1.0);
      scan.points.push_back({static_cast<float>(q.x()), static_cast<float>(q.y()),
                             static_cast<float>(q.z()), 0.5f});
    }
    kitti::write_scan(out / "velodyne" / (ids.back() + ".bin"), scan);
    kitti::write_calib_file(out / "calib" / (ids.back() + ".txt"), kitti::calib_from_camera(sc.cam));

    std::vector<kitti::KittiLabel> labels;
    std::vector<BBox2D> boxes2d;
    for (const auto& b : sc.gt_boxes) boxes2d.push_back(project_box(b, sc.cam));
    for (std::size_t k = 0; k < sc.gt_boxes.size(); ++k) {
      const Box3D& b = sc.gt_boxes[k];
      kitti::KittiLabel l = kitti::label_from_box(b, "Car", boxes2d[k], std::nullopt);
      double covered = 0;
      for (std::size_t o = 0; o < sc.gt_boxes.size(); ++o) {
        if (o != k && sc.gt_boxes[o].location.z() < b.location.z()) {
          covered = std::max(covered, overlap_fraction(boxes2d[k], boxes2d[o]));
        }
      }
      const bool has_points = !sc.object_points(static_cast<int>(k)).empty();
      l.occluded = !has_points ? 3 : covered < 0.1 ? 0 : covered < 0.5 ? 1 : 2;
      labels.push_back(l);
      Detection2D d;
      d.frame_id = ids.back();
      d.cls = "Car";
      d.score = 1.0;
      d.bbox = boxes2d[k];
      det_csv += kitti::format_detection(d) + "\n";
    }
    kitti::write_labels(out / "label_2" / (ids.back() + ".txt"), labels);
  }
  kitti::write_text_file_atomic(out / "detections.csv", det_csv);
  kitti::write_text_file_atomic(out / "spec.txt", format_dataset_spec(ds));
  return ids;
}

}  // namespace weakbox3d::synth
