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

#include "weakbox3d/app.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "weakbox3d/errors.hpp"
#include "weakbox3d/fitter.hpp"
#include "weakbox3d/kitti.hpp"
#include "weakbox3d/random.hpp"
#include "weakbox3d/synth.hpp"

namespace weakbox3d::app {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

/// Runs fn(i) for i in [0, n) on `jobs` threads; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct FrameRecord {
  std::string frame_id;
  double seconds = 0;
  int objects = 0;
  int fitted = 0;
  std::vector<std::pair<std::size_t, ObjectOutcome>> skips;
};

json manifest_json(const std::string& command, const PipelineConfig& cfg, const json& inputs,
                   const std::vector<FrameRecord>& frames) {
  json m;
  m["tool"] = "weakbox3d";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["seed"] = cfg.seed;
  m["inputs"] = inputs;
  m["config_text"] = format_config(cfg);
  json cfg_obj = json::object();
  for (const auto& kv : parse_key_values(format_config(cfg), "<config>")) cfg_obj[kv.key] = kv.value;
  m["config"] = cfg_obj;
  json fr = json::array();
  for (const auto& f : frames) {
    json skips = json::array();
    for (const auto& [idx, obj] : f.skips) {
      skips.push_back({{"det_index", idx},
                       {"reason", std::string(to_string(*obj.skip))},
                       {"detail", obj.detail}});
    }
    fr.push_back({{"frame_id", f.frame_id},
                  {"seconds", f.seconds},
                  {"objects", f.objects},
                  {"fitted", f.fitted},
                  {"skips", skips}});
  }
  m["frames"] = fr;
  return m;
}

PipelineConfig base_config(const std::optional<fs::path>& config,
                           const std::vector<std::string>& overrides,
                           std::optional<std::uint64_t> seed) {
  PipelineConfig cfg;
  if (config) load_config_file(cfg, *config);
  std::string text;
  for (const auto& o : overrides) text += o + "\n";
  apply_config(cfg, parse_key_values(text, "--set"), "--set");
  if (seed) cfg.seed = *seed;
  return cfg;
}

FrameInput load_frame(const std::string& id, const fs::path& scans, const fs::path& calib,
                      const std::map<std::string, std::vector<Detection2D>>& dets,
                      const ExtractConfig& ex) {
  FrameInput in;
  in.frame_id = id;
  in.cam = kitti::parse_calib(calib / (id + ".txt"));
  if (!scans.empty()) {
    in.points = transform_to_camera(kitti::parse_scan(scans / (id + ".bin")), in.cam, ex.min_depth);
  }
  if (const auto it = dets.find(id); it != dets.end()) in.detections = it->second;
  return in;
}

template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError& e) {
    log << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IoError& e) {
    log << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << "\n";
    return kExitBadArgs;
  }
}

std::vector<std::string> list_by_extension(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::set<std::string> ids;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) ids.insert(e.path().stem().string());
  }
  return {ids.begin(), ids.end()};
}

}  // namespace

int default_jobs() {
  if (const char* v = std::getenv(kJobsEnv)) {
    const int n = std::atoi(v);
    if (n > 0) return n;
  }
  return 1;
}

void load_config_file(PipelineConfig& cfg, const fs::path& path) {
  const std::string text = kitti::read_text_file(path);
  if (path.extension() == ".json") {
    json m;
    try {
      m = json::parse(text);
    } catch (const json::exception& e) {
      throw ParseError(path.string(), 0, e.what());
    }
    if (!m.contains("config_text")) throw ParseError(path.string(), 0, "manifest lacks config_text");
    apply_config(cfg, parse_key_values(m["config_text"].get<std::string>(), path.string()),
                 path.string());
    return;
  }
  apply_config(cfg, parse_key_values(text, path.string()), path.string());
}

std::vector<std::string> list_frames(const fs::path& scans) { return list_by_extension(scans, ".bin"); }

std::string format_object_points(const std::vector<std::pair<std::size_t, ObjectPoints>>& objs) {
  std::string out;
  for (const auto& [idx, pts] : objs) {
    for (const auto& p : pts.pts3d) {
      out += std::to_string(idx) + " " + fmt17(p.x()) + " " + fmt17(p.y()) + " " + fmt17(p.z()) + "\n";
    }
  }
  return out;
}

std::vector<std::pair<std::size_t, std::vector<Vec3d>>> parse_object_points(
    const std::string& text, const std::string& origin) {
  std::map<std::size_t, std::vector<Vec3d>> grouped;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    long long idx = -1;
    double x = 0, y = 0, z = 0;
    std::string extra;
    if (!(ls >> idx >> x >> y >> z) || idx < 0 || (ls >> extra)) {
      throw ParseError(origin, line_no, "expected 'obj_idx x y z'");
    }
    grouped[static_cast<std::size_t>(idx)].push_back({x, y, z});
  }
  return {grouped.begin(), grouped.end()};
}

int run_extract(const ExtractOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    const PipelineConfig cfg = base_config(opt.config, opt.overrides, opt.seed);
    const auto dets = kitti::parse_detections(opt.dets);
    const auto frames = list_frames(opt.scans);
    fs::create_directories(opt.out);

    std::vector<FrameRecord> records(frames.size());
    parallel_for(frames.size(), opt.jobs, [&](std::size_t f) {
      const auto t0 = std::chrono::steady_clock::now();
      const FrameInput in = load_frame(frames[f], opt.scans, opt.calib, dets, cfg.extract);
      const FrameResult res = extract_frame(in, cfg.extract, cfg.seed);
      std::vector<std::pair<std::size_t, ObjectPoints>> objs;
      FrameRecord& rec = records[f];
      rec.frame_id = frames[f];
      rec.objects = static_cast<int>(res.objects.size());
      for (const auto& o : res.objects) {
        if (o.points) objs.emplace_back(o.det_index, *o.points);
        if (o.skip) rec.skips.emplace_back(o.det_index, o);
      }
      kitti::write_text_file_atomic(opt.out / (frames[f] + ".txt"), format_object_points(objs));
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });

    const json inputs = {{"scans", opt.scans.string()},
                         {"calib", opt.calib.string()},
                         {"dets", opt.dets.string()}};
    kitti::write_text_file_atomic(opt.out / "manifest.json",
                                  manifest_json("extract", cfg, inputs, records).dump(2) + "\n");
    log << "extract: " << frames.size() << " frames -> " << opt.out.string() << "\n";
    return kExitOk;
  });
}

int run_fit(const FitOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    PipelineConfig cfg = base_config(opt.config, opt.overrides, opt.seed);
    if (opt.class_dims) {
      cfg.fit.class_dims.clear();
      load_config_file(cfg, *opt.class_dims);
    }
    if (opt.no_ray) cfg.fit.loss.w_ray = 0;
    if (opt.no_balancing) cfg.fit.loss.use_balancing = false;
    if (opt.center_only) cfg.fit.loss.center_only = true;

    const auto dets = kitti::parse_detections(opt.dets);
    const std::vector<std::string> frames =
        opt.points ? list_by_extension(*opt.points, ".txt") : list_frames(opt.scans);
    fs::create_directories(opt.out);

    std::vector<FrameRecord> records(frames.size());
    parallel_for(frames.size(), opt.jobs, [&](std::size_t f) {
      const auto t0 = std::chrono::steady_clock::now();
      const std::string& id = frames[f];
      const FrameInput in =
          load_frame(id, opt.points ? fs::path() : opt.scans, opt.calib, dets, cfg.extract);
      FrameResult res;
      if (opt.points) {
        const fs::path file = *opt.points / (id + ".txt");
        const auto groups = parse_object_points(kitti::read_text_file(file), file.string());
        std::map<std::size_t, std::vector<Vec3d>> by_idx(groups.begin(), groups.end());
        res.frame_id = id;
        for (std::size_t i = 0; i < in.detections.size(); ++i) {
          ObjectOutcome o;
          o.det_index = i;
          if (auto it = by_idx.find(i); it != by_idx.end()) {
            o.points = ObjectPoints::from_points(it->second, cfg.fit.loss.density_radius);
          } else {
            o.skip = SkipReason::kEmptyFrustum;
            o.detail = "no extracted points";
          }
          res.objects.push_back(std::move(o));
        }
        fit_extracted(res, in, cfg.fit);
      } else {
        res = fit_frame(in, cfg.extract, cfg.fit, cfg.seed);
      }

      FrameRecord& rec = records[f];
      rec.frame_id = id;
      rec.objects = static_cast<int>(res.objects.size());
      std::vector<kitti::KittiLabel> labels;
      for (const auto& o : res.objects) {
        if (o.fit) {
          const Detection2D& det = in.detections[o.det_index];
          labels.push_back(kitti::label_from_box(o.fit->box, det.cls, det.bbox, o.fit->score));
          ++rec.fitted;
        } else if (o.skip) {
          rec.skips.emplace_back(o.det_index, o);
        }
      }
      kitti::write_labels(opt.out / (id + ".txt"), labels);
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });

    json inputs = {{"calib", opt.calib.string()}, {"dets", opt.dets.string()}};
    if (opt.points) inputs["points"] = opt.points->string();
    else inputs["scans"] = opt.scans.string();
    kitti::write_text_file_atomic(opt.out / "manifest.json",
                                  manifest_json("fit", cfg, inputs, records).dump(2) + "\n");
    log << "fit: " << frames.size() << " frames -> " << opt.out.string() << "\n";
    return kExitOk;
  });
}

int run_eval(const EvalOptions& opt, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    const auto frames = kitti::load_frames(opt.dets, opt.gt);
    const kitti::EvalReport r = kitti::evaluate(frames, opt.cfg);
    out << kitti::format_report_text(r);
    const std::string j = kitti::format_report_json(r);
    out << j << "\n";
    if (opt.json_out) kitti::write_text_file_atomic(*opt.json_out, j + "\n");
    return kExitOk;
  });
}

int run_simulate(const SimulateOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    synth::DatasetSpec spec = opt.spec
        ? synth::parse_dataset_spec(kitti::read_text_file(*opt.spec), opt.spec->string())
        : synth::parse_dataset_spec("", "<default>");
    if (opt.seed) spec.seed = *opt.seed;
    const auto ids = synth::export_dataset(spec, opt.out);
    log << "simulate: " << ids.size() << " frames -> " << opt.out.string() << "\n";
    return kExitOk;
  });
}

GradcheckReport run_gradcheck_suite(const GradcheckOptions& opt) {
  GradcheckReport rep;
  const LossConfig loss;
  const double h = loss.h_fd;
  synth::SceneFamily fam;
  Rng rng(opt.seed);
  std::uniform_real_distribution<double> offset(-1.0, 1.0);

  auto central = [&](const ObjectPoints& pts, const BevRectd& rect, double step) {
    return balanced_loss_gradient_fd(pts, rect, loss, step);
  };
  for (int attempt = 0; rep.configurations < opt.count && attempt < 100 * opt.count; ++attempt) {
    synth::SceneSpec spec = synth::random_single_car(fam, rng());
    spec.with_ground = false;
    const synth::SynthScene scene = synth::generate_scene(spec, rng());
    const auto obj = scene.object_points(0);
    if (obj.size() < 4) continue;
    const ObjectPoints pts = finalize_object_points(obj, ExtractConfig{}, rng());

    Box3D box = scene.gt_boxes.front();
    box.location.x() += offset(rng);
    box.location.z() += offset(rng);
    const BevRectd rect = bev_rect_of(box);
    if (!assignment_stable(pts, rect, loss.camera_origin, 2 * h)) {
      ++rep.rejected_unstable;
      continue;
    }
    const Vec2d reference = (4.0 * central(pts, rect, h / 2) - central(pts, rect, h)) / 3.0;
    const LossReport lr = total_loss(pts, box, loss);
    const Vec2d fd{lr.grad_x, lr.grad_z};
    const Vec2d analytic = balanced_loss_gradient(pts, rect, loss);
    const double denom = std::max(reference.norm(), 1e-12);
    rep.max_rel_err_fd = std::max(rep.max_rel_err_fd, (fd - reference).norm() / denom);
    rep.max_rel_err_analytic = std::max(rep.max_rel_err_analytic, (analytic - reference).norm() / denom);
    ++rep.configurations;
  }
  return rep;
}

int run_gradcheck(const GradcheckOptions& opt, std::ostream& out) {
  const GradcheckReport r = run_gradcheck_suite(opt);
  const double worst = std::max(r.max_rel_err_fd, r.max_rel_err_analytic);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "gradcheck: %d configurations (%d unstable rejected)\n"
                "max rel err (central differences): %.3e\n"
                "max rel err (closed form):         %.3e\n",
                r.configurations, r.rejected_unstable, r.max_rel_err_fd, r.max_rel_err_analytic);
  out << buf;
  if (r.configurations < opt.count || !(worst < opt.tolerance)) {
    out << "gradcheck: FAILED (tolerance " << opt.tolerance << ")\n";
    return kExitGradcheck;
  }
  out << "gradcheck: ok\n";
  return kExitOk;
}

}  // namespace weakbox3d::app
