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

#include "weakbox3d/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>

#include "json.hpp"

#include "weakbox3d/errors.hpp"

namespace weakbox3d::kitti {

namespace fs = std::filesystem;

DifficultyLimits limits_of(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return {40.0, 0, 0.15};
    case Difficulty::kModerate: return {25.0, 1, 0.30};
    case Difficulty::kHard: return {25.0, 2, 0.50};
  }
  return {25.0, 2, 0.50};
}

namespace {

bool is_neighbour_class(const std::string& cls, const std::string& type) {
  return (cls == "Car" && type == "Van") || (cls == "Pedestrian" && type == "Person_sitting");
}

enum class GtState { kValid, kIgnored, kIrrelevant };

GtState classify_gt(const KittiLabel& gt, const std::string& cls, const DifficultyLimits& lim) {
  if (gt.type == cls) {
    const bool ok = gt.bbox.height() >= lim.min_height && gt.occluded <= lim.max_occlusion &&
                    gt.truncated <= lim.max_truncation;
    return ok ? GtState::kValid : GtState::kIgnored;
  }
  if (is_neighbour_class(cls, gt.type)) return GtState::kIgnored;
  return GtState::kIrrelevant;
}

double dontcare_overlap(const BBox2D& det, const BBox2D& region) {
  const double iw = std::min(det.x2, region.x2) - std::max(det.x1, region.x1);
  const double ih = std::min(det.y2, region.y2) - std::max(det.y1, region.y1);
  if (iw <= 0 || ih <= 0) return 0;
  const double area = (det.x2 - det.x1) * (det.y2 - det.y1);
  return area > 0 ? iw * ih / area : 0;
}

struct KeyedRecord {
  MatchRecord rec;
  std::size_t frame = 0;
  std::size_t det = 0;
};

}  // namespace

double box_iou(const KittiLabel& a, const KittiLabel& b, IouMode mode) {
  return mode == IouMode::kBev ? bev_iou(a.box(), b.box()) : iou_3d(a.box(), b.box());
}

MatchSummary match_detections(const std::vector<FrameLabels>& frames, const EvalConfig& cfg,
                              Difficulty difficulty) {
  const DifficultyLimits lim = limits_of(difficulty);
  MatchSummary summary;
  std::vector<KeyedRecord> all;

  for (std::size_t f = 0; f < frames.size(); ++f) {
    const FrameLabels& fr = frames[f];
    std::vector<GtState> state;
    std::vector<const BBox2D*> dontcare;
    for (const auto& g : fr.gt) {
      state.push_back(classify_gt(g, cfg.cls, lim));
      if (state.back() == GtState::kValid) ++summary.n_gt;
      if (g.type == "DontCare") dontcare.push_back(&g.bbox);
    }

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < fr.dets.size(); ++i) {
      const KittiLabel& d = fr.dets[i];
      if (d.type != cfg.cls || d.bbox.height() < lim.min_height) continue;
      order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return fr.dets[a].score.value_or(0) > fr.dets[b].score.value_or(0);
    });

    std::vector<bool> matched(fr.gt.size(), false);
    for (std::size_t di : order) {
      const KittiLabel& d = fr.dets[di];
      double best_iou = -1;
      std::size_t best = fr.gt.size();
      bool hits_ignored = false;
      for (std::size_t gi = 0; gi < fr.gt.size(); ++gi) {
        if (state[gi] == GtState::kIrrelevant) continue;
        const double iou = box_iou(d, fr.gt[gi], cfg.mode);
        if (iou < cfg.iou_threshold) continue;
        if (state[gi] == GtState::kIgnored) {
          hits_ignored = true;
        } else if (!matched[gi] && iou > best_iou) {
          best_iou = iou;
          best = gi;
        }
      }
      KeyedRecord kr{{d.score.value_or(0), false}, f, di};
      if (best < fr.gt.size()) {
        matched[best] = true;
        kr.rec.true_positive = true;
      } else if (hits_ignored) {
        continue;
      } else if (std::any_of(dontcare.begin(), dontcare.end(), [&](const BBox2D* r) {
                   return dontcare_overlap(d.bbox, *r) >= 0.5;
                 })) {
        continue;
      }
      all.push_back(kr);
    }
  }

  std::stable_sort(all.begin(), all.end(), [](const KeyedRecord& a, const KeyedRecord& b) {
    if (a.rec.score != b.rec.score) return a.rec.score > b.rec.score;
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.det < b.det;
  });
  summary.records.reserve(all.size());
  for (const auto& k : all) summary.records.push_back(k.rec);
  return summary;
}

double interpolated_ap(const MatchSummary& m, ApMetric metric) {
  if (m.n_gt <= 0) return 0.0;
  const std::size_t n = m.records.size();
  std::vector<double> precision(n);
  std::vector<double> recall(n);
  int tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (m.records[k].true_positive) ++tp;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / static_cast<double>(m.n_gt);
  }
  // precision envelope: best precision at recall >= recall[k]
  std::vector<double> envelope(precision);
  for (std::size_t k = n; k-- > 1;) envelope[k - 1] = std::max(envelope[k - 1], envelope[k]);

  const int first = metric == ApMetric::kAp40 ? 1 : 0;
  const int last = metric == ApMetric::kAp40 ? 40 : 10;
  const double denom = metric == ApMetric::kAp40 ? 40.0 : 10.0;
  double sum = 0;
  std::size_t k = 0;
  for (int i = first; i <= last; ++i) {
    const double r = static_cast<double>(i) / denom;
    while (k < n && recall[k] < r) ++k;
    if (k < n) sum += envelope[k];
  }
  return sum / static_cast<double>(last - first + 1);
}

double average_precision(const std::vector<FrameLabels>& frames, const EvalConfig& cfg,
                         Difficulty difficulty) {
  return interpolated_ap(match_detections(frames, cfg, difficulty), cfg.metric);
}

EvalReport evaluate(const std::vector<FrameLabels>& frames, const EvalConfig& cfg) {
  EvalReport r;
  r.cfg = cfg;
  for (int d = 0; d < 3; ++d) {
    const MatchSummary m = match_detections(frames, cfg, static_cast<Difficulty>(d));
    r.ap[static_cast<std::size_t>(d)] = interpolated_ap(m, cfg.metric);
    r.n_gt[static_cast<std::size_t>(d)] = m.n_gt;
  }
  return r;
}

std::string to_string(ApMetric m) { return m == ApMetric::kAp40 ? "AP40" : "AP11"; }
std::string to_string(IouMode m) { return m == IouMode::kBev ? "BEV" : "3D"; }

std::string format_report_text(const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s %s@%.2f %s  easy %.4f  moderate %.4f  hard %.4f\n",
                r.cfg.cls.c_str(), to_string(r.cfg.mode).c_str(), r.cfg.iou_threshold,
                to_string(r.cfg.metric).c_str(), r.ap[0], r.ap[1], r.ap[2]);
  return buf;
}

std::string format_report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["class"] = r.cfg.cls;
  j["mode"] = to_string(r.cfg.mode);
  j["iou"] = r.cfg.iou_threshold;
  j["metric"] = to_string(r.cfg.metric);
  j["easy"] = r.ap[0];
  j["moderate"] = r.ap[1];
  j["hard"] = r.ap[2];
  j["n_gt"] = {{"easy", r.n_gt[0]}, {"moderate", r.n_gt[1]}, {"hard", r.n_gt[2]}};
  return j.dump();
}

std::vector<FrameLabels> load_frames(const fs::path& det_dir, const fs::path& gt_dir) {
  if (!fs::is_directory(gt_dir)) throw IoError("not a directory: " + gt_dir.string());
  if (!fs::is_directory(det_dir)) throw IoError("not a directory: " + det_dir.string());
  std::set<std::string> ids;
  for (const auto& e : fs::directory_iterator(gt_dir)) {
    if (e.path().extension() == ".txt") ids.insert(e.path().stem().string());
  }
  std::vector<FrameLabels> frames;
  for (const auto& id : ids) {
    FrameLabels fl;
    fl.frame_id = id;
    fl.gt = parse_labels(gt_dir / (id + ".txt"));
    const fs::path det = det_dir / (id + ".txt");
    if (fs::exists(det)) fl.dets = parse_labels(det);
    frames.push_back(std::move(fl));
  }
  return frames;
}

}  // namespace weakbox3d::kitti
