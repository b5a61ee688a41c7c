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

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "json.hpp"

#include "weakbox3d/evaluation.hpp"

using namespace weakbox3d;
using namespace weakbox3d::kitti;

namespace {

KittiLabel car_label(double x, double z, double theta, std::optional<double> score = {},
                     double bbox_h = 60, int occluded = 0, double truncated = 0) {
  KittiLabel l;
  l.type = "Car";
  l.truncated = truncated;
  l.occluded = occluded;
  l.bbox = {100, 100, 200, 100 + bbox_h};
  l.h = 1.6;
  l.w = 1.8;
  l.l = 4.0;
  l.location = {x, 1.65, z};
  l.rotation_y = theta;
  l.score = score;
  return l;
}

struct Scored {
  double score;
  bool tp;
  std::size_t frame;
  std::size_t det;
};

// Sort, sweep, interpolate: every piece written out independently.
double brute_force_ap40(const std::vector<FrameLabels>& frames, double thr) {
  std::vector<Scored> all;
  int n_gt = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& fr = frames[f];
    n_gt += static_cast<int>(fr.gt.size());
    std::vector<std::size_t> idx(fr.dets.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return *fr.dets[a].score > *fr.dets[b].score; });
    std::vector<bool> used(fr.gt.size(), false);
    for (std::size_t d : idx) {
      int best = -1;
      double best_iou = -1;
      for (std::size_t g = 0; g < fr.gt.size(); ++g) {
        const double iou = bev_iou(fr.dets[d].box(), fr.gt[g].box());
        if (!used[g] && iou >= thr && iou > best_iou) {
          best_iou = iou;
          best = static_cast<int>(g);
        }
      }
      if (best >= 0) used[static_cast<std::size_t>(best)] = true;
      all.push_back({*fr.dets[d].score, best >= 0, f, d});
    }
  }
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.det < b.det;
  });
  if (n_gt == 0) return 0;
  double sum = 0;
  for (int i = 1; i <= 40; ++i) {
    const double r = i / 40.0;
    double best = 0;
    int tp = 0;
    for (std::size_t k = 0; k < all.size(); ++k) {
      tp += all[k].tp;
      const double recall = static_cast<double>(tp) / n_gt;
      const double precision = static_cast<double>(tp) / static_cast<double>(k + 1);
      if (recall >= r) best = std::max(best, precision);
    }
    sum += best;
  }
  return sum / 40;
}

}  // namespace

TEST(Ap, HandCases) {
  EvalConfig cfg;
  FrameLabels one{"0", {car_label(0, 10, 0)}, {car_label(0.1, 10, 0, 0.9)}};
  EXPECT_EQ(average_precision({one}, cfg, Difficulty::kEasy), 1.0);
  FrameLabels none{"0", {car_label(0, 10, 0)}, {}};
  EXPECT_EQ(average_precision({none}, cfg, Difficulty::kEasy), 0.0);
  FrameLabels half{"0", {car_label(0, 10, 0), car_label(5, 20, 0)}, {car_label(0, 10, 0, 0.9)}};
  EXPECT_EQ(average_precision({half}, cfg, Difficulty::kEasy), 0.5);
  cfg.metric = ApMetric::kAp11;
  // recall points 0, 0.1 .. 0.5 reach precision 1: 6 of 11
  EXPECT_DOUBLE_EQ(average_precision({half}, cfg, Difficulty::kEasy), 6.0 / 11.0);
}

TEST(Ap, MatchesBruteForce) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pos(-6, 6), jitter(-1.2, 1.2), ang(-3.14, 3.14), score(0, 1);
  std::uniform_int_distribution<int> count(0, 5), nframes(1, 3);
  EvalConfig cfg;
  for (int t = 0; t < 200; ++t) {
    std::vector<FrameLabels> frames;
    const int nf = nframes(rng);
    for (int f = 0; f < nf; ++f) {
      FrameLabels fr;
      fr.frame_id = std::to_string(f);
      const int ng = count(rng);
      for (int g = 0; g < ng; ++g) fr.gt.push_back(car_label(pos(rng), 20 + pos(rng), ang(rng)));
      const int nd = count(rng);
      for (int d = 0; d < nd; ++d) {
        // half the detections near a GT, the rest random; scores sometimes tie
        double s = std::round(score(rng) * 8) / 8;
        if (!fr.gt.empty() && d % 2 == 0) {
          const auto& g = fr.gt[static_cast<std::size_t>(d) % fr.gt.size()];
          fr.dets.push_back(car_label(g.location.x() + jitter(rng), g.location.z() + jitter(rng),
                                      g.rotation_y + jitter(rng) / 4, s));
        } else {
          fr.dets.push_back(car_label(pos(rng), 20 + pos(rng), ang(rng), s));
        }
      }
      frames.push_back(fr);
    }
    EXPECT_EQ(average_precision(frames, cfg, Difficulty::kEasy), brute_force_ap40(frames, 0.5)) << "case " << t;
  }
}

TEST(Ap, MonotoneUnderRemoval) {
  EvalConfig cfg;
  FrameLabels fr{"0",
                 {car_label(0, 10, 0), car_label(5, 20, 0), car_label(-5, 15, 0)},
                 {car_label(0, 10, 0, 0.9), car_label(9, 30, 0, 0.8), car_label(5, 20, 0, 0.7),
                  car_label(-5, 15, 0, 0.3)}};
  const double base = average_precision({fr}, cfg, Difficulty::kEasy);
  FrameLabels no_fp = fr;
  no_fp.dets.erase(no_fp.dets.begin() + 1);
  EXPECT_GE(average_precision({no_fp}, cfg, Difficulty::kEasy), base);
  FrameLabels no_tp = fr;
  no_tp.dets.erase(no_tp.dets.begin() + 2);
  EXPECT_LE(average_precision({no_tp}, cfg, Difficulty::kEasy), base);
}

TEST(Ap, DifficultyFiltering) {
  EvalConfig cfg;
  // GT too small for easy: ignored there, so a matching detection is neither TP nor FP
  FrameLabels fr{"0", {car_label(0, 10, 0, {}, 30), car_label(5, 20, 0)},
                 {car_label(0, 10, 0, 0.9, 30), car_label(5, 20, 0, 0.8)}};
  const EvalReport r = evaluate({fr}, cfg);
  EXPECT_EQ(r.n_gt[0], 1);
  EXPECT_EQ(r.n_gt[1], 2);
  EXPECT_EQ(r.ap[0], 1.0);
  EXPECT_EQ(r.ap[1], 1.0);

  FrameLabels occluded{"0", {car_label(0, 10, 0, {}, 60, 2)}, {car_label(0, 10, 0, 0.9)}};
  const EvalReport o = evaluate({occluded}, cfg);
  EXPECT_EQ(o.n_gt[0], 0);
  EXPECT_EQ(o.n_gt[1], 0);
  EXPECT_EQ(o.n_gt[2], 1);
  EXPECT_EQ(o.ap[2], 1.0);
}

TEST(Ap, VanAndDontCareDropDetections) {
  EvalConfig cfg;
  KittiLabel van = car_label(0, 10, 0);
  van.type = "Van";
  KittiLabel dc;
  dc.type = "DontCare";
  dc.bbox = {400, 100, 600, 200};
  KittiLabel in_dc = car_label(30, 40, 0, 0.95);
  in_dc.bbox = {420, 120, 500, 190};
  FrameLabels fr{"0", {van, dc, car_label(5, 20, 0)},
                 {car_label(0, 10, 0, 0.99), in_dc, car_label(5, 20, 0, 0.5)}};
  EXPECT_EQ(average_precision({fr}, cfg, Difficulty::kModerate), 1.0);
}

TEST(Ap, ThreeDModeUsesHeight) {
  EvalConfig cfg;
  cfg.mode = IouMode::k3d;
  KittiLabel lifted = car_label(0, 10, 0, 0.9);
  lifted.location.y() -= 1.0;  // overlap 0.6 of 1.6: IoU 0.6 / 2.6 < 0.5
  FrameLabels fr{"0", {car_label(0, 10, 0)}, {lifted}};
  EXPECT_EQ(average_precision({fr}, cfg, Difficulty::kEasy), 0.0);
  cfg.mode = IouMode::kBev;
  EXPECT_EQ(average_precision({fr}, cfg, Difficulty::kEasy), 1.0);
}

TEST(Report, JsonShape) {
  EvalConfig cfg;
  FrameLabels fr{"0", {car_label(0, 10, 0)}, {car_label(0, 10, 0, 0.9)}};
  const auto j = nlohmann::json::parse(format_report_json(evaluate({fr}, cfg)));
  EXPECT_EQ(j["class"], "Car");
  EXPECT_EQ(j["mode"], "BEV");
  EXPECT_EQ(j["iou"], 0.5);
  EXPECT_EQ(j["metric"], "AP40");
  EXPECT_EQ(j["easy"], 1.0);
  EXPECT_TRUE(j.contains("moderate"));
  EXPECT_TRUE(j.contains("hard"));
  EXPECT_NE(format_report_text(evaluate({fr}, cfg)).find("moderate"), std::string::npos);
}
