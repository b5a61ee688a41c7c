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

#include <array>
#include <string>
#include <vector>

#include "weakbox3d/kitti.hpp"

namespace weakbox3d::kitti {

enum class Difficulty { kEasy = 0, kModerate = 1, kHard = 2 };
enum class ApMetric { kAp11, kAp40 };
enum class IouMode { kBev, k3d };

struct DifficultyLimits {
  double min_height;
  int max_occlusion;
  double max_truncation;
};

/// Official KITTI object benchmark limits.
DifficultyLimits limits_of(Difficulty d);

struct EvalConfig {
  std::string cls = "Car";
  double iou_threshold = 0.5;
  ApMetric metric = ApMetric::kAp40;
  IouMode mode = IouMode::kBev;
};

struct FrameLabels {
  std::string frame_id;
  std::vector<KittiLabel> gt;
  std::vector<KittiLabel> dets;
};

struct MatchRecord {
  double score = 0;
  bool true_positive = false;
};

struct MatchSummary {
  // global detection order: score-descending, ties by (frame, input) order
  std::vector<MatchRecord> records;
  int n_gt = 0;
};

/// Per-frame greedy matching in score order; each valid GT is matched at most
/// once. Detections hitting ignored GTs or DontCare regions are dropped.
MatchSummary match_detections(const std::vector<FrameLabels>& frames, const EvalConfig& cfg,
                              Difficulty difficulty);

/// Interpolated AP over the records (already in score order).
double interpolated_ap(const MatchSummary& matches, ApMetric metric);

double average_precision(const std::vector<FrameLabels>& frames, const EvalConfig& cfg,
                         Difficulty difficulty);

struct EvalReport {
  EvalConfig cfg;
  std::array<double, 3> ap{};  // easy, moderate, hard
  std::array<int, 3> n_gt{};
};

EvalReport evaluate(const std::vector<FrameLabels>& frames, const EvalConfig& cfg);

double box_iou(const KittiLabel& a, const KittiLabel& b, IouMode mode);

std::string to_string(ApMetric m);
std::string to_string(IouMode m);

/// Line-oriented text and a single JSON object per report.
std::string format_report_text(const EvalReport& r);
std::string format_report_json(const EvalReport& r);

/// Loads `<dir>/<frame>.txt` pairs; frames missing on the detection side have no detections.
std::vector<FrameLabels> load_frames(const std::filesystem::path& det_dir,
                                     const std::filesystem::path& gt_dir);

}  // namespace weakbox3d::kitti
