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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "weakbox3d/geom.hpp"
#include "weakbox3d/pointcloud.hpp"

namespace weakbox3d::kitti {

/// Calibration file entries in file order (`KEY: v0 v1 ...`).
struct CalibFile {
  std::vector<std::pair<std::string, std::vector<double>>> entries;

  const std::vector<double>* find(const std::string& key) const;
};

CalibFile parse_calib_file(const std::filesystem::path& path);
CalibFile parse_calib_text(const std::string& text, const std::string& origin = "<calib>");
std::string format_calib(const CalibFile& calib);
void write_calib_file(const std::filesystem::path& path, const CalibFile& calib);

/// Intrinsics from P2, extrinsic = R0_rect * Tr_velo_to_cam.
CameraModel camera_from_calib(const CalibFile& calib, int width = 1242, int height = 375);
CalibFile calib_from_camera(const CameraModel& cam);
CameraModel parse_calib(const std::filesystem::path& path);

/// Little-endian float32 quadruples, no header.
RawScan parse_scan(const std::filesystem::path& path);
void write_scan(const std::filesystem::path& path, const RawScan& scan);

struct KittiLabel {
  std::string type;
  double truncated = 0;
  int occluded = 0;
  double alpha = 0;
  BBox2D bbox;
  double h = 0;
  double w = 0;
  double l = 0;
  Vec3d location = Vec3d::Zero();
  double rotation_y = 0;
  std::optional<double> score;

  Box3D box() const;
};

KittiLabel parse_label_line(const std::string& line, const std::string& origin = "<label>",
                            int line_no = 0);
std::vector<KittiLabel> parse_labels_text(const std::string& text,
                                          const std::string& origin = "<label>");
std::vector<KittiLabel> parse_labels(const std::filesystem::path& path);

/// Fixed %.2f fields; DontCare rows keep the official integer placeholders.
std::string format_label(const KittiLabel& label);
std::string format_labels(const std::vector<KittiLabel>& labels);
void write_labels(const std::filesystem::path& path, const std::vector<KittiLabel>& labels);

/// Label for a fitted box; alpha is the observation angle of the box center.
KittiLabel label_from_box(const Box3D& box, const std::string& type, const BBox2D& bbox,
                          std::optional<double> score);

/// Detections CSV `frame_id,cls,score,x1,y1,x2,y2[,mask_path]`, grouped by
/// frame in order of first appearance. Relative mask paths resolve against
/// the CSV's directory.
std::map<std::string, std::vector<Detection2D>> parse_detections(const std::filesystem::path& path);
std::string format_detection(const Detection2D& det, const std::string& mask_path = {});

/// Single-channel (or any) PNG; a pixel is set when any channel is nonzero.
InstanceMask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const InstanceMask& mask);

std::string read_text_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename.
void write_text_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace weakbox3d::kitti
