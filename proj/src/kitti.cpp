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

#include "weakbox3d/kitti.hpp"

#include <png.h>

#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "weakbox3d/errors.hpp"
#include "weakbox3d/orientation.hpp"

namespace weakbox3d::kitti {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_char(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& tok, const std::string& origin, int line_no) {
  double v = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(origin, line_no, "not a number: '" + tok + "'");
  }
  return v;
}

int to_int(const std::string& tok, const std::string& origin, int line_no) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(origin, line_no, "not an integer: '" + tok + "'");
  }
  return v;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

Eigen::Matrix4d padded(const std::vector<double>& v, int rows, int cols) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

}  // namespace

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

const std::vector<double>* CalibFile::find(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

CalibFile parse_calib_text(const std::string& text, const std::string& origin) {
  CalibFile calib;
  int line_no = 0;
  for (const std::string& raw : split_lines(text)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ParseError(origin, line_no, "missing ':'");
    const std::string key = trim(line.substr(0, colon));
    std::vector<double> values;
    for (const auto& tok : split_ws(line.substr(colon + 1))) {
      values.push_back(to_double(tok, origin, line_no));
    }
    std::size_t expected = 0;
    if (key.size() == 2 && key[0] == 'P') expected = 12;
    if (key == "R0_rect" || key == "R_rect") expected = 9;
    if (key.rfind("Tr_", 0) == 0) expected = 12;
    if (expected != 0 && values.size() != expected) {
      throw ParseError(origin, line_no,
                       key + ": expected " + std::to_string(expected) + " floats, got " +
                           std::to_string(values.size()));
    }
    calib.entries.emplace_back(key, std::move(values));
  }
  return calib;
}

CalibFile parse_calib_file(const fs::path& path) {
  return parse_calib_text(read_text_file(path), path.string());
}

std::string format_calib(const CalibFile& calib) {
  std::string out;
  char buf[64];
  for (const auto& [key, values] : calib.entries) {
    out += key + ":";
    for (double v : values) {
      std::snprintf(buf, sizeof buf, " %.12e", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

void write_calib_file(const fs::path& path, const CalibFile& calib) {
  write_text_file_atomic(path, format_calib(calib));
}

CameraModel camera_from_calib(const CalibFile& calib, int width, int height) {
  const auto* p2 = calib.find("P2");
  const auto* r0 = calib.find("R0_rect");
  if (r0 == nullptr) r0 = calib.find("R_rect");
  const auto* tr = calib.find("Tr_velo_to_cam");
  if (tr == nullptr) tr = calib.find("Tr_velo_cam");
  if (p2 == nullptr || r0 == nullptr || tr == nullptr) {
    throw ParseError("<calib>", 0, "need P2, R0_rect and Tr_velo_to_cam");
  }
  CameraModel cam;
  cam.fx = (*p2)[0];
  cam.cx = (*p2)[2];
  cam.fy = (*p2)[5];
  cam.cy = (*p2)[6];
  cam.extrinsic = padded(*r0, 3, 3) * padded(*tr, 3, 4);
  cam.width = width;
  cam.height = height;
  return cam;
}

CalibFile calib_from_camera(const CameraModel& cam) {
  const std::vector<double> p = {cam.fx, 0, cam.cx, 0, 0, cam.fy, cam.cy, 0, 0, 0, 1, 0};
  std::vector<double> tr;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) tr.push_back(cam.extrinsic(r, c));
  }
  CalibFile calib;
  calib.entries = {{"P0", p},
                   {"P1", p},
                   {"P2", p},
                   {"P3", p},
                   {"R0_rect", {1, 0, 0, 0, 1, 0, 0, 0, 1}},
                   {"Tr_velo_to_cam", tr},
                   {"Tr_imu_to_velo", {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0}}};
  return calib;
}

CameraModel parse_calib(const fs::path& path) { return camera_from_calib(parse_calib_file(path)); }

RawScan parse_scan(const fs::path& path) {
  const std::string bytes = read_text_file(path);
  if (bytes.size() % 16 != 0) {
    throw ParseError(path.string(), 0,
                     "size " + std::to_string(bytes.size()) + " is not a multiple of 16 bytes");
  }
  static_assert(sizeof(LidarPoint) == 16);
  RawScan scan;
  scan.points.resize(bytes.size() / 16);
  // little-endian host assumed, matching the on-disk layout
  std::memcpy(scan.points.data(), bytes.data(), bytes.size());
  return scan;
}

void write_scan(const fs::path& path, const RawScan& scan) {
  std::string bytes(scan.points.size() * 16, '\0');
  std::memcpy(bytes.data(), scan.points.data(), bytes.size());
  write_text_file_atomic(path, bytes);
}

Box3D KittiLabel::box() const {
  Box3D b;
  b.location = location;
  b.h = h;
  b.w = w;
  b.l = l;
  b.theta_y = rotation_y;
  return b;
}

KittiLabel parse_label_line(const std::string& line, const std::string& origin, int line_no) {
  const auto tok = split_ws(line);
  if (tok.size() != 15 && tok.size() != 16) {
    throw ParseError(origin, line_no, "expected 15 or 16 fields, got " + std::to_string(tok.size()));
  }
  const auto num = [&](std::size_t i) { return to_double(tok[i], origin, line_no); };
  KittiLabel l;
  l.type = tok[0];
  l.truncated = num(1);
  l.occluded = to_int(tok[2], origin, line_no);
  if (l.occluded < -1 || l.occluded > 3) throw ParseError(origin, line_no, "occluded out of range");
  l.alpha = num(3);
  l.bbox = {num(4), num(5), num(6), num(7)};
  l.h = num(8);
  l.w = num(9);
  l.l = num(10);
  l.location = {num(11), num(12), num(13)};
  l.rotation_y = num(14);
  if (tok.size() == 16) l.score = num(15);
  return l;
}

std::vector<KittiLabel> parse_labels_text(const std::string& text, const std::string& origin) {
  std::vector<KittiLabel> out;
  int line_no = 0;
  for (const std::string& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    out.push_back(parse_label_line(line, origin, line_no));
  }
  return out;
}

std::vector<KittiLabel> parse_labels(const fs::path& path) {
  return parse_labels_text(read_text_file(path), path.string());
}

std::string format_label(const KittiLabel& l) {
  std::string s = l.type;
  if (l.type == "DontCare") {
    s += " -1 -1 -10 " + fmt2(l.bbox.x1) + " " + fmt2(l.bbox.y1) + " " + fmt2(l.bbox.x2) + " " +
         fmt2(l.bbox.y2) + " -1 -1 -1 -1000 -1000 -1000 -10";
  } else {
    s += " " + fmt2(l.truncated) + " " + std::to_string(l.occluded) + " " + fmt2(l.alpha);
    for (double v : {l.bbox.x1, l.bbox.y1, l.bbox.x2, l.bbox.y2, l.h, l.w, l.l, l.location.x(),
                     l.location.y(), l.location.z(), l.rotation_y}) {
      s += " " + fmt2(v);
    }
  }
  if (l.score) s += " " + fmt2(*l.score);
  return s;
}

std::string format_labels(const std::vector<KittiLabel>& labels) {
  std::string out;
  for (const auto& l : labels) out += format_label(l) + "\n";
  return out;
}

void write_labels(const fs::path& path, const std::vector<KittiLabel>& labels) {
  write_text_file_atomic(path, format_labels(labels));
}

KittiLabel label_from_box(const Box3D& box, const std::string& type, const BBox2D& bbox,
                          std::optional<double> score) {
  KittiLabel l;
  l.type = type;
  l.truncated = 0;
  l.occluded = 0;
  l.alpha = global_to_local(box.theta_y, box.bev_center());
  l.bbox = bbox;
  l.h = box.h;
  l.w = box.w;
  l.l = box.l;
  l.location = box.location;
  l.rotation_y = wrap_angle(box.theta_y);
  l.score = score;
  return l;
}

std::map<std::string, std::vector<Detection2D>> parse_detections(const fs::path& path) {
  const std::string text = read_text_file(path);
  const std::string origin = path.string();
  std::map<std::string, std::vector<Detection2D>> out;
  int line_no = 0;
  for (const std::string& raw : split_lines(text)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_char(line, ',');
    if (line_no == 1 && trim(f[0]) == "frame_id") continue;
    if (f.size() != 7 && f.size() != 8) {
      throw ParseError(origin, line_no, "expected 7 or 8 comma-separated fields");
    }
    Detection2D d;
    d.frame_id = trim(f[0]);
    d.cls = trim(f[1]);
    d.score = to_double(trim(f[2]), origin, line_no);
    d.bbox = {to_double(trim(f[3]), origin, line_no), to_double(trim(f[4]), origin, line_no),
              to_double(trim(f[5]), origin, line_no), to_double(trim(f[6]), origin, line_no)};
    if (f.size() == 8 && !trim(f[7]).empty()) {
      fs::path mask_path = trim(f[7]);
      if (mask_path.is_relative()) mask_path = path.parent_path() / mask_path;
      d.mask = read_mask_png(mask_path);
    }
    out[d.frame_id].push_back(std::move(d));
  }
  return out;
}

std::string format_detection(const Detection2D& d, const std::string& mask_path) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%.4f,%.4f,%.4f,%.4f", d.frame_id.c_str(),
                d.cls.c_str(), d.score, d.bbox.x1, d.bbox.y1, d.bbox.x2, d.bbox.y2);
  std::string s = buf;
  if (!mask_path.empty()) s += "," + mask_path;
  return s;
}

InstanceMask read_mask_png(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError("cannot read mask " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  InstanceMask m;
  m.width = static_cast<int>(image.width);
  m.height = static_cast<int>(image.height);
  m.data.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, m.data.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode mask " + path.string() + ": " + image.message);
  }
  return m;
}

void write_mask_png(const fs::path& path, const InstanceMask& mask) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(mask.width);
  image.height = static_cast<png_uint_32>(mask.height);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, mask.data.data(), 0, nullptr)) {
    throw IoError("cannot write mask " + path.string() + ": " + image.message);
  }
}

}  // namespace weakbox3d::kitti
