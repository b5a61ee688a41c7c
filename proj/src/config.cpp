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

#include "weakbox3d/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "weakbox3d/errors.hpp"

namespace weakbox3d {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* init_name(InitStrategy s) {
  switch (s) {
    case InitStrategy::kCentroid: return "centroid";
    case InitStrategy::kPushHalfWidth: return "push_half_width";
    case InitStrategy::kPushHalfLength: return "push_half_length";
  }
  return "centroid";
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

}  // namespace

std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& origin) {
  std::vector<KeyValue> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(origin, line_no, "expected 'key = value'");
    out.push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no});
  }
  return out;
}

double parse_double(const KeyValue& kv, const std::string& origin) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(kv.value.data(), kv.value.data() + kv.value.size(), v);
  if (ec != std::errc() || ptr != kv.value.data() + kv.value.size()) {
    throw ParseError(origin, kv.line, kv.key + ": not a number: '" + kv.value + "'");
  }
  return v;
}

long long parse_int(const KeyValue& kv, const std::string& origin) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(kv.value.data(), kv.value.data() + kv.value.size(), v);
  if (ec != std::errc() || ptr != kv.value.data() + kv.value.size()) {
    throw ParseError(origin, kv.line, kv.key + ": not an integer: '" + kv.value + "'");
  }
  return v;
}

bool parse_bool(const KeyValue& kv, const std::string& origin) {
  if (kv.value == "true" || kv.value == "1") return true;
  if (kv.value == "false" || kv.value == "0") return false;
  throw ParseError(origin, kv.line, kv.key + ": not a boolean: '" + kv.value + "'");
}

void apply_config(PipelineConfig& cfg, const std::vector<KeyValue>& kvs, const std::string& origin) {
  using Setter = std::function<void(const KeyValue&)>;
  auto dbl = [&](double& target) -> Setter {
    return [&target, &origin](const KeyValue& kv) { target = parse_double(kv, origin); };
  };
  auto integer = [&](int& target) -> Setter {
    return [&target, &origin](const KeyValue& kv) {
      target = static_cast<int>(parse_int(kv, origin));
    };
  };
  auto boolean = [&](bool& target) -> Setter {
    return [&target, &origin](const KeyValue& kv) { target = parse_bool(kv, origin); };
  };
  ExtractConfig& ex = cfg.extract;
  FitConfig& fit = cfg.fit;
  const std::map<std::string, Setter> setters = {
      {"seed", [&](const KeyValue& kv) { cfg.seed = static_cast<std::uint64_t>(parse_int(kv, origin)); }},
      {"min_depth", dbl(ex.min_depth)},
      {"ransac_threshold", dbl(ex.ransac_threshold)},
      {"ransac_iters", integer(ex.ransac_iters)},
      {"min_inlier_ratio", dbl(ex.min_inlier_ratio)},
      {"fallback_ground_height", dbl(ex.fallback_ground_height)},
      {"dbscan_eps", dbl(ex.dbscan_eps)},
      {"dbscan_min_pts", integer(ex.dbscan_min_pts)},
      {"min_object_points", integer(ex.min_object_points)},
      {"n_sample", integer(ex.n_sample)},
      {"R",
       [&](const KeyValue& kv) {
         ex.density_radius = parse_double(kv, origin);
         fit.loss.density_radius = ex.density_radius;
       }},
      {"lambda", dbl(fit.loss.lambda)},
      {"w_geom", dbl(fit.loss.w_geom)},
      {"w_ray", dbl(fit.loss.w_ray)},
      {"smooth_l1_beta", dbl(fit.loss.smooth_l1_beta)},
      {"use_balancing", boolean(fit.loss.use_balancing)},
      {"center_only", boolean(fit.loss.center_only)},
      {"h_fd", dbl(fit.loss.h_fd)},
      {"C", dbl(fit.offset_threshold)},
      {"bin_width", dbl(fit.bin_width)},
      {"step_size", dbl(fit.optimizer.step_size)},
      {"max_iters", integer(fit.optimizer.max_iters)},
      {"plateau_tol", dbl(fit.optimizer.plateau_tol)},
      {"plateau_iters", integer(fit.optimizer.plateau_iters)},
      {"adjust_y", boolean(fit.adjust_y)},
      {"multistart",
       [&](const KeyValue& kv) {
         fit.multistart.clear();
         for (const auto& name : split_commas(kv.value)) {
           if (name == "centroid") fit.multistart.push_back(InitStrategy::kCentroid);
           else if (name == "push_half_width") fit.multistart.push_back(InitStrategy::kPushHalfWidth);
           else if (name == "push_half_length") fit.multistart.push_back(InitStrategy::kPushHalfLength);
           else throw ParseError(origin, kv.line, "unknown init strategy '" + name + "'");
         }
         if (fit.multistart.empty()) throw ParseError(origin, kv.line, "empty multistart");
       }},
  };

  for (const auto& kv : kvs) {
    if (kv.key.rfind("dims.", 0) == 0) {
      const auto parts = split_commas(kv.value);
      if (parts.size() != 3) throw ParseError(origin, kv.line, kv.key + ": expected h,w,l");
      ClassDims d;
      double* fields[3] = {&d.h, &d.w, &d.l};
      for (std::size_t i = 0; i < 3; ++i) {
        *fields[i] = parse_double({kv.key, parts[i], kv.line}, origin);
        if (!(*fields[i] > 0)) throw ParseError(origin, kv.line, kv.key + ": dims must be positive");
      }
      fit.class_dims[kv.key.substr(5)] = d;
      continue;
    }
    const auto it = setters.find(kv.key);
    if (it == setters.end()) throw ParseError(origin, kv.line, "unknown key '" + kv.key + "'");
    it->second(kv);
  }
  if (!(ex.density_radius > 0)) throw ParseError(origin, 0, "R must be positive");
}

std::string format_config(const PipelineConfig& cfg) {
  const ExtractConfig& ex = cfg.extract;
  const FitConfig& fit = cfg.fit;
  std::ostringstream os;
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "seed = " << cfg.seed << "\n"
     << "min_depth = " << num(ex.min_depth) << "\n"
     << "ransac_threshold = " << num(ex.ransac_threshold) << "\n"
     << "ransac_iters = " << ex.ransac_iters << "\n"
     << "min_inlier_ratio = " << num(ex.min_inlier_ratio) << "\n"
     << "fallback_ground_height = " << num(ex.fallback_ground_height) << "\n"
     << "dbscan_eps = " << num(ex.dbscan_eps) << "\n"
     << "dbscan_min_pts = " << ex.dbscan_min_pts << "\n"
     << "min_object_points = " << ex.min_object_points << "\n"
     << "n_sample = " << ex.n_sample << "\n"
     << "R = " << num(ex.density_radius) << "\n"
     << "lambda = " << num(fit.loss.lambda) << "\n"
     << "w_geom = " << num(fit.loss.w_geom) << "\n"
     << "w_ray = " << num(fit.loss.w_ray) << "\n"
     << "smooth_l1_beta = " << num(fit.loss.smooth_l1_beta) << "\n"
     << "use_balancing = " << b(fit.loss.use_balancing) << "\n"
     << "center_only = " << b(fit.loss.center_only) << "\n"
     << "h_fd = " << num(fit.loss.h_fd) << "\n"
     << "C = " << num(fit.offset_threshold) << "\n"
     << "bin_width = " << num(fit.bin_width) << "\n"
     << "step_size = " << num(fit.optimizer.step_size) << "\n"
     << "max_iters = " << fit.optimizer.max_iters << "\n"
     << "plateau_tol = " << num(fit.optimizer.plateau_tol) << "\n"
     << "plateau_iters = " << fit.optimizer.plateau_iters << "\n"
     << "adjust_y = " << b(fit.adjust_y) << "\n";
  os << "multistart = ";
  for (std::size_t i = 0; i < fit.multistart.size(); ++i) {
    os << (i ? "," : "") << init_name(fit.multistart[i]);
  }
  os << "\n";
  for (const auto& [name, d] : fit.class_dims) {
    os << "dims." << name << " = " << num(d.h) << "," << num(d.w) << "," << num(d.l) << "\n";
  }
  return os.str();
}

}  // namespace weakbox3d
