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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "weakbox3d/config.hpp"
#include "weakbox3d/evaluation.hpp"

namespace weakbox3d::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitBadArgs = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitGradcheck = 4;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kJobsEnv = "WEAKBOX3D_JOBS";

/// `--jobs` default: WEAKBOX3D_JOBS when set and positive, else 1.
int default_jobs();

/// Reads a `key = value` config file, or the `config_text` of a run manifest
/// (`.json`), on top of `cfg`.
void load_config_file(PipelineConfig& cfg, const std::filesystem::path& path);

struct ExtractOptions {
  std::filesystem::path scans;
  std::filesystem::path calib;
  std::filesystem::path dets;
  std::filesystem::path out;
  std::optional<std::filesystem::path> config;
  std::vector<std::string> overrides;  // `key=value`, applied after `config`
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

struct FitOptions {
  std::optional<std::filesystem::path> points;
  std::filesystem::path scans;
  std::filesystem::path calib;
  std::filesystem::path dets;
  std::filesystem::path out;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> class_dims;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  bool no_ray = false;
  bool no_balancing = false;
  bool center_only = false;
  int jobs = 1;
};

struct EvalOptions {
  std::filesystem::path dets;
  std::filesystem::path gt;
  kitti::EvalConfig cfg;
  std::optional<std::filesystem::path> json_out;
};

struct SimulateOptions {
  std::optional<std::filesystem::path> spec;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
};

struct GradcheckOptions {
  std::uint64_t seed = 0;
  int count = 100;
  double tolerance = 1e-3;
};

struct GradcheckReport {
  int configurations = 0;
  int rejected_unstable = 0;
  double max_rel_err_fd = 0;        // LossReport central differences
  double max_rel_err_analytic = 0;  // closed-form gradient
};

/// Random assignment-stable configurations compared against Richardson
/// extrapolation of central differences.
GradcheckReport run_gradcheck_suite(const GradcheckOptions& opt);

int run_extract(const ExtractOptions& opt, std::ostream& log);
int run_fit(const FitOptions& opt, std::ostream& log);
int run_eval(const EvalOptions& opt, std::ostream& out, std::ostream& log);
int run_simulate(const SimulateOptions& opt, std::ostream& log);
int run_gradcheck(const GradcheckOptions& opt, std::ostream& out);

/// Frame ids: stems of `*.bin` files under `scans`, sorted.
std::vector<std::string> list_frames(const std::filesystem::path& scans);

/// `obj_idx x y z` rows.
std::string format_object_points(const std::vector<std::pair<std::size_t, ObjectPoints>>& objs);
std::vector<std::pair<std::size_t, std::vector<Vec3d>>> parse_object_points(
    const std::string& text, const std::string& origin);

}  // namespace weakbox3d::app
