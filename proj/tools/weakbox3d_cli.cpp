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

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "weakbox3d/app.hpp"

namespace app = weakbox3d::app;
namespace kitti = weakbox3d::kitti;

namespace {

void add_common(CLI::App* cmd, std::optional<std::filesystem::path>& config,
                std::vector<std::string>& overrides, int& jobs) {
  cmd->add_option("--config", config, "key = value config file or a run manifest")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", overrides, "override one config key (key=value), repeatable");
  cmd->add_option("--jobs,-j", jobs, "parallel frames (default: $WEAKBOX3D_JOBS or 1)")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Weakly supervised 3D box pseudo-labels from LiDAR and 2D detections"};
  cli.set_version_flag("--version", std::string(app::kToolVersion));
  cli.require_subcommand(1);

  app::ExtractOptions ex;
  ex.jobs = app::default_jobs();
  auto* extract = cli.add_subcommand("extract", "extract object LiDAR points per detection");
  extract->add_option("--scans", ex.scans, "directory of <frame>.bin scans")->required();
  extract->add_option("--calib", ex.calib, "directory of <frame>.txt calibrations")->required();
  extract->add_option("--dets", ex.dets, "2D detections CSV")->required();
  extract->add_option("--out", ex.out, "output directory")->required();
  extract->add_option("--seed", ex.seed, "sampling seed");
  add_common(extract, ex.config, ex.overrides, ex.jobs);

  app::FitOptions fit;
  fit.jobs = app::default_jobs();
  auto* fitcmd = cli.add_subcommand("fit", "fit 3D boxes and write KITTI labels");
  auto* points_opt = fitcmd->add_option("--points", fit.points, "extract output directory");
  auto* scans_opt = fitcmd->add_option("--scans", fit.scans, "directory of <frame>.bin scans");
  points_opt->excludes(scans_opt);
  fitcmd->add_option("--calib", fit.calib, "directory of <frame>.txt calibrations")->required();
  fitcmd->add_option("--dets", fit.dets, "2D detections CSV")->required();
  fitcmd->add_option("--out", fit.out, "label output directory")->required();
  fitcmd->add_option("--class-dims", fit.class_dims, "replace class dims (dims.<Class> = h,w,l)")
      ->check(CLI::ExistingFile);
  fitcmd->add_option("--seed", fit.seed, "sampling seed");
  fitcmd->add_flag("--no-ray", fit.no_ray, "drop the ray-tracing term");
  fitcmd->add_flag("--no-balancing", fit.no_balancing, "uniform point weights");
  fitcmd->add_flag("--center-only", fit.center_only, "center distance loss only");
  add_common(fitcmd, fit.config, fit.overrides, fit.jobs);

  app::EvalOptions ev;
  std::string metric = "ap40";
  std::string mode = "bev";
  auto* eval = cli.add_subcommand("eval", "KITTI-style average precision");
  eval->add_option("--dets", ev.dets, "detection label directory")->required();
  eval->add_option("--gt", ev.gt, "ground-truth label directory")->required();
  eval->add_option("--iou", ev.cfg.iou_threshold, "IoU threshold")->check(CLI::Range(0.0, 1.0));
  eval->add_option("--metric", metric, "ap40 or ap11")->check(CLI::IsMember({"ap40", "ap11"}));
  eval->add_option("--mode", mode, "bev or 3d")->check(CLI::IsMember({"bev", "3d"}));
  eval->add_option("--class", ev.cfg.cls, "object class");
  eval->add_option("--json", ev.json_out, "also write the JSON report here");

  app::SimulateOptions sim;
  auto* simulate = cli.add_subcommand("simulate", "export a synthetic KITTI-format dataset");
  simulate->add_option("--spec", sim.spec, "dataset spec file")->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out, "output directory")->required();
  simulate->add_option("--seed", sim.seed, "override the spec seed");

  app::GradcheckOptions gc;
  auto* gradcheck = cli.add_subcommand("gradcheck", "compare gradients with extrapolated differences");
  gradcheck->add_option("--seed", gc.seed, "configuration seed");
  gradcheck->add_option("--count", gc.count, "configurations")->check(CLI::PositiveNumber);
  gradcheck->add_option("--tol", gc.tolerance, "max relative error");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return app::kExitBadArgs;
  }

  if (*extract) return app::run_extract(ex, std::cerr);
  if (*fitcmd) {
    if (!fit.points && fit.scans.empty()) {
      std::cerr << "fit: one of --points or --scans is required\n";
      return app::kExitBadArgs;
    }
    return app::run_fit(fit, std::cerr);
  }
  if (*eval) {
    ev.cfg.metric = metric == "ap11" ? kitti::ApMetric::kAp11 : kitti::ApMetric::kAp40;
    ev.cfg.mode = mode == "3d" ? kitti::IouMode::k3d : kitti::IouMode::kBev;
    return app::run_eval(ev, std::cout, std::cerr);
  }
  if (*simulate) return app::run_simulate(sim, std::cerr);
  if (*gradcheck) return app::run_gradcheck(gc, std::cout);
  return app::kExitBadArgs;
}
