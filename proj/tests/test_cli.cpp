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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"

#include "weakbox3d/app.hpp"
#include "weakbox3d/kitti.hpp"
#include "weakbox3d/synth.hpp"

using namespace weakbox3d;
namespace fs = std::filesystem;

namespace {

const std::string kCli = WEAKBOX3D_CLI;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path fresh(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("weakbox3d_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// A small noiseless dataset shared by several tests.
fs::path dataset(const std::string& name, int frames = 4) {
  const fs::path dir = fresh(name);
  std::ofstream(dir / "spec.txt") << "frames = " << frames << "\nseed = 3\n";
  EXPECT_EQ(run("simulate --spec " + q(dir / "spec.txt") + " --out " + q(dir / "ds")), 0);
  return dir;
}

}  // namespace

TEST(Cli, BadArgumentsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("extract --scans /nonexistent"), 2);
  EXPECT_EQ(run("eval --dets a --gt b --metric ap7"), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, MissingInputsExitThree) {
  const fs::path dir = fresh("missing");
  std::ofstream(dir / "d.csv") << "";
  EXPECT_EQ(run("extract --scans " + q(dir / "nope") + " --calib " + q(dir) + " --dets " + q(dir / "d.csv") +
                " --out " + q(dir / "o")),
            3);
  std::ofstream(dir / "bad.cfg") << "lambda = x\n";
  fs::create_directories(dir / "scans");
  EXPECT_EQ(run("extract --scans " + q(dir / "scans") + " --calib " + q(dir) + " --dets " + q(dir / "d.csv") +
                " --out " + q(dir / "o") + " --config " + q(dir / "bad.cfg")),
            3);
}

TEST(Cli, SimulateIsByteIdentical) {
  const fs::path dir = fresh("sim");
  ASSERT_EQ(run("simulate --out " + q(dir / "a") + " --seed 5"), 0);
  ASSERT_EQ(run("simulate --out " + q(dir / "b") + " --seed 5"), 0);
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), dir / "a");
    EXPECT_EQ(bytes_of(e.path()), bytes_of(dir / "b" / rel)) << rel;
  }
}

TEST(Cli, EmptyDetectionsGiveEmptyOutputs) {
  const fs::path dir = dataset("empty", 2);
  std::ofstream(dir / "none.csv") << "frame_id,cls,score,x1,y1,x2,y2\n";
  ASSERT_EQ(run("extract --scans " + q(dir / "ds/velodyne") + " --calib " + q(dir / "ds/calib") + " --dets " +
                q(dir / "none.csv") + " --out " + q(dir / "pts")),
            0);
  for (const auto& e : fs::directory_iterator(dir / "pts")) {
    if (e.path().extension() == ".txt") EXPECT_EQ(fs::file_size(e.path()), 0u);
  }
  EXPECT_TRUE(fs::exists(dir / "pts/manifest.json"));
}

TEST(Cli, ExtractMatchesGeneratorAndIsDeterministic) {
  const fs::path dir = dataset("extract");
  const std::string base = "extract --scans " + q(dir / "ds/velodyne") + " --calib " + q(dir / "ds/calib") +
                           " --dets " + q(dir / "ds/detections.csv") + " --seed 9";
  ASSERT_EQ(run(base + " --out " + q(dir / "p1")), 0);
  ASSERT_EQ(run(base + " --out " + q(dir / "p2") + " --jobs 3"), 0);
  const auto spec = synth::parse_dataset_spec(bytes_of(dir / "spec.txt"));
  const auto scenes = synth::dataset_scenes(spec);
  const auto dets = kitti::parse_detections(dir / "ds/detections.csv");
  for (std::size_t f = 0; f < scenes.size(); ++f) {
    char id[16];
    std::snprintf(id, sizeof id, "%06zu", f);
    const std::string text = bytes_of(dir / "p1" / (std::string(id) + ".txt"));
    EXPECT_EQ(text, bytes_of(dir / "p2" / (std::string(id) + ".txt")));
    // detection k of the frame is GT box k; each point must be one of its clean generator points
    for (const auto& [k, pts] : app::parse_object_points(text, id)) {
      const auto source = scenes[f].object_points(static_cast<int>(k), true);
      for (const auto& p : pts) {
        double best = 1e9;
        for (const auto& s : source) best = std::min(best, (s - p).norm());
        EXPECT_LT(best, 1e-4) << id << " object " << k;
      }
    }
  }
}

TEST(Cli, FitWritesLabelsAndSkipsVan) {
  const fs::path dir = dataset("fit", 2);
  // relabel the first detection of every frame as a Van
  std::istringstream in(bytes_of(dir / "ds/detections.csv"));
  std::ostringstream out;
  std::string line;
  std::set<std::string> seen;
  std::getline(in, line);
  out << line << "\n";
  while (std::getline(in, line)) {
    const std::string frame = line.substr(0, line.find(','));
    if (seen.insert(frame).second) line.replace(line.find(",Car,"), 5, ",Van,");
    out << line << "\n";
  }
  std::ofstream(dir / "vans.csv") << out.str();

  const std::string common = " --calib " + q(dir / "ds/calib") + " --dets " + q(dir / "vans.csv");
  ASSERT_EQ(run("fit --scans " + q(dir / "ds/velodyne") + common + " --out " + q(dir / "lab")), 0);
  const auto manifest = nlohmann::json::parse(bytes_of(dir / "lab/manifest.json"));
  int no_dims = 0;
  for (const auto& f : manifest["frames"]) {
    for (const auto& s : f["skips"]) no_dims += s["reason"] == "no-dims";
  }
  EXPECT_EQ(no_dims, 2);
  EXPECT_EQ(manifest["version"], app::kToolVersion);
  EXPECT_TRUE(manifest.contains("config_text"));
  EXPECT_EQ(kitti::parse_labels(dir / "lab/000000.txt").size(), 1u);

  // re-running from the manifest reproduces labels byte for byte
  ASSERT_EQ(run("fit --scans " + q(dir / "ds/velodyne") + common + " --out " + q(dir / "again") + " --config " +
                q(dir / "lab/manifest.json")),
            0);
  for (const char* id : {"000000.txt", "000001.txt"}) {
    EXPECT_EQ(bytes_of(dir / "lab" / id), bytes_of(dir / "again" / id));
  }
}

TEST(Cli, PointsPathAndEval) {
  const fs::path dir = dataset("pipeline");
  const std::string common = " --calib " + q(dir / "ds/calib") + " --dets " + q(dir / "ds/detections.csv");
  ASSERT_EQ(run("extract --scans " + q(dir / "ds/velodyne") + common + " --out " + q(dir / "pts")), 0);
  ASSERT_EQ(run("fit --points " + q(dir / "pts") + common + " --out " + q(dir / "lab")), 0);
  ASSERT_EQ(run("fit --scans " + q(dir / "ds/velodyne") + common + " --out " + q(dir / "lab2")), 0);
  for (const auto& e : fs::directory_iterator(dir / "lab")) {
    if (e.path().filename() == "manifest.json") continue;
    EXPECT_EQ(bytes_of(e.path()), bytes_of(dir / "lab2" / e.path().filename()));
  }
  ASSERT_EQ(run("eval --dets " + q(dir / "lab") + " --gt " + q(dir / "ds/label_2") + " --json " +
                q(dir / "report.json") + " --mode 3d --metric ap11 --iou 0.25"),
            0);
  const auto j = nlohmann::json::parse(bytes_of(dir / "report.json"));
  EXPECT_EQ(j["mode"], "3D");
  EXPECT_EQ(j["metric"], "AP11");
  EXPECT_EQ(run("fit --points " + q(dir / "pts") + " --scans " + q(dir / "ds/velodyne") + common + " --out " +
                q(dir / "x")),
            2);
}

TEST(Cli, OverridesAndToggles) {
  const fs::path dir = dataset("toggles", 1);
  const std::string common = " --scans " + q(dir / "ds/velodyne") + " --calib " + q(dir / "ds/calib") + " --dets " +
                             q(dir / "ds/detections.csv");
  ASSERT_EQ(run("fit" + common + " --out " + q(dir / "o") + " --no-ray --no-balancing --set lambda=0.3"), 0);
  const auto m = nlohmann::json::parse(bytes_of(dir / "o/manifest.json"));
  EXPECT_EQ(m["config"]["w_ray"], "0");
  EXPECT_EQ(m["config"]["use_balancing"], "false");
  EXPECT_EQ(m["config"]["lambda"], "0.29999999999999999");
  EXPECT_EQ(run("fit" + common + " --out " + q(dir / "o2") + " --set nonsense=1"), 3);
}

TEST(Cli, Gradcheck) {
  EXPECT_EQ(run("gradcheck --seed 4 --count 30"), 0);
  EXPECT_EQ(run("gradcheck --count 10 --tol 1e-30"), 4);
  const app::GradcheckReport r = app::run_gradcheck_suite({1, 20, 1e-3});
  EXPECT_EQ(r.configurations, 20);
  EXPECT_LT(r.max_rel_err_fd, 1e-3);
  EXPECT_LT(r.max_rel_err_analytic, 1e-3);
}

TEST(Cli, ObjectPointsFormat) {
  const std::string text = "0 1 2 3\n0 4 5 6\n2 0.5 0.25 10\n";
  const auto groups = app::parse_object_points(text, "t");
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[1].first, 2u);
  EXPECT_EQ(groups[0].second[1], Vec3d(4, 5, 6));
  EXPECT_THROW(app::parse_object_points("0 1 2\n", "t"), ParseError);
  EXPECT_THROW(app::parse_object_points("-1 1 2 3\n", "t"), ParseError);
}
