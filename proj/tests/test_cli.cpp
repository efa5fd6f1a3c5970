// Copyright 2026 The fskill authors
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

// End-to-end checks of the installed CLI surface: every invocation here
// goes through a real subprocess of the fskill binary, never through the
// library directly, so exit codes and printed contracts stay honest.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include "fskill/config.hpp"
#include "fskill/execution.hpp"

namespace fs = std::filesystem;
using fskill::DisturbanceEvent;
using fskill::DisturbanceScript;
using fskill::SkillConfig;
using json = nlohmann::json;

namespace {

fs::path tmp_root() {
  const fs::path root = fs::path(FSKILL_TEST_TMP) / "cli";
  fs::create_directories(root);
  return root;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// Runs the CLI binary with `args`, capturing stdout/stderr via files.
RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out_file =
      tmp_root() / ("stdout_" + std::to_string(counter) + ".txt");
  const fs::path err_file =
      tmp_root() / ("stderr_" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string cmd = std::string("\"") + FSKILL_CLI_PATH + "\" " + args +
                          " > \"" + out_file.string() + "\" 2> \"" +
                          err_file.string() + "\"";
  const int status = std::system(cmd.c_str());
  RunResult r;
  if (status != -1 && WIFEXITED(status)) {
    r.exit_code = WEXITSTATUS(status);
  }
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

/// One trained workspace shared by the suite: a small synthetic corpus,
/// a model, and a nominal execution log, all produced by CLI calls.
struct CliWorld {
  fs::path dir;
  fs::path config;
  fs::path demos;
  fs::path scene;
  fs::path model;
  fs::path log;
  RunResult demogen;
  RunResult train;
  RunResult reproduce;
};

SkillConfig world_config() {
  SkillConfig cfg;
  cfg.skill_name = "press";
  cfg.seed = 42;
  cfg.goal = fskill::Vec(7);
  cfg.goal << 0.05, 0.0, 0.08, 1.0, 0.0, 0.0, 0.0;
  cfg.train.model.components = 5;
  cfg.train.model.seed = cfg.seed;
  cfg.execution.control_weight = 0.05;
  // Five demos so the object poses span all of space; a mid-episode frame
  // shift can then point anywhere and stay inside the demonstrated region.
  cfg.demo_count = 5;
  return cfg;
}

const CliWorld& world() {
  static const CliWorld w = [] {
    CliWorld w;
    w.dir = tmp_root() / "world";
    fs::remove_all(w.dir);
    fs::create_directories(w.dir);
    w.config = w.dir / "press.json";
    fskill::save_config(world_config(), w.config);
    w.demos = w.dir / "demos";
    w.scene = w.demos / "scene.json";
    w.model = w.dir / "model.json";
    w.log = w.dir / "run.log";
    const std::string c = " --config \"" + w.config.string() + "\" ";
    w.demogen = run_cli("demogen" + c + "--out \"" + w.demos.string() + "\"");
    w.train = run_cli("train" + c + "--demos \"" + w.demos.string() +
                      "\" --out \"" + w.model.string() + "\"");
    w.reproduce = run_cli("reproduce" + c + "--model \"" + w.model.string() +
                          "\" --scene \"" + w.scene.string() + "\" --out \"" +
                          w.log.string() + "\"");
    return w;
  }();
  return w;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("print-config emits every default as valid json") {
  const RunResult r = run_cli("--print-config");
  REQUIRE(r.exit_code == 0);
  const json j = json::parse(r.out);
  CHECK(j.at("seed").get<std::uint64_t>() == 0);
  CHECK(j.at("geometry").get<std::string>() == "pose");
  CHECK(j.at("execution").at("control_weight").get<double>() ==
        doctest::Approx(1e-4));
  CHECK(j.at("demogen").at("press").at("press_steps").get<int>() == 240);
  // Round trip: the printed defaults must load back unchanged.
  const fs::path file = tmp_root() / "defaults.json";
  std::ofstream(file) << r.out;
  const RunResult again =
      run_cli("--print-config --config \"" + file.string() + "\"");
  REQUIRE(again.exit_code == 0);
  CHECK(again.out == r.out);
}

TEST_CASE("demogen, train, and reproduce chain through subprocesses") {
  const CliWorld& w = world();
  REQUIRE(w.demogen.exit_code == 0);
  CHECK(fs::exists(w.demos / "demo_00.txt"));
  CHECK(fs::exists(w.demos / "demo_04.txt"));
  CHECK(fs::exists(w.scene));

  REQUIRE(w.train.exit_code == 0);
  CHECK(fs::exists(w.model));
  CHECK(w.train.out.find("components: 5") != std::string::npos);
  CHECK(w.train.out.find("em iterations:") != std::string::npos);
  CHECK(w.train.out.find("stiffness eigenvalues:") != std::string::npos);
  CHECK(w.train.out.find("wall clock:") != std::string::npos);

  REQUIRE(w.reproduce.exit_code == 0);
  CHECK(fs::exists(w.log));
  CHECK(w.reproduce.out.find("goal: reached") != std::string::npos);
}

TEST_CASE("inspect summarizes models, demos, logs, and scenes") {
  const CliWorld& w = world();
  REQUIRE(w.reproduce.exit_code == 0);

  RunResult r = run_cli("inspect \"" + w.model.string() + "\"");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("model archive: press") != std::string::npos);
  CHECK(r.out.find("components: 5") != std::string::npos);

  r = run_cli("inspect \"" + (w.demos / "demo_00.txt").string() + "\"");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("sample rate: 100 Hz") != std::string::npos);

  r = run_cli("inspect \"" + w.log.string() + "\"");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("goal: reached") != std::string::npos);

  r = run_cli("inspect \"" + w.scene.string() + "\"");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("object") != std::string::npos);
}

TEST_CASE("plot renders all three kinds with companion csv") {
  const CliWorld& w = world();
  REQUIRE(w.reproduce.exit_code == 0);
  const fs::path out = w.dir / "plots";
  fs::create_directories(out);

  const RunResult overlay = run_cli(
      "plot --kind demo-vs-attractor-vs-execution --demo \"" +
      (w.demos / "demo_00.txt").string() + "\" --execution \"" +
      w.log.string() + "\" --out \"" + (out / "overlay.svg").string() + "\"");
  CHECK(overlay.exit_code == 0);
  const RunResult stiff =
      run_cli("plot --kind stiffness-profile --model \"" + w.model.string() +
              "\" --out \"" + (out / "stiff.svg").string() + "\"");
  CHECK(stiff.exit_code == 0);
  const RunResult timeline =
      run_cli("plot --kind adaptation-timeline --execution \"" +
              w.log.string() + "\" --out \"" + (out / "timeline.svg").string() +
              "\"");
  CHECK(timeline.exit_code == 0);

  for (const char* name : {"overlay", "stiff", "timeline"}) {
    const std::string svg = slurp(out / (std::string(name) + ".svg"));
    const std::string csv = slurp(out / (std::string(name) + ".csv"));
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(csv.rfind("panel,series,x,y", 0) == 0);
  }
}

TEST_CASE("repeated runs produce byte-identical artifacts") {
  const CliWorld& w = world();
  REQUIRE(w.reproduce.exit_code == 0);
  const std::string c = " --config \"" + w.config.string() + "\" ";

  const fs::path model2 = w.dir / "model2.json";
  REQUIRE(run_cli("train" + c + "--demos \"" + w.demos.string() +
                  "\" --out \"" + model2.string() + "\"")
              .exit_code == 0);
  CHECK(slurp(w.model) == slurp(model2));

  const fs::path log2 = w.dir / "run2.log";
  REQUIRE(run_cli("reproduce" + c + "--model \"" + w.model.string() +
                  "\" --scene \"" + w.scene.string() + "\" --out \"" +
                  log2.string() + "\"")
              .exit_code == 0);
  CHECK(slurp(w.log) == slurp(log2));

  const fs::path svg1 = w.dir / "det1.svg";
  const fs::path svg2 = w.dir / "det2.svg";
  const std::string plot_args = "plot --kind adaptation-timeline --execution \"" +
                                w.log.string() + "\" --out \"";
  REQUIRE(run_cli(plot_args + svg1.string() + "\"").exit_code == 0);
  REQUIRE(run_cli(plot_args + svg2.string() + "\"").exit_code == 0);
  const std::string bytes = slurp(svg1);
  CHECK(bytes == slurp(svg2));
  CHECK(bytes.find("timestamp") == std::string::npos);
}

TEST_CASE("disturbances show up as replan events in the exported log") {
  const CliWorld& w = world();
  REQUIRE(w.train.exit_code == 0);
  DisturbanceScript script;
  DisturbanceEvent shift;
  shift.kind = DisturbanceEvent::Kind::kFrameShift;
  shift.start = 3.0;
  shift.frame = "object";
  shift.shift = fskill::Vec3(0.02, 0.0, 0.0);
  script.events.push_back(shift);
  const fs::path file = w.dir / "shift.json";
  fskill::save_disturbances(script, file);

  const fs::path log = w.dir / "run_shift.log";
  const RunResult r = run_cli(
      "reproduce --config \"" + w.config.string() + "\" --model \"" +
      w.model.string() + "\" --scene \"" + w.scene.string() +
      "\" --disturbances \"" + file.string() + "\" --out \"" + log.string() +
      "\"");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("replan at") != std::string::npos);
  const std::string text = slurp(log);
  CHECK(text.find("# event:") != std::string::npos);
  CHECK(text.find("frame shift 'object'") != std::string::npos);
}

TEST_CASE("seed override changes the generated corpus deterministically") {
  const CliWorld& w = world();
  REQUIRE(w.demogen.exit_code == 0);
  const std::string c = " --config \"" + w.config.string() + "\" ";

  const fs::path other = w.dir / "demos_seed7";
  REQUIRE(run_cli("demogen" + c + "--seed 7 --out \"" + other.string() + "\"")
              .exit_code == 0);
  CHECK(slurp(other / "demo_00.txt") != slurp(w.demos / "demo_00.txt"));

  const fs::path same = w.dir / "demos_seed42";
  REQUIRE(run_cli("demogen" + c + "--seed 42 --out \"" + same.string() + "\"")
              .exit_code == 0);
  CHECK(slurp(same / "demo_00.txt") == slurp(w.demos / "demo_00.txt"));
}

TEST_CASE("reproduce returns 3 when the goal stays out of reach") {
  const CliWorld& w = world();
  REQUIRE(w.train.exit_code == 0);
  const fs::path log = w.dir / "run_far.log";
  const RunResult r = run_cli(
      "reproduce --config \"" + w.config.string() + "\" --model \"" +
      w.model.string() + "\" --scene \"" + w.scene.string() +
      "\" --goal 0.5,0.5,0.5 --out \"" + log.string() + "\"");
  CHECK(r.exit_code == 3);
  CHECK(r.out.find("goal: not reached") != std::string::npos);
}

TEST_CASE("train without demonstrations fails with exit 2") {
  const CliWorld& w = world();
  const RunResult r = run_cli(
      "train --config \"" + w.config.string() + "\" --demos \"" +
      (w.dir / "missing").string() + "\" --out \"" +
      (w.dir / "nope.json").string() + "\"");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("no demonstrations") != std::string::npos);
}

TEST_CASE("reproduce names the frame a scene is missing") {
  const CliWorld& w = world();
  REQUIRE(w.train.exit_code == 0);
  json scene = json::parse(slurp(w.scene));
  scene["frames"].erase("object");
  const fs::path file = w.dir / "scene_no_object.json";
  std::ofstream(file) << scene.dump(2);

  const RunResult r = run_cli(
      "reproduce --config \"" + w.config.string() + "\" --model \"" +
      w.model.string() + "\" --scene \"" + file.string() + "\" --out \"" +
      (w.dir / "nope.log").string() + "\"");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("'object'") != std::string::npos);
}

TEST_CASE("malformed inputs are rejected with exit 2") {
  const CliWorld& w = world();

  SUBCASE("unknown plot kind") {
    const RunResult r = run_cli("plot --kind waterfall --out \"" +
                                (w.dir / "x.svg").string() + "\"");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("unknown plot kind 'waterfall'") != std::string::npos);
  }

  SUBCASE("corrupt model archive") {
    const fs::path file = w.dir / "corrupt.json";
    std::ofstream(file) << "{\"format\": \"fskill-model\", \"version\": 99}";
    const RunResult r = run_cli("inspect \"" + file.string() + "\"");
    CHECK(r.exit_code == 2);
  }

  SUBCASE("unknown config key") {
    json cfg = json::parse(slurp(w.config));
    cfg["typo_key"] = 1;
    const fs::path file = w.dir / "typo.json";
    std::ofstream(file) << cfg.dump(2);
    const RunResult r = run_cli("--print-config --config \"" + file.string() +
                                "\"");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("typo_key") != std::string::npos);
  }

  SUBCASE("missing required option") {
    const RunResult r = run_cli("train");
    CHECK(r.exit_code == 2);
  }
}

}  // TEST_SUITE
