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

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "fskill/config.hpp"
#include "fskill/demo.hpp"
#include "fskill/execution.hpp"
#include "fskill/skill_model.hpp"
#include "fskill/synthetic.hpp"
#include "plotting.hpp"

namespace {

namespace fs = std::filesystem;
using namespace fskill;

/// FSKILL_VERBOSE=1 turns on stderr progress notes; stdout stays the
/// deterministic report surface.
bool verbose() {
  const char* v = std::getenv("FSKILL_VERBOSE");
  return v != nullptr && *v != '\0' && std::string(v) != "0";
}

void note(const std::string& line) {
  if (verbose()) {
    std::cerr << "fskill: " << line << "\n";
  }
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in.good()) {
    throw IoError("cannot open " + file.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& file, const std::string& content) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out.good()) {
    throw IoError("cannot write " + file.string());
  }
}

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

SkillConfig effective_config(const CommonArgs& args) {
  SkillConfig config =
      args.config_path.empty() ? SkillConfig{} : load_config(args.config_path);
  if (args.seed_set) {
    config.seed = args.seed;
    config.train.model.seed = args.seed;
  }
  config.check_invariants();
  return config;
}

Vec pose_from_xyz(const Vec3& p) {
  PosePoint point;
  point.position = p;
  return point.to_ambient();
}

/// The contact world of an episode: the press plane riding the configured
/// object frame of the scene. Euclidean skills and scenes without that
/// frame run in free space.
Environment derive_environment(const SkillConfig& config, const Geometry& geom,
                               const Scene& scene) {
  Environment env;
  if (geom.name() != "pose") {
    return env;
  }
  const Frame* object = scene.find(config.execution.object_frame);
  if (object == nullptr) {
    return env;
  }
  env.has_plane = true;
  env.plane_point = object->translation;
  env.plane_normal = (object->rotation * Vec3::UnitZ()).normalized();
  env.attached_frame = config.execution.object_frame;
  return env;
}

int run_demogen(const CommonArgs& common, const std::string& out_dir) {
  const SkillConfig config = effective_config(common);
  const GeometryPtr geom = config.make_geometry();
  if (geom->name() != "pose") {
    throw Error("demogen: the synthetic press corpus needs the pose geometry");
  }
  fs::create_directories(out_dir);

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> spread(-config.object_spread,
                                                config.object_spread);
  const auto draw_object = [&] {
    const double x = spread(rng);
    const double y = spread(rng);
    const double z = spread(rng);
    return pose_from_xyz(Vec3(x, y, z));
  };

  std::vector<Vec> objects;
  for (int i = 0; i < config.demo_count; ++i) {
    const Vec object = draw_object();
    objects.push_back(object);
    const PressSkill press = make_press_skill(*geom, object, config.press);
    Demonstration demo = generate_synthetic_demo(
        *geom, press.script, press.environment, config.execution.dt,
        config.demo_noise, config.seed + static_cast<std::uint64_t>(i));
    char name[32];
    std::snprintf(name, sizeof(name), "demo_%02d", i);
    demo.id = config.skill_name + "-" + name;
    const fs::path file = fs::path(out_dir) / (std::string(name) + ".txt");
    save_demonstration(demo, file);
    note("wrote " + file.string());
  }

  // A held-out workspace for reproduction: a novel object pose inside the
  // demonstrated region. A random barycentric blend of the training poses
  // keeps it there; an independent draw could land outside the affine span
  // of the demos (with three demos that span is only a plane), where the
  // cross-frame generalization has no data to stand on.
  std::exponential_distribution<double> expo(1.0);
  Vec weights(config.demo_count);
  for (int i = 0; i < config.demo_count; ++i) {
    weights[i] = expo(rng);
  }
  weights /= weights.sum();
  Vec3 blend = Vec3::Zero();
  for (int i = 0; i < config.demo_count; ++i) {
    blend += weights[i] * objects[static_cast<std::size_t>(i)].head<3>();
  }
  const Vec exec_object = pose_from_xyz(blend);
  const PressSkill live = make_press_skill(*geom, exec_object, config.press);
  Scene scene;
  scene.frames.push_back({"global", Frame::identity()});
  scene.frames.push_back({"object", frame_from_point(*geom, exec_object)});
  scene.frames.push_back({"robot", frame_from_point(*geom, live.script.start)});
  const fs::path scene_file = fs::path(out_dir) / "scene.json";
  save_scene(scene, scene_file);

  std::cout << "wrote " << config.demo_count << " demonstrations and "
            << scene_file.string() << "\n";
  std::cout << "execution object at " << format_double(exec_object[0]) << " "
            << format_double(exec_object[1]) << " "
            << format_double(exec_object[2]) << "\n";
  return 0;
}

int run_train(const CommonArgs& common, const std::string& demos_path,
              const std::string& out_model) {
  const SkillConfig config = effective_config(common);
  const GeometryPtr geom = config.make_geometry();
  note("loading demonstrations from " + demos_path);
  const std::vector<Demonstration> demos = load_demonstrations(demos_path);
  note("training on " + std::to_string(demos.size()) + " demos");
  const SkillModel model =
      train_skill(geom, demos, config.train, config.skill_name);
  save_skill(model, out_model);

  const TrainingReport& report = model.report;
  std::cout << "skill: " << model.name << "  geometry: " << geom->name()
            << "  components: " << model.components() << "\n";
  std::cout << "demos: " << report.demo_count
            << "  samples: " << report.sample_count << "\n";
  if (!report.loglik_trace.empty()) {
    std::cout << "em iterations: " << report.loglik_trace.size()
              << "  loglik: " << format_double(report.loglik_trace.front())
              << " -> " << format_double(report.loglik_trace.back()) << "\n";
  }
  std::cout << "stiffness eigenvalues:\n";
  for (int k = 0; k < model.components(); ++k) {
    const Eigen::SelfAdjointEigenSolver<Mat> es(model.stiffness.gains[k]);
    char line[96];
    std::snprintf(line, sizeof(line), "  k%-2d [%.3f, %.3f]\n", k,
                  es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff());
    std::cout << line;
  }
  for (const std::string& w : report.warnings) {
    std::cout << "warning: " << w << "\n";
  }
  char wall[48];
  std::snprintf(wall, sizeof(wall), "wall clock: %.2f s\n",
                report.wall_seconds);
  std::cout << wall;
  std::cout << "wrote " << out_model << "\n";
  return 0;
}

int run_reproduce(const CommonArgs& common, const std::string& model_path,
                  const std::string& scene_path,
                  const std::string& script_path,
                  const std::vector<double>& goal_values,
                  const std::string& out_log) {
  const SkillConfig config = effective_config(common);
  const SkillModel model = load_skill(model_path);
  const Scene scene = load_scene(scene_path);
  DisturbanceScript script;
  if (!script_path.empty()) {
    script = load_disturbances(script_path);
  }

  Vec goal = config.goal;
  if (!goal_values.empty()) {
    const GeometryPtr geom = config.make_geometry();
    if (geom->name() == "pose" && goal_values.size() == 3) {
      goal = pose_from_xyz(Vec3(goal_values[0], goal_values[1],
                                goal_values[2]));
    } else {
      goal = Vec(static_cast<int>(goal_values.size()));
      for (std::size_t i = 0; i < goal_values.size(); ++i) {
        goal[static_cast<int>(i)] = goal_values[i];
      }
    }
  }

  const GeometryPtr geom = config.make_geometry();
  const Environment env = derive_environment(config, *geom, scene);
  note("running episode");
  const ExecutionLog log =
      run_episode(model, scene, goal, script, env, config.execution);
  save_execution_log(log, out_log);

  char head[96];
  std::snprintf(head, sizeof(head), "episode: %zu ticks (%.2f s), %zu replans\n",
                log.ticks.size(),
                log.ticks.empty() ? 0.0 : log.ticks.back().time + log.dt,
                log.events.size());
  std::cout << head;
  for (const ReplanEvent& e : log.events) {
    char line[160];
    std::snprintf(line, sizeof(line), "  replan at %.2f s: %s\n", e.time,
                  e.reason.c_str());
    std::cout << line;
  }
  if (log.aborted) {
    std::cout << "aborted: " << log.abort_reason << "\n";
  } else if (goal.size() == 0) {
    std::cout << "goal: none\n";
  } else {
    std::cout << (log.goal_reached ? "goal: reached\n" : "goal: not reached\n");
  }
  std::cout << "wrote " << out_log << "\n";

  if (log.aborted) {
    std::cerr << "fskill: episode aborted: " << log.abort_reason << "\n";
    return 3;
  }
  if (goal.size() != 0 && !log.goal_reached) {
    std::cerr << "fskill: goal not reached\n";
    return 3;
  }
  return 0;
}

int inspect_model(const std::string& text) {
  const SkillModel model = skill_from_json(text);
  std::cout << "model archive: " << model.name << "\n";
  std::cout << "geometry: " << model.attractor.geometry->name() << "\n";
  std::cout << "frames:";
  for (const std::string& f : model.attractor.frame_names) {
    std::cout << " " << f;
  }
  std::cout << "\n";
  std::cout << "components: " << model.components() << "\n";
  std::cout << "trained on: " << model.report.demo_count << " demos, "
            << model.report.sample_count << " samples\n";
  if (!model.report.loglik_trace.empty()) {
    std::cout << "final loglik: "
              << format_double(model.report.loglik_trace.back()) << "\n";
  }
  for (int k = 0; k < model.components(); ++k) {
    const Eigen::SelfAdjointEigenSolver<Mat> es(model.stiffness.gains[k]);
    char line[160];
    std::snprintf(line, sizeof(line),
                  "  k%-2d duration %6.1f  stiffness [%.1f, %.1f]  "
                  "|wrench| %.3f\n",
                  k, model.attractor.durations[k].mean,
                  es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff(),
                  model.wrench_means[k].norm());
    std::cout << line;
  }
  return 0;
}

int inspect_demo(const fs::path& file) {
  const Demonstration demo = load_demonstration(file);
  std::cout << "demonstration: " << demo.id << "\n";
  std::cout << "sample rate: " << format_double(demo.sample_rate) << " Hz\n";
  std::cout << "samples: " << demo.points.size() << "\n";
  if (!demo.points.empty()) {
    char line[96];
    std::snprintf(line, sizeof(line), "time span: %.3f .. %.3f s\n",
                  demo.points.front().time, demo.points.back().time);
    std::cout << line;
    double peak = 0.0;
    for (const ObservationPoint& p : demo.points) {
      peak = std::max(peak, p.wrench.norm());
    }
    std::snprintf(line, sizeof(line), "peak |wrench|: %.3f\n", peak);
    std::cout << line;
  }
  return 0;
}

int inspect_log(const std::string& text) {
  const ExecutionLog log = execution_log_from_text(text);
  std::cout << "execution log: " << log.ticks.size() << " ticks, geometry "
            << log.geometry << ", dt " << format_double(log.dt) << "\n";
  std::cout << (log.goal_reached ? "goal: reached\n" : "goal: not reached\n");
  if (log.aborted) {
    std::cout << "aborted: " << log.abort_reason << "\n";
  }
  std::cout << "replans: " << log.events.size() << "\n";
  for (const ReplanEvent& e : log.events) {
    char line[160];
    std::snprintf(line, sizeof(line), "  at %.2f s: %s\n", e.time,
                  e.reason.c_str());
    std::cout << line;
  }
  return 0;
}

int run_inspect(const std::string& path) {
  const std::string text = slurp(path);
  if (text.rfind("# fskill demonstration log", 0) == 0) {
    return inspect_demo(path);
  }
  if (text.rfind("# fskill-execution-log", 0) == 0) {
    return inspect_log(text);
  }
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    if (text.find("\"format\"") != std::string::npos) {
      return inspect_model(text);
    }
    if (text.find("\"seed\"") != std::string::npos) {
      const SkillConfig config = config_from_json(text);
      std::cout << config_to_json(config);
      return 0;
    }
    const Scene scene = load_scene(path);
    std::cout << "scene: " << scene.frames.size() << " frames\n";
    for (const auto& [name, frame] : scene.frames) {
      char line[160];
      std::snprintf(line, sizeof(line), "  %-10s at %.4f %.4f %.4f\n",
                    name.c_str(), frame.translation.x(), frame.translation.y(),
                    frame.translation.z());
      std::cout << line;
    }
    return 0;
  }
  throw FormatError("inspect: unrecognized file " + path);
}

int run_plot(const std::string& kind, const std::string& out,
             const std::string& demo_path, const std::string& exec_path,
             const std::string& model_path, int axis) {
  std::vector<plot::Panel> panels;
  if (kind == "demo-vs-attractor-vs-execution") {
    if (demo_path.empty() || exec_path.empty()) {
      throw Error("plot kind '" + kind + "' needs --demo and --execution");
    }
    const Demonstration demo = load_demonstration(demo_path);
    const ExecutionLog log = execution_log_from_text(slurp(exec_path));
    const GeometryPtr geom = Geometry::from_name(log.geometry);
    panels = plot::overlay_panels(*geom, demo, log, axis);
  } else if (kind == "stiffness-profile") {
    if (model_path.empty()) {
      throw Error("plot kind '" + kind + "' needs --model");
    }
    const SkillModel model = load_skill(model_path);
    panels = plot::stiffness_panels(model);
  } else if (kind == "adaptation-timeline") {
    if (exec_path.empty()) {
      throw Error("plot kind '" + kind + "' needs --execution");
    }
    const ExecutionLog log = execution_log_from_text(slurp(exec_path));
    const GeometryPtr geom = Geometry::from_name(log.geometry);
    panels = plot::timeline_panels(*geom, log);
  } else {
    throw Error("unknown plot kind '" + kind +
                "' (demo-vs-attractor-vs-execution, stiffness-profile, "
                "adaptation-timeline)");
  }

  fs::path svg_file(out);
  if (svg_file.extension() != ".svg") {
    svg_file += ".svg";
  }
  fs::path csv_file = svg_file;
  csv_file.replace_extension(".csv");
  spit(svg_file, plot::render_svg(panels));
  spit(csv_file, plot::render_csv(panels));
  std::cout << "wrote " << svg_file.string() << " and " << csv_file.string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fskill: learn forceful skills from demonstrations and "
               "reproduce them in closed loop"};
  app.set_version_flag("--version", "fskill 0.1.0");
  app.require_subcommand(0, 1);

  bool print_config = false;
  app.add_flag("--print-config", print_config,
               "Print the effective configuration as JSON and exit");

  CommonArgs common;
  const auto add_common = [&common](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path,
                    "Skill configuration file (JSON)");
    cmd->add_option("--seed", common.seed, "Override the configured seed")
        ->each([&common](const std::string&) { common.seed_set = true; });
  };
  app.add_option("--config", common.config_path,
                 "Skill configuration file (JSON)");

  std::string demos_path;
  std::string out_path;
  std::string model_path;
  std::string scene_path;
  std::string script_path;
  std::string inspect_path;
  std::string plot_kind;
  std::string plot_demo;
  std::string plot_exec;
  std::string plot_model;
  std::vector<double> goal_values;
  int plot_axis = 2;

  CLI::App* demogen =
      app.add_subcommand("demogen", "Generate a synthetic press corpus");
  add_common(demogen);
  demogen->add_option("--out", out_path, "Output directory")->required();

  CLI::App* train =
      app.add_subcommand("train", "Train a skill model from demonstrations");
  add_common(train);
  train->add_option("--demos", demos_path,
                    "Demo file or directory of *.txt demos")
      ->required();
  train->add_option("--out", out_path, "Model archive to write")->required();

  CLI::App* reproduce =
      app.add_subcommand("reproduce", "Run a trained model in closed loop");
  add_common(reproduce);
  reproduce->add_option("--model", model_path, "Model archive")->required();
  reproduce->add_option("--scene", scene_path, "Scene file (JSON)")
      ->required();
  reproduce->add_option("--disturbances", script_path,
                        "Disturbance script (JSON)");
  reproduce
      ->add_option("--goal", goal_values,
                   "Goal override in goal-frame coordinates (x,y,z or full "
                   "ambient pose)")
      ->delimiter(',');
  reproduce->add_option("--out", out_path, "Execution log to write")
      ->required();

  CLI::App* inspect =
      app.add_subcommand("inspect", "Summarize a model, demo, log, scene, "
                         "or config file");
  inspect->add_option("file", inspect_path, "File to inspect")->required();

  CLI::App* plot = app.add_subcommand("plot", "Render SVG + CSV artifacts");
  plot->add_option("--kind", plot_kind,
                   "demo-vs-attractor-vs-execution | stiffness-profile | "
                   "adaptation-timeline")
      ->required();
  plot->add_option("--demo", plot_demo, "Demonstration log");
  plot->add_option("--execution", plot_exec, "Execution log");
  plot->add_option("--model", plot_model, "Model archive");
  plot->add_option("--axis", plot_axis, "Tangent axis for overlays");
  plot->add_option("--out", out_path, "SVG path (companion CSV next to it)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (print_config) {
      std::cout << config_to_json(effective_config(common));
      return 0;
    }
    if (demogen->parsed()) {
      return run_demogen(common, out_path);
    }
    if (train->parsed()) {
      return run_train(common, demos_path, out_path);
    }
    if (reproduce->parsed()) {
      return run_reproduce(common, model_path, scene_path, script_path,
                           goal_values, out_path);
    }
    if (inspect->parsed()) {
      return run_inspect(inspect_path);
    }
    if (plot->parsed()) {
      return run_plot(plot_kind, out_path, plot_demo, plot_exec, plot_model,
                      plot_axis);
    }
    std::cerr << app.help();
    return 2;
  } catch (const Error& e) {
    std::cerr << "fskill: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fskill: unexpected error: " << e.what() << "\n";
    return 1;
  }
}
