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

#include "fskill/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace fskill {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::string& where,
                    std::initializer_list<const char*> known) {
  if (!j.is_object()) {
    throw FormatError("config: '" + where + "' must be an object");
  }
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw FormatError("config: unknown key '" + where + item.key() + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    out = j[key].get<T>();
  }
}

Vec read_vec(const json& j) {
  const auto values = j.get<std::vector<double>>();
  Vec v(static_cast<int>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    v[static_cast<int>(i)] = values[i];
  }
  return v;
}

json write_vec(const Vec& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) {
    out.push_back(v[i]);
  }
  return out;
}

}  // namespace

void SkillConfig::check_invariants() const {
  Geometry::from_name(geometry);
  if (train.model.components < 1) {
    throw FormatError("config: model.components must be >= 1");
  }
  if (train.model.init_strategy != "time-slice" &&
      train.model.init_strategy != "kmeans") {
    throw FormatError("config: model.init must be time-slice or kmeans");
  }
  if (train.model.topology != "left-to-right" &&
      train.model.topology != "ergodic") {
    throw FormatError("config: model.topology must be left-to-right or "
                      "ergodic");
  }
  if (train.initial_stiffness <= 0.0 || train.initial_damping < 0.0) {
    throw FormatError("config: impedance gains out of range");
  }
  if (train.frame_names.empty()) {
    throw FormatError("config: frames must not be empty");
  }
  if (demo_count < 1 || demo_noise < 0.0 || object_spread < 0.0) {
    throw FormatError("config: demogen settings out of range");
  }
  try {
    execution.check_invariants();
  } catch (const Error& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
}

std::string config_to_json(const SkillConfig& c) {
  json j;
  j["skill_name"] = c.skill_name;
  j["geometry"] = c.geometry;
  j["seed"] = c.seed;
  j["goal"] = write_vec(c.goal);
  j["frames"] = c.train.frame_names;
  j["model"] = {{"components", c.train.model.components},
                {"init", c.train.model.init_strategy},
                {"topology", c.train.model.topology},
                {"max_iterations", c.train.model.max_iterations},
                {"tolerance", c.train.model.tolerance},
                {"covariance_floor", c.train.model.covariance_floor},
                {"duration_sigma_span", c.train.model.duration_sigma_span},
                {"outer_iterations", c.train.outer_iterations}};
  j["impedance"] = {{"stiffness", c.train.initial_stiffness},
                    {"damping", c.train.initial_damping}};
  j["stiffness_solver"] = {
      {"block_diagonal", c.train.stiffness.block_diagonal},
      {"sum_of_squared_residuals", c.train.stiffness.sum_of_squared_residuals},
      {"tolerance", c.train.stiffness.tolerance},
      {"max_iterations", c.train.stiffness.max_iterations},
      {"lambda_min", c.train.stiffness.lambda_min},
      {"lambda_max", c.train.stiffness.lambda_max}};
  const ExecutionOptions& e = c.execution;
  j["execution"] = {
      {"dt", e.dt},
      {"deviation_threshold", e.deviation_threshold},
      {"wrench_threshold", e.wrench_threshold},
      {"wrench_window", e.wrench_window},
      {"replan_cooldown", e.replan_cooldown},
      {"goal_position_tolerance", e.goal_position_tolerance},
      {"goal_rotation_tolerance", e.goal_rotation_tolerance},
      {"max_ticks", e.max_ticks},
      {"horizon_scale", e.horizon_scale},
      {"critical_damping", e.critical_damping},
      {"mass", e.mass},
      {"rotational_inertia", e.rotational_inertia},
      {"control_weight", e.control_weight},
      {"duration_sigma_span", e.duration_sigma_span},
      {"transition_velocity", e.transition_velocity},
      {"goal_frame", e.goal_frame},
      {"object_frame", e.object_frame},
      {"object_frame_calibration",
       {e.object_frame_calibration.x(), e.object_frame_calibration.y(),
        e.object_frame_calibration.z()}}};
  const PressSkillOptions& p = c.press;
  j["demogen"] = {{"count", c.demo_count},
                  {"noise", c.demo_noise},
                  {"object_spread", c.object_spread},
                  {"press",
                   {{"approach_stiffness", p.approach_stiffness},
                    {"press_stiffness", p.press_stiffness},
                    {"retreat_stiffness", p.retreat_stiffness},
                    {"lateral_stiffness", p.lateral_stiffness},
                    {"rotational_stiffness", p.rotational_stiffness},
                    {"damping", p.damping},
                    {"hover_height", p.hover_height},
                    {"press_depth", p.press_depth},
                    {"retreat_offset", p.retreat_offset},
                    {"approach_steps", p.approach_steps},
                    {"press_steps", p.press_steps},
                    {"retreat_steps", p.retreat_steps},
                    {"approach_ramp", p.approach_ramp},
                    {"press_ramp", p.press_ramp},
                    {"retreat_ramp", p.retreat_ramp}}}};
  return j.dump(2) + "\n";
}

SkillConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  SkillConfig c;
  try {
    reject_unknown(j, "", {"skill_name", "geometry", "seed", "goal", "frames",
                           "model", "impedance", "stiffness_solver",
                           "execution", "demogen"});
    if (!j.contains("seed")) {
      throw FormatError("config: missing required key 'seed'");
    }
    c.seed = j["seed"].get<std::uint64_t>();
    read(j, "skill_name", c.skill_name);
    read(j, "geometry", c.geometry);
    if (j.contains("goal")) {
      c.goal = read_vec(j["goal"]);
    }
    read(j, "frames", c.train.frame_names);
    if (j.contains("model")) {
      const json& jm = j["model"];
      reject_unknown(jm, "model.",
                     {"components", "init", "topology", "max_iterations",
                      "tolerance", "covariance_floor", "duration_sigma_span",
                      "outer_iterations"});
      read(jm, "components", c.train.model.components);
      read(jm, "init", c.train.model.init_strategy);
      read(jm, "topology", c.train.model.topology);
      read(jm, "max_iterations", c.train.model.max_iterations);
      read(jm, "tolerance", c.train.model.tolerance);
      read(jm, "covariance_floor", c.train.model.covariance_floor);
      read(jm, "duration_sigma_span", c.train.model.duration_sigma_span);
      read(jm, "outer_iterations", c.train.outer_iterations);
    }
    if (j.contains("impedance")) {
      const json& ji = j["impedance"];
      reject_unknown(ji, "impedance.", {"stiffness", "damping"});
      read(ji, "stiffness", c.train.initial_stiffness);
      read(ji, "damping", c.train.initial_damping);
    }
    if (j.contains("stiffness_solver")) {
      const json& js = j["stiffness_solver"];
      reject_unknown(js, "stiffness_solver.",
                     {"block_diagonal", "sum_of_squared_residuals",
                      "tolerance", "max_iterations", "lambda_min",
                      "lambda_max"});
      read(js, "block_diagonal", c.train.stiffness.block_diagonal);
      read(js, "sum_of_squared_residuals",
           c.train.stiffness.sum_of_squared_residuals);
      read(js, "tolerance", c.train.stiffness.tolerance);
      read(js, "max_iterations", c.train.stiffness.max_iterations);
      read(js, "lambda_min", c.train.stiffness.lambda_min);
      read(js, "lambda_max", c.train.stiffness.lambda_max);
    }
    if (j.contains("execution")) {
      const json& je = j["execution"];
      reject_unknown(
          je, "execution.",
          {"dt", "deviation_threshold", "wrench_threshold", "wrench_window",
           "replan_cooldown", "goal_position_tolerance",
           "goal_rotation_tolerance", "max_ticks", "horizon_scale",
           "critical_damping", "mass", "rotational_inertia", "control_weight",
           "duration_sigma_span", "transition_velocity", "goal_frame",
           "object_frame", "object_frame_calibration"});
      ExecutionOptions& e = c.execution;
      read(je, "dt", e.dt);
      read(je, "deviation_threshold", e.deviation_threshold);
      read(je, "wrench_threshold", e.wrench_threshold);
      read(je, "wrench_window", e.wrench_window);
      read(je, "replan_cooldown", e.replan_cooldown);
      read(je, "goal_position_tolerance", e.goal_position_tolerance);
      read(je, "goal_rotation_tolerance", e.goal_rotation_tolerance);
      read(je, "max_ticks", e.max_ticks);
      read(je, "horizon_scale", e.horizon_scale);
      read(je, "critical_damping", e.critical_damping);
      read(je, "mass", e.mass);
      read(je, "rotational_inertia", e.rotational_inertia);
      read(je, "control_weight", e.control_weight);
      read(je, "duration_sigma_span", e.duration_sigma_span);
      read(je, "transition_velocity", e.transition_velocity);
      read(je, "goal_frame", e.goal_frame);
      read(je, "object_frame", e.object_frame);
      if (je.contains("object_frame_calibration")) {
        const Vec v = read_vec(je["object_frame_calibration"]);
        if (v.size() != 3) {
          throw FormatError(
              "config: execution.object_frame_calibration needs 3 numbers");
        }
        e.object_frame_calibration = Vec3(v[0], v[1], v[2]);
      }
    }
    if (j.contains("demogen")) {
      const json& jd = j["demogen"];
      reject_unknown(jd, "demogen.",
                     {"count", "noise", "object_spread", "press"});
      read(jd, "count", c.demo_count);
      read(jd, "noise", c.demo_noise);
      read(jd, "object_spread", c.object_spread);
      if (jd.contains("press")) {
        const json& jp = jd["press"];
        reject_unknown(jp, "demogen.press.",
                       {"approach_stiffness", "press_stiffness",
                        "retreat_stiffness", "lateral_stiffness",
                        "rotational_stiffness", "damping", "hover_height",
                        "press_depth", "retreat_offset", "approach_steps",
                        "press_steps", "retreat_steps", "approach_ramp",
                        "press_ramp", "retreat_ramp"});
        PressSkillOptions& p = c.press;
        read(jp, "approach_stiffness", p.approach_stiffness);
        read(jp, "press_stiffness", p.press_stiffness);
        read(jp, "retreat_stiffness", p.retreat_stiffness);
        read(jp, "lateral_stiffness", p.lateral_stiffness);
        read(jp, "rotational_stiffness", p.rotational_stiffness);
        read(jp, "damping", p.damping);
        read(jp, "hover_height", p.hover_height);
        read(jp, "press_depth", p.press_depth);
        read(jp, "retreat_offset", p.retreat_offset);
        read(jp, "approach_steps", p.approach_steps);
        read(jp, "press_steps", p.press_steps);
        read(jp, "retreat_steps", p.retreat_steps);
        read(jp, "approach_ramp", p.approach_ramp);
        read(jp, "press_ramp", p.press_ramp);
        read(jp, "retreat_ramp", p.retreat_ramp);
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  c.train.model.seed = c.seed;
  c.check_invariants();
  return c;
}

SkillConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw IoError("cannot open config file: " + file.string());
  }
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  try {
    return config_from_json(text);
  } catch (const FormatError& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
}

void save_config(const SkillConfig& config,
                 const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) {
    throw IoError("cannot write config file: " + file.string());
  }
  out << config_to_json(config);
}

}  // namespace fskill
