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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "fskill/execution.hpp"
#include "fskill/skill_model.hpp"
#include "fskill/synthetic.hpp"

namespace fskill {

/// One human-editable document per skill covering the whole pipeline.
/// The seed is mandatory in config files (no wall-clock entropy), unknown
/// keys are rejected, and every default is visible via config_to_json of a
/// default-constructed instance.
struct SkillConfig {
  std::string skill_name = "skill";
  std::string geometry = "pose";
  std::uint64_t seed = 0;
  /// Goal pose in execution.goal_frame coordinates; empty disables goal
  /// evidence and the goal-reached test.
  Vec goal;
  TrainOptions train;
  ExecutionOptions execution;
  /// Synthetic press corpus settings for the demogen command.
  PressSkillOptions press;
  int demo_count = 3;
  double demo_noise = 0.0;
  /// Object position spread across generated demos (uniform cube, m).
  double object_spread = 0.05;

  GeometryPtr make_geometry() const { return Geometry::from_name(geometry); }
  void check_invariants() const;
};

std::string config_to_json(const SkillConfig& config);

/// Parses and validates; throws FormatError on unknown keys, a missing
/// seed, or out-of-range values.
SkillConfig config_from_json(const std::string& text);

SkillConfig load_config(const std::filesystem::path& file);
void save_config(const SkillConfig& config, const std::filesystem::path& file);

}  // namespace fskill
