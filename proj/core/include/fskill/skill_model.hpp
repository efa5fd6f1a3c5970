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

#include <filesystem>
#include <string>
#include <vector>

#include "fskill/demo.hpp"
#include "fskill/stiffness.hpp"
#include "fskill/tphsmm.hpp"

namespace fskill {

struct TrainOptions {
  TphsmmConfig model;
  StiffnessOptions stiffness;
  /// Gains of the impedance controller during recording; they define the
  /// attractor transform of the first training pass.
  double initial_stiffness = 400.0;
  double initial_damping = 40.0;
  std::vector<std::string> frame_names = {"global", "object"};
  /// Extra attractor/EM/stiffness rounds; pass > 1 to recompute the
  /// attractor data with the optimized per-component gains.
  int outer_iterations = 1;
};

/// Training diagnostics. Everything except wall_seconds is deterministic
/// under a fixed seed; wall_seconds is never serialized.
struct TrainingReport {
  std::vector<double> loglik_trace;
  std::vector<std::string> warnings;
  double wall_seconds = 0.0;
  int demo_count = 0;
  int sample_count = 0;
};

/// Everything the online executor needs: the attractor TP-HSMM, the
/// per-component stiffness, the shared damping, and the mean sensed wrench
/// per component (global frame) for the force-deviation trigger.
struct SkillModel {
  std::string name;
  Tphsmm attractor;
  StiffnessModel stiffness;
  Mat damping;
  std::vector<Vec> wrench_means;
  TrainingReport report;

  int components() const { return attractor.components(); }
  void check_invariants() const;
};

/// Full offline pipeline on raw demonstrations: per-demo scenes from the
/// first sample, attractor transform with the initial gains, EM fit,
/// stiffness optimization, wrench means. Throws on empty input or any
/// stage failure.
SkillModel train_skill(GeometryPtr geometry,
                       const std::vector<Demonstration>& demos,
                       const TrainOptions& options = {},
                       const std::string& name = "skill");

/// JSON archive, sorted keys and shortest round-trip floats so that a
/// model serializes to the same bytes on every run. wall_seconds is
/// excluded on purpose.
std::string skill_to_json(const SkillModel& model);
SkillModel skill_from_json(const std::string& text);

void save_skill(const SkillModel& model, const std::filesystem::path& file);
SkillModel load_skill(const std::filesystem::path& file);

}  // namespace fskill
