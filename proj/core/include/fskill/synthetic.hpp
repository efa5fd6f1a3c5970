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
#include <vector>

#include "fskill/execution.hpp"

namespace fskill {

/// One stage of a scripted skill: move the attractor to `attractor` and
/// hold it there with these gains for the rest of the stage. The first
/// `ramp_steps` samples interpolate geodesically from the previous
/// stage's attractor (the script start pose for the first stage), the way
/// a demonstrator drags the arm rather than teleporting the setpoint.
struct SyntheticStage {
  Vec attractor;  // ambient pose, global frame
  Mat stiffness;  // ground-truth K^rho
  int steps = 100;
  int ramp_steps = 0;
};

struct SyntheticScript {
  std::vector<SyntheticStage> stages;
  Vec start;        // initial pose
  Vec object_pose;  // task object pose logged with every sample
  Mat damping;      // K^nu shared by all stages

  int total_steps() const;
  void check_invariants(const Geometry& geom) const;
};

/// The scripted attractor per sample, the ground truth that the attractor
/// transform must reconstruct from a generated demo.
std::vector<Vec> synthetic_attractor_path(const Geometry& geom,
                                          const SyntheticScript& script);

/// Ground-truth stiffness per sample.
std::vector<Mat> synthetic_stiffness_path(const SyntheticScript& script);

/// Simulates a unit-inertia plant under the scripted impedance control and
/// logs a demonstration at 1/dt Hz. With zero noise the attractor
/// transform with the true gains reconstructs the script exactly, contact
/// included, because each sample's logged acceleration and wrench are the
/// ones the integrator realized. Gaussian position noise (stddev `noise`)
/// perturbs the logged poses only.
Demonstration generate_synthetic_demo(const Geometry& geom,
                                      const SyntheticScript& script,
                                      const Environment& env, double dt,
                                      double noise = 0.0,
                                      std::uint64_t seed = 0);

/// Three-stage press script against a plane through `object`: approach
/// above the surface, press to `press_depth` below it, retreat to an
/// offset hover point. Stage stiffness along the pressing axis is
/// approach/press/retreat; off-axis translations get `lateral_stiffness`
/// and rotations `rotational_stiffness` (pose geometry only).
struct PressSkillOptions {
  double approach_stiffness = 400.0;
  double press_stiffness = 300.0;
  double retreat_stiffness = 600.0;
  double lateral_stiffness = 300.0;
  double rotational_stiffness = 20.0;
  double damping = 40.0;
  double hover_height = 0.08;   // m above the surface
  double press_depth = 0.015;   // m below the surface
  double retreat_offset = 0.05; // m sideways at the retreat hover
  int approach_steps = 150;
  int press_steps = 240;
  int retreat_steps = 200;
  // Attractor travel time at the head of each stage; the remainder holds.
  // Paced so the plant tracks the setpoint closely and every stage ends
  // settled, like an unhurried kinesthetic demonstration.
  int approach_ramp = 60;
  int press_ramp = 90;
  int retreat_ramp = 80;
};

struct PressSkill {
  SyntheticScript script;
  Environment environment;
};

/// Builds the script and matching contact plane for a press at `object`
/// (plane normal along the object z-axis).
PressSkill make_press_skill(const Geometry& geom, const Vec& object_pose,
                            const PressSkillOptions& options = {});

}  // namespace fskill
