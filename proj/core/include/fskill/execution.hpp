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
#include "fskill/skill_model.hpp"

namespace fskill {

/// Task-space rigid body driven by the impedance command. Joint dynamics
/// are assumed exactly compensated, so the plant is a point mass with a
/// rotational inertia.
struct PlantState {
  Vec x;       // ambient pose
  Vec twist;   // tangent velocity
  Vec accel;   // tangent acceleration realized by the last step
  Vec wrench;  // sensed external wrench (contact plus sensed pushes)
  double mass = 1.0;
  Mat3 rotational_inertia = 0.01 * Mat3::Identity();

  static PlantState at_rest(const Geometry& geom, const Vec& pose);

  /// Generalized inertia on the tangent space: blockdiag(m I, J) for the
  /// pose geometry, m I otherwise.
  Mat inertia_matrix(const Geometry& geom) const;

  void check_invariants(const Geometry& geom) const;
};

/// Penalty-contact world: one optional unilateral plane acting on the
/// position coordinates. The plane can be attached to a scene frame so
/// frame-shift disturbances move it along.
struct Environment {
  bool has_plane = false;
  Vec3 plane_point = Vec3::Zero();
  Vec3 plane_normal = Vec3::UnitZ();  // outward unit normal
  std::string attached_frame;
  double contact_stiffness = 1e4;    // N/m
  double contact_damping = 100.0;    // N s/m, normal direction
  double tangential_friction = 0.0;  // N s/m, viscous

  void check_invariants() const;
};

/// Timed disturbances injected during an episode.
///   position_pulse: unsensed push K_active * magnitude along a tangent
///     axis, which shifts the closed-loop equilibrium by `magnitude`.
///   wrench_pulse: sensed external wrench on a tangent axis.
///   frame_shift: translates a named scene frame (and an attached contact
///     plane) by `shift`; always triggers replanning.
///   force_replan: replans with an empty change set.
struct DisturbanceEvent {
  enum class Kind { kPositionPulse, kWrenchPulse, kFrameShift, kForceReplan };
  Kind kind = Kind::kWrenchPulse;
  double start = 0.0;
  double duration = 0.0;
  int axis = 0;
  double magnitude = 0.0;
  std::string frame;
  Vec3 shift = Vec3::Zero();
};

struct DisturbanceScript {
  std::vector<DisturbanceEvent> events;

  void check_invariants() const;
};

DisturbanceScript load_disturbances(const std::filesystem::path& file);
void save_disturbances(const DisturbanceScript& script,
                       const std::filesystem::path& file);

/// One control tick: plant state at the tick start, acceleration and
/// sensed wrench realized over the tick, command, and reference.
struct ExecutionTick {
  double time = 0.0;
  Vec x;
  Vec twist;
  Vec accel;
  Vec wrench;
  Vec command;    // impedance wrench F
  Vec reference;  // y*, ambient
  int component = 0;     // active component, components() for transitions
  int stiffness_id = 0;  // slot in the episode gain table
  bool replanned = false;
};

struct ReplanEvent {
  double time = 0.0;
  int tick = 0;
  std::string reason;
};

struct ExecutionLog {
  std::string geometry;
  double dt = 0.01;
  std::vector<ExecutionTick> ticks;
  std::vector<ReplanEvent> events;
  bool goal_reached = false;
  bool aborted = false;
  std::string abort_reason;
  /// Gains commanded during the episode, indexed by stiffness_id: the
  /// optimized per-component gains first, then one transition slot per
  /// replan. In-memory diagnostic, not part of the text export.
  std::vector<Mat> gain_table;

  void check_invariants() const;
};

/// Text export mirroring the demonstration format with extra columns:
/// `t x dx ddx f F ystar component stiffness_id replanned`, replanning
/// events as trailing comment lines. Save then load is bit-identical.
std::string execution_log_to_text(const ExecutionLog& log);
ExecutionLog execution_log_from_text(const std::string& text);
void save_execution_log(const ExecutionLog& log,
                        const std::filesystem::path& file);
ExecutionLog load_execution_log(const std::filesystem::path& file);

/// Impedance control wrench
///   F = K^rho log_x(y*) + K^nu (dy* - dx) + M ddy*.
Vec control_wrench(const Geometry& geom, const Vec& y_ref, const Vec& v_ref,
                   const Vec& a_ref, const PlantState& state,
                   const Mat& stiffness, const Mat& damping);

/// Semi-implicit Euler step under the command plus contact and scripted
/// external forces. The returned state's accel/wrench are the ones
/// realized by this step; `unsensed_external` enters the dynamics but not
/// the sensed wrench.
PlantState plant_step(const Geometry& geom, const PlantState& state,
                      const Vec& command, const Environment& env, double dt,
                      const Vec& sensed_external = Vec(),
                      const Vec& unsensed_external = Vec());

struct ExecutionOptions {
  double dt = 0.01;
  /// Replan when ||log_x(y*)|| exceeds this (meter-equivalent norm).
  double deviation_threshold = 0.03;
  /// Replan when the sensed wrench deviates from the active component's
  /// demo mean by more than this for wrench_window seconds.
  double wrench_threshold = 10.0;
  double wrench_window = 0.1;
  double replan_cooldown = 0.25;
  double goal_position_tolerance = 0.005;  // m
  double goal_rotation_tolerance = 0.05;   // rad
  /// Episode tick budget: max_ticks if positive, otherwise
  /// horizon_scale * planned length.
  int max_ticks = 0;
  double horizon_scale = 2.0;
  /// K^nu: fixed initial damping by default, 2 sqrt(m K^rho) when set.
  bool critical_damping = false;
  double mass = 1.0;
  double rotational_inertia = 0.01;
  double control_weight = 1e-4;      // LQT R scale
  double duration_sigma_span = 3.0;  // decode truncation
  double transition_velocity = 0.1;  // m/s, transition duration sizing
  /// Frame the goal pose is expressed in ("global" for world coordinates).
  /// A task-relative goal follows scene-frame shifts.
  std::string goal_frame = "object";
  /// Manual calibration shift applied to this frame before planning.
  std::string object_frame = "object";
  Vec3 object_frame_calibration = Vec3::Zero();

  void check_invariants() const;
};

/// Online episode: initial synthesis (globals, decode, LQT), then per tick
/// the impedance command with the active component's optimized stiffness,
/// a plant step, and trigger evaluation. On a trigger the globals are
/// recomputed, the sequence re-decoded against the virtual attractors of
/// the executed prefix, a transition segment prepended, and the LQT rerun
/// from the current state; the new reference is adopted at the next tick.
/// Ends when the goal pose is reached in the final component, or the tick
/// budget runs out. Decode failures and non-finite states abort the
/// episode into the log instead of throwing; `goal` may be empty to run
/// without goal evidence.
ExecutionLog run_episode(const SkillModel& skill, const Scene& scene,
                         const Vec& goal, const DisturbanceScript& script,
                         const Environment& env,
                         const ExecutionOptions& options = {});

}  // namespace fskill
