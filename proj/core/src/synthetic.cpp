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

#include "fskill/synthetic.hpp"

#include <cmath>
#include <random>

#include "fskill/attractor.hpp"

namespace fskill {

int SyntheticScript::total_steps() const {
  int total = 0;
  for (const SyntheticStage& s : stages) {
    total += s.steps;
  }
  return total;
}

void SyntheticScript::check_invariants(const Geometry& geom) const {
  const int dim = geom.tangent_dim();
  if (start.size() != geom.ambient_dim() ||
      object_pose.size() != geom.ambient_dim()) {
    throw Error("synthetic script start/object pose dimension mismatch");
  }
  if (damping.rows() != dim || damping.cols() != dim) {
    throw Error("synthetic script damping dimension mismatch");
  }
  for (const SyntheticStage& s : stages) {
    if (s.steps < 1) {
      throw Error("synthetic stage needs at least one step");
    }
    if (s.ramp_steps < 0) {
      throw Error("synthetic stage ramp must be non-negative");
    }
    if (s.attractor.size() != geom.ambient_dim()) {
      throw Error("synthetic stage attractor dimension mismatch");
    }
    check_gains(ImpedanceGains{s.stiffness, damping}, dim);
  }
}

std::vector<Vec> synthetic_attractor_path(const Geometry& geom,
                                          const SyntheticScript& script) {
  std::vector<Vec> path;
  path.reserve(script.total_steps());
  Vec from = geom.project(script.start);
  for (const SyntheticStage& s : script.stages) {
    const Vec target = geom.project(s.attractor);
    const int ramp = std::min(s.ramp_steps, s.steps);
    const Vec chord = ramp > 0 ? Vec(geom.log(target, from)) : Vec();
    for (int i = 0; i < s.steps; ++i) {
      if (i < ramp) {
        const double a = static_cast<double>(i + 1) / ramp;
        path.push_back(geom.exp(a * chord, from));
      } else {
        path.push_back(target);
      }
    }
    from = target;
  }
  return path;
}

std::vector<Mat> synthetic_stiffness_path(const SyntheticScript& script) {
  std::vector<Mat> path;
  path.reserve(script.total_steps());
  for (const SyntheticStage& s : script.stages) {
    for (int i = 0; i < s.steps; ++i) {
      path.push_back(s.stiffness);
    }
  }
  return path;
}

Demonstration generate_synthetic_demo(const Geometry& geom,
                                      const SyntheticScript& script,
                                      const Environment& env, double dt,
                                      double noise, std::uint64_t seed) {
  if (script.stages.empty()) {
    throw Error("synthetic script has no stages");
  }
  if (!(dt > 0.0)) {
    throw Error("generate_synthetic_demo needs dt > 0");
  }
  script.check_invariants(geom);
  env.check_invariants();

  // Unit inertia so each sample satisfies the attractor balance exactly:
  // with M = I the control and logged acceleration cancel to
  // K^nu dx + ddx - f = K log_x(y).
  PlantState state = PlantState::at_rest(geom, script.start);
  state.mass = 1.0;
  state.rotational_inertia = Mat3::Identity();

  const std::vector<Vec> attractors = synthetic_attractor_path(geom, script);
  const std::vector<Mat> gains = synthetic_stiffness_path(script);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int noisy_coords =
      geom.name() == "pose" ? 3 : geom.ambient_dim();

  Demonstration demo;
  demo.id = "synthetic";
  demo.sample_rate = 1.0 / dt;
  demo.points.reserve(attractors.size());

  for (std::size_t i = 0; i < attractors.size(); ++i) {
    const Vec command = gains[i] * geom.log(attractors[i], state.x) -
                        script.damping * state.twist;
    const PlantState next = plant_step(geom, state, command, env, dt);

    ObservationPoint p;
    p.time = static_cast<double>(i) * dt;
    p.x = state.x;
    if (noise > 0.0) {
      for (int c = 0; c < noisy_coords; ++c) {
        p.x[c] += noise * gauss(rng);
      }
      p.x = geom.project(p.x);
    }
    p.twist = state.twist;
    p.accel = next.accel;
    p.wrench = next.wrench;
    p.object_pose = script.object_pose;
    demo.points.push_back(std::move(p));
    state = next;
  }
  return demo;
}

PressSkill make_press_skill(const Geometry& geom, const Vec& object_pose,
                            const PressSkillOptions& options) {
  const bool pose = geom.name() == "pose";
  if (!pose && geom.tangent_dim() != 3) {
    throw Error("press skill needs the pose or euclidean:3 geometry");
  }
  const int dim = geom.tangent_dim();
  const Frame object = frame_from_point(geom, geom.project(object_pose));
  const Mat rot = geom.tangent_rotation(object);

  const auto local_point = [&](double x, double y, double z) {
    if (pose) {
      PosePoint p;
      p.position = Vec3(x, y, z);
      return geom.apply(object, p.to_ambient());
    }
    Vec p(3);
    p << x, y, z;
    return geom.apply(object, p);
  };
  const auto stage_gain = [&](double axial) {
    Vec diag = Vec::Constant(dim, options.lateral_stiffness);
    diag[2] = axial;
    for (int i = 3; i < dim; ++i) {
      diag[i] = options.rotational_stiffness;
    }
    // Diagonal in the object frame, congruent in global coordinates.
    Mat local = diag.asDiagonal();
    return Mat(rot * local * rot.transpose());
  };

  PressSkill out;
  SyntheticScript& script = out.script;
  script.start = local_point(-options.retreat_offset, 0.0,
                             options.hover_height);
  script.object_pose = geom.project(object_pose);
  script.damping = options.damping * Mat::Identity(dim, dim);
  script.stages.push_back({local_point(0.0, 0.0, options.hover_height),
                           stage_gain(options.approach_stiffness),
                           options.approach_steps, options.approach_ramp});
  script.stages.push_back({local_point(0.0, 0.0, -options.press_depth),
                           stage_gain(options.press_stiffness),
                           options.press_steps, options.press_ramp});
  script.stages.push_back(
      {local_point(options.retreat_offset, 0.0, options.hover_height),
       stage_gain(options.retreat_stiffness), options.retreat_steps,
       options.retreat_ramp});

  Environment& env = out.environment;
  env.has_plane = true;
  env.plane_point = object.translation;
  env.plane_normal = (object.rotation * Vec3::UnitZ()).normalized();
  env.attached_frame = "object";
  return out;
}

}  // namespace fskill
