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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fskill/geometry.hpp"

namespace fskill {

/// One sample of a kinesthetic demonstration: pose, twist, acceleration,
/// sensed external wrench, and the pose of the task object. The wrench is
/// the force applied by the environment on the end effector, expressed in
/// the global frame.
struct ObservationPoint {
  double time = 0.0;
  Vec x;            // ambient pose
  Vec twist;        // tangent, m/s and rad/s
  Vec accel;        // tangent, m/s^2 and rad/s^2
  Vec wrench;       // tangent, N and N*m
  Vec object_pose;  // ambient pose of the task object
};

struct Demonstration {
  std::string id;
  double sample_rate = 0.0;  // Hz
  std::vector<ObservationPoint> points;

  double dt() const { return sample_rate > 0.0 ? 1.0 / sample_rate : 0.0; }
};

/// Named task frames for one workspace instance.
struct Scene {
  std::vector<std::pair<std::string, Frame>> frames;

  const Frame* find(const std::string& name) const;
  const Frame& require(const std::string& name) const;

  /// Frames reordered to match `names`; throws if one is missing.
  Scene subset(const std::vector<std::string>& names) const;
};

/// Loads one demonstration log. The text format is one record per line,
/// `t x(7) dx(6) ddx(6) f(6) p(7)`, full precision, `#` comment lines for
/// metadata (`# id:`, `# sample_rate:`). Records may omit the ddx block
/// (27 columns); accelerations are then filled in by central finite
/// differences of the twist with 5-sample smoothing.
Demonstration load_demonstration(const std::filesystem::path& file);

/// Loads a single file or every `*.txt` in a directory (sorted by name).
std::vector<Demonstration> load_demonstrations(
    const std::filesystem::path& path);

/// Writes the text format above; save then load is bit-identical.
void save_demonstration(const Demonstration& demo,
                        const std::filesystem::path& file);

struct ValidationIssue {
  int index = 0;  // sample index, -1 for demo-level findings
  std::string message;
};

struct ValidateOptions {
  double dt_jitter = 0.01;          // fraction of the nominal dt
  double twist_abs_tol = 0.05;      // m/s floor before flagging
  double twist_rel_tol = 0.25;      // relative to the recorded twist norm
  double wrench_spike = 50.0;       // N jump between adjacent samples
};

/// Report-only consistency checks: dt jitter, twist vs finite-differenced
/// pose, wrench spikes, non-finite entries.
std::vector<ValidationIssue> validate_demo(const Geometry& geom,
                                           const Demonstration& demo,
                                           const ValidateOptions& opts = {});

/// Builds the task frames named in `frame_names` from the first sample:
/// "global" is the identity, "robot" the initial end-effector pose,
/// "object" the object pose.
Scene scene_from_demo(const Geometry& geom, const Demonstration& demo,
                      const std::vector<std::string>& frame_names);

/// Frame attached to an ambient point (rotation from the orientation part
/// when the geometry has one, translation from the position part).
Frame frame_from_point(const Geometry& geom, const Vec& p);

/// Expresses a demo in each frame of the scene: poses by the inverse frame
/// action, twists/accelerations/wrenches by the inverse tangent rotation.
std::vector<Demonstration> project_to_frames(const Geometry& geom,
                                             const Demonstration& demo,
                                             const Scene& scene);

/// Scene persistence (JSON: frame name -> translation + rotation_wxyz).
Scene load_scene(const std::filesystem::path& file);
void save_scene(const Scene& scene, const std::filesystem::path& file);

}  // namespace fskill
