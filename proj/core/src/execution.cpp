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

#include "fskill/execution.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fskill/attractor.hpp"
#include "fskill/sequencing.hpp"

namespace fskill {

namespace {

using nlohmann::json;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) {
      ++i;
    }
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') {
      ++j;
    }
    if (j > i) {
      out.push_back(line.substr(i, j - i));
    }
    i = j;
  }
  return out;
}

Mat sqrt_psd(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(m);
  Vec v = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * v.asDiagonal() * eig.eigenvectors().transpose();
}

/// D = 2 M^(1/2) (M^(-1/2) K M^(-1/2))^(1/2) M^(1/2), the matrix version of
/// the scalar 2 sqrt(m k).
Mat critical_damping(const Mat& inertia, const Mat& stiffness) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(inertia);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw NumericError("critical damping needs a positive definite inertia");
  }
  Vec half = eig.eigenvalues().cwiseSqrt();
  Mat m_half =
      eig.eigenvectors() * half.asDiagonal() * eig.eigenvectors().transpose();
  Mat m_half_inv = eig.eigenvectors() * half.cwiseInverse().asDiagonal() *
                   eig.eigenvectors().transpose();
  Mat scaled = m_half_inv * stiffness * m_half_inv;
  return 2.0 * m_half * sqrt_psd(0.5 * (scaled + scaled.transpose())) * m_half;
}

/// Ambient point of a task frame: pose from rotation+translation, the
/// leading position coordinates otherwise.
Vec ambient_from_frame(const Geometry& geom, const Frame& frame) {
  if (geom.name() == "pose") {
    PosePoint p;
    p.position = frame.translation;
    p.orientation = frame.rotation;
    return p.to_ambient();
  }
  Vec out = Vec::Zero(geom.ambient_dim());
  const int pc = std::min(3, geom.ambient_dim());
  out.head(pc) = frame.translation.head(pc);
  return out;
}

int position_coords(const Geometry& geom) {
  return std::min(3, geom.name() == "pose" ? 3 : geom.tangent_dim());
}

Vec contact_force(const Geometry& geom, const Environment& env, const Vec& x,
                  const Vec& twist) {
  Vec contact = Vec::Zero(geom.tangent_dim());
  if (!env.has_plane) {
    return contact;
  }
  const int pc = position_coords(geom);
  Vec3 p = Vec3::Zero();
  p.head(pc) = x.head(pc);
  Vec3 v = Vec3::Zero();
  v.head(pc) = twist.head(pc);
  const double pen = env.plane_normal.dot(env.plane_point - p);
  if (pen <= 0.0) {
    return contact;
  }
  const double vn = env.plane_normal.dot(v);
  Vec3 f =
      env.plane_normal *
      std::max(0.0, env.contact_stiffness * pen - env.contact_damping * vn);
  if (env.tangential_friction > 0.0) {
    f -= env.tangential_friction * (v - env.plane_normal * vn);
  }
  contact.head(pc) = f.head(pc);
  return contact;
}

const char* kind_name(DisturbanceEvent::Kind kind) {
  switch (kind) {
    case DisturbanceEvent::Kind::kPositionPulse:
      return "position-pulse";
    case DisturbanceEvent::Kind::kWrenchPulse:
      return "wrench-pulse";
    case DisturbanceEvent::Kind::kFrameShift:
      return "frame-shift";
    case DisturbanceEvent::Kind::kForceReplan:
      return "force-replan";
  }
  return "unknown";
}

DisturbanceEvent::Kind kind_from_name(const std::string& name) {
  if (name == "position-pulse") {
    return DisturbanceEvent::Kind::kPositionPulse;
  }
  if (name == "wrench-pulse") {
    return DisturbanceEvent::Kind::kWrenchPulse;
  }
  if (name == "frame-shift") {
    return DisturbanceEvent::Kind::kFrameShift;
  }
  if (name == "force-replan") {
    return DisturbanceEvent::Kind::kForceReplan;
  }
  throw FormatError("unknown disturbance kind '" + name + "'");
}

void append_block(std::string& out, const Vec& v) {
  for (int i = 0; i < v.size(); ++i) {
    out.push_back(' ');
    append_double(out, v[i]);
  }
}

}  // namespace

PlantState PlantState::at_rest(const Geometry& geom, const Vec& pose) {
  PlantState s;
  s.x = geom.project(pose);
  s.twist = Vec::Zero(geom.tangent_dim());
  s.accel = Vec::Zero(geom.tangent_dim());
  s.wrench = Vec::Zero(geom.tangent_dim());
  return s;
}

Mat PlantState::inertia_matrix(const Geometry& geom) const {
  const int dim = geom.tangent_dim();
  if (geom.name() == "pose") {
    Mat m = Mat::Zero(dim, dim);
    m.topLeftCorner(3, 3) = mass * Mat3::Identity();
    m.bottomRightCorner(3, 3) = rotational_inertia;
    return m;
  }
  return mass * Mat::Identity(dim, dim);
}

void PlantState::check_invariants(const Geometry& geom) const {
  if (x.size() != geom.ambient_dim() || twist.size() != geom.tangent_dim() ||
      accel.size() != geom.tangent_dim() ||
      wrench.size() != geom.tangent_dim()) {
    throw Error("plant state dimension mismatch");
  }
  if (!x.allFinite() || !twist.allFinite() || !accel.allFinite() ||
      !wrench.allFinite() || !std::isfinite(mass) ||
      !rotational_inertia.allFinite()) {
    throw NumericError("plant state contains non-finite values");
  }
  if (mass <= 0.0) {
    throw Error("plant mass must be positive");
  }
}

void Environment::check_invariants() const {
  if (!has_plane) {
    return;
  }
  if (std::abs(plane_normal.norm() - 1.0) > 1e-9) {
    throw Error("contact plane normal must be unit length");
  }
  if (contact_stiffness <= 0.0 || contact_damping < 0.0 ||
      tangential_friction < 0.0) {
    throw Error("contact parameters out of range");
  }
}

void DisturbanceScript::check_invariants() const {
  for (const DisturbanceEvent& e : events) {
    if (!(e.start >= 0.0) || !(e.duration >= 0.0) ||
        !std::isfinite(e.magnitude) || !e.shift.allFinite()) {
      throw Error("disturbance event out of range");
    }
    if (e.axis < 0) {
      throw Error("disturbance axis must be non-negative");
    }
    if (e.kind == DisturbanceEvent::Kind::kFrameShift && e.frame.empty()) {
      throw Error("frame-shift event needs a frame name");
    }
  }
}

DisturbanceScript load_disturbances(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw IoError("cannot open disturbance script: " + file.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("disturbance script " + file.string() + ": " + e.what());
  }
  DisturbanceScript script;
  try {
    for (const json& je : j.at("events")) {
      DisturbanceEvent e;
      e.kind = kind_from_name(je.at("kind").get<std::string>());
      e.start = je.at("start").get<double>();
      e.duration = je.value("duration", 0.0);
      e.axis = je.value("axis", 0);
      e.magnitude = je.value("magnitude", 0.0);
      e.frame = je.value("frame", std::string());
      if (je.contains("shift")) {
        const auto s = je["shift"].get<std::vector<double>>();
        if (s.size() != 3) {
          throw FormatError("frame-shift 'shift' needs 3 numbers");
        }
        e.shift = Vec3(s[0], s[1], s[2]);
      }
      script.events.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw FormatError("disturbance script " + file.string() + ": " + e.what());
  }
  script.check_invariants();
  return script;
}

void save_disturbances(const DisturbanceScript& script,
                       const std::filesystem::path& file) {
  json events = json::array();
  for (const DisturbanceEvent& e : script.events) {
    json je;
    je["kind"] = kind_name(e.kind);
    je["start"] = e.start;
    if (e.duration > 0.0) {
      je["duration"] = e.duration;
    }
    switch (e.kind) {
      case DisturbanceEvent::Kind::kPositionPulse:
      case DisturbanceEvent::Kind::kWrenchPulse:
        je["axis"] = e.axis;
        je["magnitude"] = e.magnitude;
        break;
      case DisturbanceEvent::Kind::kFrameShift:
        je["frame"] = e.frame;
        je["shift"] = {e.shift.x(), e.shift.y(), e.shift.z()};
        break;
      case DisturbanceEvent::Kind::kForceReplan:
        break;
    }
    events.push_back(std::move(je));
  }
  json j;
  j["events"] = std::move(events);
  std::ofstream out(file);
  if (!out) {
    throw IoError("cannot write disturbance script: " + file.string());
  }
  out << j.dump(2) << "\n";
}

void ExecutionLog::check_invariants() const {
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    const ExecutionTick& t = ticks[i];
    const double expect = ticks.front().time + static_cast<double>(i) * dt;
    if (std::abs(t.time - expect) > 1e-9) {
      throw Error("execution log ticks are not uniform at dt");
    }
    if (!t.x.allFinite() || !t.twist.allFinite() || !t.accel.allFinite() ||
        !t.wrench.allFinite() || !t.command.allFinite() ||
        !t.reference.allFinite()) {
      throw NumericError("execution log contains non-finite values");
    }
  }
}

std::string execution_log_to_text(const ExecutionLog& log) {
  std::string out;
  out += "# fskill-execution-log\n";
  out += "# geometry: " + log.geometry + "\n";
  out += "# dt: " + format_double(log.dt) + "\n";
  out += std::string("# goal_reached: ") + (log.goal_reached ? "1" : "0") +
         "\n";
  out += std::string("# aborted: ") + (log.aborted ? "1" : "0") + "\n";
  if (log.aborted) {
    out += "# abort_reason: " + log.abort_reason + "\n";
  }
  out += "# columns: t x dx ddx f F ystar component stiffness_id replanned\n";
  for (const ExecutionTick& t : log.ticks) {
    append_double(out, t.time);
    append_block(out, t.x);
    append_block(out, t.twist);
    append_block(out, t.accel);
    append_block(out, t.wrench);
    append_block(out, t.command);
    append_block(out, t.reference);
    out += " " + std::to_string(t.component);
    out += " " + std::to_string(t.stiffness_id);
    out += t.replanned ? " 1" : " 0";
    out.push_back('\n');
  }
  for (const ReplanEvent& e : log.events) {
    out += "# event: " + format_double(e.time) + " " + std::to_string(e.tick) +
           " " + e.reason + "\n";
  }
  return out;
}

ExecutionLog execution_log_from_text(const std::string& text) {
  ExecutionLog log;
  std::istringstream in(text);
  std::string line;
  bool tagged = false;
  GeometryPtr geom;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    if (line[0] == '#') {
      std::string_view rest = std::string_view(line).substr(1);
      while (!rest.empty() && rest.front() == ' ') {
        rest.remove_prefix(1);
      }
      if (rest == "fskill-execution-log") {
        tagged = true;
      } else if (rest.rfind("geometry: ", 0) == 0) {
        log.geometry = std::string(rest.substr(10));
        geom = Geometry::from_name(log.geometry);
      } else if (rest.rfind("dt: ", 0) == 0) {
        log.dt = parse_double(rest.substr(4));
      } else if (rest.rfind("goal_reached: ", 0) == 0) {
        log.goal_reached = rest.substr(14) == "1";
      } else if (rest.rfind("aborted: ", 0) == 0) {
        log.aborted = rest.substr(9) == "1";
      } else if (rest.rfind("abort_reason: ", 0) == 0) {
        log.abort_reason = std::string(rest.substr(14));
      } else if (rest.rfind("event: ", 0) == 0) {
        const auto fields = split_fields(rest.substr(7));
        if (fields.size() < 2) {
          throw FormatError("execution log line " + std::to_string(line_no) +
                            ": malformed event");
        }
        ReplanEvent e;
        e.time = parse_double(fields[0]);
        e.tick = static_cast<int>(parse_integer(fields[1]));
        const char* begin = fields.size() > 2 ? fields[2].data()
                                              : rest.data() + rest.size();
        e.reason = std::string(begin, rest.data() + rest.size());
        log.events.push_back(std::move(e));
      }
      continue;
    }
    if (!tagged || !geom) {
      throw FormatError("execution log: missing header before data");
    }
    const int a = geom->ambient_dim();
    const int d = geom->tangent_dim();
    const auto fields = split_fields(line);
    const std::size_t expect =
        1 + static_cast<std::size_t>(2 * a + 4 * d) + 3;
    if (fields.size() != expect) {
      throw FormatError("execution log line " + std::to_string(line_no) +
                        ": expected " + std::to_string(expect) +
                        " columns, got " + std::to_string(fields.size()));
    }
    ExecutionTick t;
    std::size_t f = 0;
    t.time = parse_double(fields[f++]);
    auto take = [&](int n) {
      Vec v(n);
      for (int i = 0; i < n; ++i) {
        v[i] = parse_double(fields[f++]);
      }
      return v;
    };
    t.x = take(a);
    t.twist = take(d);
    t.accel = take(d);
    t.wrench = take(d);
    t.command = take(d);
    t.reference = take(a);
    t.component = static_cast<int>(parse_integer(fields[f++]));
    t.stiffness_id = static_cast<int>(parse_integer(fields[f++]));
    t.replanned = parse_integer(fields[f++]) != 0;
    log.ticks.push_back(std::move(t));
  }
  if (!tagged) {
    throw FormatError("not an execution log (missing tag line)");
  }
  return log;
}

void save_execution_log(const ExecutionLog& log,
                        const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) {
    throw IoError("cannot write execution log: " + file.string());
  }
  out << execution_log_to_text(log);
}

ExecutionLog load_execution_log(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw IoError("cannot open execution log: " + file.string());
  }
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  try {
    return execution_log_from_text(text);
  } catch (const FormatError& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
}

Vec control_wrench(const Geometry& geom, const Vec& y_ref, const Vec& v_ref,
                   const Vec& a_ref, const PlantState& state,
                   const Mat& stiffness, const Mat& damping) {
  const int dim = geom.tangent_dim();
  if (stiffness.rows() != dim || stiffness.cols() != dim ||
      damping.rows() != dim || damping.cols() != dim) {
    throw Error("control gains must match the tangent dimension");
  }
  const Vec err = geom.log(geom.project(y_ref), state.x);
  return stiffness * err + damping * (v_ref - state.twist) +
         state.inertia_matrix(geom) * a_ref;
}

PlantState plant_step(const Geometry& geom, const PlantState& state,
                      const Vec& command, const Environment& env, double dt,
                      const Vec& sensed_external,
                      const Vec& unsensed_external) {
  if (!(dt > 0.0)) {
    throw Error("plant_step needs dt > 0");
  }
  const int dim = geom.tangent_dim();
  if (command.size() != dim) {
    throw Error("plant_step command dimension mismatch");
  }
  state.check_invariants(geom);
  env.check_invariants();
  const Vec contact = contact_force(geom, env, state.x, state.twist);
  Vec total = command + contact;
  if (sensed_external.size() == dim) {
    total += sensed_external;
  }
  if (unsensed_external.size() == dim) {
    total += unsensed_external;
  }
  PlantState next = state;
  next.accel = state.inertia_matrix(geom).llt().solve(total);
  next.twist = state.twist + dt * next.accel;
  next.x = geom.exp(dt * next.twist, state.x);
  next.wrench = contact;
  if (sensed_external.size() == dim) {
    next.wrench += sensed_external;
  }
  return next;
}

void ExecutionOptions::check_invariants() const {
  if (!(dt > 0.0) || !(deviation_threshold > 0.0) ||
      !(wrench_threshold > 0.0) || !(wrench_window >= 0.0) ||
      !(replan_cooldown >= 0.0) || !(goal_position_tolerance > 0.0) ||
      !(goal_rotation_tolerance > 0.0) || !(horizon_scale >= 1.0) ||
      !(mass > 0.0) || !(rotational_inertia > 0.0) ||
      !(control_weight > 0.0) || !(duration_sigma_span > 0.0) ||
      !(transition_velocity > 0.0) || max_ticks < 0) {
    throw Error("execution options out of range");
  }
}

ExecutionLog run_episode(const SkillModel& skill, const Scene& scene,
                         const Vec& goal, const DisturbanceScript& script,
                         const Environment& env,
                         const ExecutionOptions& options) {
  skill.check_invariants();
  options.check_invariants();
  env.check_invariants();
  script.check_invariants();

  const GeometryPtr geometry = skill.attractor.geometry;
  const Geometry& geom = *geometry;
  const int dim = geom.tangent_dim();
  const int k_comp = skill.components();
  const double dt = options.dt;

  for (const std::string& name : skill.attractor.frame_names) {
    if (!scene.find(name)) {
      throw Error("scene missing frame '" + name + "'");
    }
  }
  if (!env.attached_frame.empty() && !scene.find(env.attached_frame)) {
    throw Error("environment attached to unknown frame '" +
                env.attached_frame + "'");
  }
  for (const DisturbanceEvent& e : script.events) {
    if ((e.kind == DisturbanceEvent::Kind::kPositionPulse ||
         e.kind == DisturbanceEvent::Kind::kWrenchPulse) &&
        e.axis >= dim) {
      throw Error("disturbance axis out of range");
    }
    if (e.kind == DisturbanceEvent::Kind::kFrameShift &&
        !scene.find(e.frame)) {
      throw Error("frame-shift targets unknown frame '" + e.frame + "'");
    }
  }

  Scene world = scene;
  if (!options.object_frame_calibration.isZero()) {
    bool found = false;
    for (auto& [name, frame] : world.frames) {
      if (name == options.object_frame) {
        frame.translation += options.object_frame_calibration;
        found = true;
      }
    }
    if (!found) {
      throw Error("calibration frame '" + options.object_frame +
                  "' not in scene");
    }
  }
  Environment world_env = env;

  const auto goal_global = [&]() -> std::optional<Vec> {
    if (goal.size() == 0) {
      return std::nullopt;
    }
    Vec g = geom.project(goal);
    if (options.goal_frame != "global") {
      g = geom.apply(world.require(options.goal_frame), g);
    }
    return g;
  };
  if (goal.size() != 0 && options.goal_frame != "global" &&
      !scene.find(options.goal_frame)) {
    throw Error("scene missing frame '" + options.goal_frame + "'");
  }

  const auto object_pose_now = [&]() -> Vec {
    if (const Frame* f = world.find(options.object_frame)) {
      return ambient_from_frame(geom, *f);
    }
    return geom.origin();
  };

  ExecutionLog log;
  log.geometry = geom.name();
  log.dt = dt;

  // Plant starts at the scene's robot frame, or the first component.
  std::vector<Gaussian> globals =
      global_components(skill.attractor, world);
  Vec start_pose;
  if (const Frame* rf = world.find("robot")) {
    start_pose = ambient_from_frame(geom, *rf);
  } else {
    start_pose = globals.front().mean;
  }
  PlantState state = PlantState::at_rest(geom, start_pose);
  state.mass = options.mass;
  state.rotational_inertia = options.rotational_inertia * Mat3::Identity();

  const Mat inertia = state.inertia_matrix(geom);
  std::vector<Mat> gain_table = skill.stiffness.gains;
  std::vector<Mat> damping_table;
  damping_table.reserve(gain_table.size());
  for (const Mat& g : gain_table) {
    damping_table.push_back(options.critical_damping
                                ? critical_damping(inertia, g)
                                : skill.damping);
  }

  const auto abort_with = [&](const std::string& reason) -> ExecutionLog& {
    log.aborted = true;
    log.abort_reason = reason;
    log.gain_table = gain_table;
    return log;
  };

  // Current reference and its bookkeeping.
  ReferenceTrajectory ref;
  int ref_start = 0;
  std::vector<int> plan_slots;  // per reference index, gain table slot
  int plan_last_real = 0;

  const auto adopt = [&](const std::vector<int>& flat,
                         const std::vector<Gaussian>& bases, int start_tick,
                         int transition_slot) {
    LqtOptions lopts;
    lopts.dt = dt;
    lopts.control_weight = options.control_weight;
    lopts.start_time = start_tick * dt;
    lopts.start_position = state.x;
    lopts.start_velocity = state.twist;
    ref = lqt_reference(geom, flat, bases, lopts);
    ref_start = start_tick;
    plan_slots.clear();
    plan_slots.reserve(flat.size());
    for (int id : flat) {
      plan_slots.push_back(id == k_comp ? transition_slot : id);
    }
    for (auto it = flat.rbegin(); it != flat.rend(); ++it) {
      if (*it < k_comp) {
        plan_last_real = *it;
        break;
      }
    }
  };

  // Initial synthesis.
  int t_plan = 0;
  for (const DurationModel& d : skill.attractor.durations) {
    t_plan += static_cast<int>(std::llround(std::max(1.0, d.mean)));
  }
  t_plan = std::max(t_plan, 2);
  try {
    DecodeRequest req;
    req.horizon = t_plan;
    req.start_observation = state.x;
    req.end_observation = goal_global();
    req.duration_sigma_span = options.duration_sigma_span;
    const ComponentSequence seq = most_likely_sequence(
        geom, globals, skill.attractor.priors, skill.attractor.transitions,
        skill.attractor.durations, req);
    adopt(seq.flat, globals, 0, 0);
  } catch (const Error& e) {
    abort_with(std::string("initial decode failed: ") + e.what());
    return log;
  }

  const int max_ticks =
      options.max_ticks > 0
          ? options.max_ticks
          : static_cast<int>(std::ceil(options.horizon_scale * t_plan));

  std::vector<ObservationPoint> history;
  std::vector<int> exec_components;
  std::vector<int> exec_slots;
  history.reserve(max_ticks);
  std::vector<bool> consumed(script.events.size(), false);
  double last_replan = -1e30;
  int wrench_hot = 0;

  const auto ref_at = [&](int tick) {
    struct Ref {
      Vec y;
      Vec v;
      Vec a;
      int component;
      int slot;
    } r;
    const int len = ref.length();
    const int off = tick - ref_start;
    const int j = std::clamp(off, 0, len - 1);
    r.y = ref.points[j];
    if (off >= len) {
      r.v = Vec::Zero(dim);
      r.a = Vec::Zero(dim);
    } else {
      r.v = ref.velocities[j];
      r.a = ref.accelerations[j];
    }
    r.component = ref.components[j];
    r.slot = plan_slots[j];
    return r;
  };

  for (int tick = 0; tick < max_ticks; ++tick) {
    const double now = tick * dt;

    // Scene-change events due this tick.
    std::string reason;
    for (std::size_t e = 0; e < script.events.size(); ++e) {
      const DisturbanceEvent& ev = script.events[e];
      if (consumed[e] || ev.start > now + 1e-12) {
        continue;
      }
      if (ev.kind == DisturbanceEvent::Kind::kFrameShift) {
        for (auto& [name, frame] : world.frames) {
          if (name == ev.frame) {
            frame.translation += ev.shift;
          }
        }
        if (world_env.has_plane && world_env.attached_frame == ev.frame) {
          world_env.plane_point += ev.shift;
        }
        if (!reason.empty()) {
          reason += "; ";
        }
        reason += "frame shift '" + ev.frame + "'";
        consumed[e] = true;
      } else if (ev.kind == DisturbanceEvent::Kind::kForceReplan) {
        if (!reason.empty()) {
          reason += "; ";
        }
        reason += "scripted replan";
        consumed[e] = true;
      }
    }

    // Deviation and force triggers, suppressed right after a replan.
    if (reason.empty() && now - last_replan >= options.replan_cooldown &&
        tick > 0) {
      const auto r = ref_at(tick);
      if (geom.log(geom.project(r.y), state.x).norm() >
          options.deviation_threshold) {
        reason = "tracking deviation";
      } else if (wrench_hot * dt >= options.wrench_window &&
                 options.wrench_window > 0.0) {
        reason = "wrench deviation";
      }
    }

    bool replanned = false;
    if (!reason.empty()) {
      try {
        globals = global_components(skill.attractor, world);
        const int past = tick;
        const int plan_end = ref_start + ref.length();
        int remaining = plan_end - past;
        const int tail = static_cast<int>(std::llround(
            std::max(1.0, skill.attractor.durations[plan_last_real].mean)));
        remaining = std::max({remaining, tail, 2});

        DecodeRequest req;
        req.horizon = past + remaining;
        req.end_observation = goal_global();
        req.duration_sigma_span = options.duration_sigma_span;
        req.executed = exec_components;
        req.past_attractors = virtual_attractor_series(
            geom, history, exec_slots, gain_table, skill.damping);
        const ComponentSequence seq = most_likely_sequence(
            geom, globals, skill.attractor.priors, skill.attractor.transitions,
            skill.attractor.durations, req);

        std::vector<int> future(seq.flat.begin() + past, seq.flat.end());
        const int next_real = future.front();
        const Mat current_gain =
            tick > 0 ? gain_table[exec_slots.back()] : gain_table[0];
        TransitionOptions topts;
        topts.v_ref = options.transition_velocity;
        topts.dt = dt;
        const TransitionPlan plan = prepend_transition(
            geom, ComponentSequence::from_flat(future), state.x,
            globals[next_real].mean, current_gain, globals[next_real].cov,
            k_comp, topts);

        gain_table.push_back(plan.stiffness);
        damping_table.push_back(options.critical_damping
                                    ? critical_damping(inertia, plan.stiffness)
                                    : skill.damping);
        std::vector<Gaussian> bases = globals;
        bases.push_back(plan.global);
        adopt(plan.sequence.flat, bases, tick,
              static_cast<int>(gain_table.size()) - 1);
        log.events.push_back({now, tick, reason});
        last_replan = now;
        wrench_hot = 0;
        replanned = true;
      } catch (const Error& e) {
        abort_with("replanning failed: " + std::string(e.what()));
        return log;
      }
    }

    // Impedance command for this tick.
    const auto r = ref_at(tick);
    const Mat& gain = gain_table[r.slot];
    const Vec command =
        control_wrench(geom, r.y, r.v, r.a, state, gain, damping_table[r.slot]);

    // Scripted pulses active now.
    Vec sensed = Vec::Zero(dim);
    Vec unsensed = Vec::Zero(dim);
    for (const DisturbanceEvent& ev : script.events) {
      if (now + 1e-12 < ev.start || now >= ev.start + ev.duration - 1e-12) {
        continue;
      }
      if (ev.kind == DisturbanceEvent::Kind::kWrenchPulse) {
        sensed[ev.axis] += ev.magnitude;
      } else if (ev.kind == DisturbanceEvent::Kind::kPositionPulse) {
        Vec shift = Vec::Zero(dim);
        shift[ev.axis] = ev.magnitude;
        unsensed += gain * shift;
      }
    }

    PlantState next;
    try {
      next = plant_step(geom, state, command, world_env, dt, sensed, unsensed);
    } catch (const Error& e) {
      abort_with("plant step failed: " + std::string(e.what()));
      return log;
    }

    ExecutionTick entry;
    entry.time = now;
    entry.x = state.x;
    entry.twist = state.twist;
    entry.accel = next.accel;
    entry.wrench = next.wrench;
    entry.command = command;
    entry.reference = r.y;
    entry.component = r.component;
    entry.stiffness_id = r.slot;
    entry.replanned = replanned;
    log.ticks.push_back(std::move(entry));

    ObservationPoint obs;
    obs.time = now;
    obs.x = state.x;
    obs.twist = state.twist;
    obs.accel = next.accel;
    obs.wrench = next.wrench;
    obs.object_pose = object_pose_now();
    history.push_back(std::move(obs));
    exec_components.push_back(r.component);
    exec_slots.push_back(r.slot);

    // Goal test in the final component (or past the plan's end).
    if (const auto g = goal_global()) {
      const bool in_final = r.component == plan_last_real ||
                            tick - ref_start >= ref.length() - 1;
      if (in_final) {
        const bool pose = geom.name() == "pose";
        const int pc = pose ? 3 : geom.ambient_dim();
        const double pos_err = (state.x.head(pc) - g->head(pc)).norm();
        const double rot_err =
            pose ? geom.log(*g, state.x).tail(3).norm() : 0.0;
        if (pos_err <= options.goal_position_tolerance &&
            rot_err <= options.goal_rotation_tolerance) {
          log.goal_reached = true;
          break;
        }
      }
    }

    if (!next.x.allFinite() || !next.twist.allFinite()) {
      abort_with("non-finite plant state at t=" + format_double(now));
      return log;
    }
    state = next;

    // Force-deviation bookkeeping for the next tick.
    if (options.wrench_window > 0.0 && r.component < k_comp) {
      const Vec dev = state.wrench - skill.wrench_means[r.component];
      wrench_hot = dev.norm() > options.wrench_threshold ? wrench_hot + 1 : 0;
    } else {
      wrench_hot = 0;
    }
  }

  log.gain_table = gain_table;
  return log;
}

}  // namespace fskill
