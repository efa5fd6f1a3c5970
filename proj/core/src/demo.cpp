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

#include "fskill/demo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fskill {

namespace {

bool finite(const Vec& v) { return v.allFinite(); }

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

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

// Fills missing accelerations by central differences of the twist followed
// by a 5-sample moving average.
void fill_accelerations(Demonstration& demo) {
  const int n = static_cast<int>(demo.points.size());
  const int d = static_cast<int>(demo.points.front().twist.size());
  std::vector<Vec> raw(n, Vec::Zero(d));
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - 1);
    const int hi = std::min(n - 1, i + 1);
    const double span = demo.points[hi].time - demo.points[lo].time;
    if (span > 0.0) {
      raw[i] = (demo.points[hi].twist - demo.points[lo].twist) / span;
    }
  }
  for (int i = 0; i < n; ++i) {
    Vec acc = Vec::Zero(d);
    int count = 0;
    for (int j = std::max(0, i - 2); j <= std::min(n - 1, i + 2); ++j) {
      acc += raw[j];
      ++count;
    }
    demo.points[i].accel = acc / static_cast<double>(count);
  }
}

double median_dt(const Demonstration& demo) {
  std::vector<double> dts;
  dts.reserve(demo.points.size());
  for (std::size_t i = 1; i < demo.points.size(); ++i) {
    dts.push_back(demo.points[i].time - demo.points[i - 1].time);
  }
  std::sort(dts.begin(), dts.end());
  return dts[dts.size() / 2];
}

void append_block(std::string& line, const Vec& v) {
  for (int i = 0; i < v.size(); ++i) {
    line.push_back(' ');
    append_double(line, v(i));
  }
}

nlohmann::json frame_to_json(const Frame& f) {
  const Quat q = canonical_quaternion(f.rotation);
  return nlohmann::json{
      {"translation", {f.translation.x(), f.translation.y(),
                       f.translation.z()}},
      {"rotation_wxyz", {q.w(), q.x(), q.y(), q.z()}}};
}

Frame frame_from_json(const nlohmann::json& j) {
  Frame f;
  const auto& t = j.at("translation");
  const auto& r = j.at("rotation_wxyz");
  if (t.size() != 3 || r.size() != 4) {
    throw FormatError("scene frame needs translation[3] and rotation_wxyz[4]");
  }
  f.translation = Vec3(t[0].get<double>(), t[1].get<double>(),
                       t[2].get<double>());
  f.rotation = canonical_quaternion(
      Quat(r[0].get<double>(), r[1].get<double>(), r[2].get<double>(),
           r[3].get<double>()));
  return f;
}

}  // namespace

const Frame* Scene::find(const std::string& name) const {
  for (const auto& [n, f] : frames) {
    if (n == name) {
      return &f;
    }
  }
  return nullptr;
}

const Frame& Scene::require(const std::string& name) const {
  const Frame* f = find(name);
  if (f == nullptr) {
    throw Error("scene has no frame named '" + name + "'");
  }
  return *f;
}

Scene Scene::subset(const std::vector<std::string>& names) const {
  Scene out;
  for (const std::string& n : names) {
    out.frames.emplace_back(n, require(n));
  }
  return out;
}

Demonstration load_demonstration(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw IoError("cannot open demonstration file: " + file.string());
  }
  Demonstration demo;
  demo.id = file.stem().string();
  double header_rate = 0.0;

  std::string line;
  int line_no = 0;
  int columns = 0;
  bool needs_accel = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty()) {
      continue;
    }
    if (body.front() == '#') {
      std::string_view meta = trim(body.substr(1));
      if (meta.rfind("id:", 0) == 0) {
        demo.id = std::string(trim(meta.substr(3)));
      } else if (meta.rfind("sample_rate:", 0) == 0) {
        header_rate = parse_double(trim(meta.substr(12)));
      }
      continue;
    }
    const auto fields = split_fields(body);
    const int n = static_cast<int>(fields.size());
    if (n != 33 && n != 27) {
      throw FormatError(file.string() + ":" + std::to_string(line_no) +
                        ": expected 33 (or 27 without ddx) columns, got " +
                        std::to_string(n));
    }
    if (columns == 0) {
      columns = n;
      needs_accel = (n == 27);
    } else if (columns != n) {
      throw FormatError(file.string() + ":" + std::to_string(line_no) +
                        ": inconsistent column count");
    }
    ObservationPoint p;
    int k = 0;
    auto take = [&](int count) {
      Vec v(count);
      for (int i = 0; i < count; ++i) {
        try {
          v(i) = parse_double(fields[k++]);
        } catch (const FormatError& e) {
          throw FormatError(file.string() + ":" + std::to_string(line_no) +
                            ": " + e.what());
        }
      }
      return v;
    };
    p.time = take(1)(0);
    p.x = take(7);
    p.twist = take(6);
    if (!needs_accel) {
      p.accel = take(6);
    } else {
      p.accel = Vec::Zero(6);
    }
    p.wrench = take(6);
    p.object_pose = take(7);

    if (!std::isfinite(p.time) || !finite(p.x) || !finite(p.twist) ||
        !finite(p.accel) || !finite(p.wrench) || !finite(p.object_pose)) {
      throw FormatError(file.string() + ":" + std::to_string(line_no) +
                        ": non-finite entry");
    }
    const double qnorm = p.x.tail<4>().norm();
    if (std::abs(qnorm - 1.0) > 0.01) {
      throw FormatError(file.string() + ":" + std::to_string(line_no) +
                        ": quaternion norm " + format_double(qnorm) +
                        " is not close to 1");
    }
    if (!demo.points.empty() && p.time <= demo.points.back().time) {
      throw FormatError(file.string() + ":" + std::to_string(line_no) +
                        ": timestamps must be strictly increasing");
    }
    demo.points.push_back(std::move(p));
  }

  if (demo.points.size() < 2) {
    throw FormatError(file.string() + ": no demonstrations (need >= 2 points)");
  }
  if (needs_accel) {
    fill_accelerations(demo);
  }
  demo.sample_rate = header_rate > 0.0 ? header_rate : 1.0 / median_dt(demo);

  const double dt = demo.dt();
  for (std::size_t i = 1; i < demo.points.size(); ++i) {
    const double step = demo.points[i].time - demo.points[i - 1].time;
    if (std::abs(step - dt) > 0.01 * dt) {
      throw FormatError(file.string() + ": sample spacing at index " +
                        std::to_string(i) + " deviates more than 1% from 1/" +
                        format_double(demo.sample_rate) + " Hz");
    }
  }
  return demo;
}

std::vector<Demonstration> load_demonstrations(
    const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) {
    throw IoError("no demonstrations: no such path " + path.string());
  }
  std::vector<Demonstration> out;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      out.push_back(load_demonstration(f));
    }
  } else {
    out.push_back(load_demonstration(path));
  }
  if (out.empty()) {
    throw IoError("no demonstrations found under " + path.string());
  }
  return out;
}

void save_demonstration(const Demonstration& demo,
                        const std::filesystem::path& file) {
  if (demo.points.empty()) {
    throw Error("refusing to save an empty demonstration");
  }
  if (demo.points.front().x.size() != 7) {
    throw Error("only pose-shaped demonstrations can be saved");
  }
  std::ofstream out(file);
  if (!out) {
    throw IoError("cannot write demonstration file: " + file.string());
  }
  std::string text;
  text += "# fskill demonstration log\n";
  text += "# id: " + demo.id + "\n";
  text += "# sample_rate: " + format_double(demo.sample_rate) + "\n";
  text += "# columns: t x(7) dx(6) ddx(6) f(6) p(7)\n";
  for (const ObservationPoint& p : demo.points) {
    append_double(text, p.time);
    append_block(text, p.x);
    append_block(text, p.twist);
    append_block(text, p.accel);
    append_block(text, p.wrench);
    append_block(text, p.object_pose);
    text += "\n";
  }
  out << text;
  if (!out) {
    throw IoError("write failed: " + file.string());
  }
}

std::vector<ValidationIssue> validate_demo(const Geometry& geom,
                                           const Demonstration& demo,
                                           const ValidateOptions& opts) {
  std::vector<ValidationIssue> issues;
  if (demo.points.size() < 2) {
    issues.push_back({-1, "fewer than 2 points"});
    return issues;
  }
  const double dt = demo.dt();
  for (std::size_t i = 0; i < demo.points.size(); ++i) {
    const ObservationPoint& p = demo.points[i];
    if (!std::isfinite(p.time) || !finite(p.x) || !finite(p.twist) ||
        !finite(p.accel) || !finite(p.wrench) || !finite(p.object_pose)) {
      issues.push_back({static_cast<int>(i), "non-finite entry"});
      continue;
    }
    if (i > 0) {
      const double step = p.time - demo.points[i - 1].time;
      if (dt > 0.0 && std::abs(step - dt) > opts.dt_jitter * dt) {
        issues.push_back({static_cast<int>(i), "dt jitter beyond 1%"});
      }
      const Vec dw = p.wrench - demo.points[i - 1].wrench;
      if (dw.norm() > opts.wrench_spike) {
        issues.push_back({static_cast<int>(i), "wrench spike"});
      }
    }
    if (i > 0 && i + 1 < demo.points.size()) {
      const ObservationPoint& prev = demo.points[i - 1];
      const ObservationPoint& next = demo.points[i + 1];
      const double span = next.time - prev.time;
      if (span > 0.0) {
        const Vec fd = geom.log(next.x, prev.x) / span;
        const double err = (fd - p.twist).norm();
        if (err > opts.twist_abs_tol + opts.twist_rel_tol * p.twist.norm()) {
          issues.push_back(
              {static_cast<int>(i), "twist inconsistent with pose"});
        }
      }
    }
  }
  return issues;
}

Frame frame_from_point(const Geometry& geom, const Vec& p) {
  Frame f;
  if (geom.ambient_dim() == 7 && geom.tangent_dim() == 6) {
    const PosePoint pose = PosePoint::from_ambient(p);
    f.rotation = pose.orientation;
    f.translation = pose.position;
  } else {
    const int n = std::min<int>(3, static_cast<int>(p.size()));
    f.translation.head(n) = p.head(n);
  }
  return f;
}

Scene scene_from_demo(const Geometry& geom, const Demonstration& demo,
                      const std::vector<std::string>& frame_names) {
  if (demo.points.empty()) {
    throw Error("cannot build a scene from an empty demonstration");
  }
  Scene scene;
  for (const std::string& name : frame_names) {
    if (name == "global") {
      scene.frames.emplace_back(name, Frame::identity());
    } else if (name == "robot") {
      scene.frames.emplace_back(
          name, frame_from_point(geom, demo.points.front().x));
    } else if (name == "object") {
      scene.frames.emplace_back(
          name, frame_from_point(geom, demo.points.front().object_pose));
    } else {
      throw Error("unknown frame name '" + name +
                  "' (expected global, robot, or object)");
    }
  }
  if (scene.frames.empty()) {
    throw Error("scene needs at least one frame");
  }
  return scene;
}

std::vector<Demonstration> project_to_frames(const Geometry& geom,
                                             const Demonstration& demo,
                                             const Scene& scene) {
  std::vector<Demonstration> out;
  out.reserve(scene.frames.size());
  for (const auto& [name, frame] : scene.frames) {
    Demonstration local;
    local.id = demo.id + "@" + name;
    local.sample_rate = demo.sample_rate;
    local.points.reserve(demo.points.size());
    const Mat rot_inv = geom.tangent_rotation(frame).transpose();
    for (const ObservationPoint& p : demo.points) {
      ObservationPoint q;
      q.time = p.time;
      q.x = geom.unapply(frame, p.x);
      q.twist = rot_inv * p.twist;
      q.accel = rot_inv * p.accel;
      q.wrench = rot_inv * p.wrench;
      q.object_pose = geom.unapply(frame, p.object_pose);
      local.points.push_back(std::move(q));
    }
    out.push_back(std::move(local));
  }
  return out;
}

Scene load_scene(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw IoError("cannot open scene file: " + file.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("scene file " + file.string() + ": " + e.what());
  }
  if (!j.contains("frames") || !j["frames"].is_object() ||
      j["frames"].empty()) {
    throw FormatError("scene file " + file.string() +
                      " needs a non-empty 'frames' object");
  }
  Scene scene;
  for (const auto& [name, jf] : j["frames"].items()) {
    try {
      scene.frames.emplace_back(name, frame_from_json(jf));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("scene frame '" + name + "': " + e.what());
    }
  }
  return scene;
}

void save_scene(const Scene& scene, const std::filesystem::path& file) {
  nlohmann::json j;
  for (const auto& [name, frame] : scene.frames) {
    j["frames"][name] = frame_to_json(frame);
  }
  std::ofstream out(file);
  if (!out) {
    throw IoError("cannot write scene file: " + file.string());
  }
  out << j.dump(2) << "\n";
}

}  // namespace fskill
