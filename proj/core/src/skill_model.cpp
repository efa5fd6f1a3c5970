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

#include "fskill/skill_model.hpp"

#include <chrono>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fskill/attractor.hpp"

namespace fskill {

namespace {

using nlohmann::json;

json vec_to_json(const Vec& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) {
    out.push_back(v[i]);
  }
  return out;
}

json mat_to_json(const Mat& m) {
  json out = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) {
      row.push_back(m(r, c));
    }
    out.push_back(row);
  }
  return out;
}

Vec vec_from_json(const json& j) {
  if (!j.is_array()) {
    throw FormatError("expected a number array");
  }
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  return v;
}

Mat mat_from_json(const json& j) {
  if (!j.is_array()) {
    throw FormatError("expected a row array");
  }
  if (j.empty()) {
    return Mat();
  }
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) {
      throw FormatError("ragged matrix rows");
    }
    for (int c = 0; c < cols; ++c) {
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

const json& need(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw FormatError(std::string("model archive: missing key '") + key + "'");
  }
  return j[key];
}

/// Per-sample gain schedule built from the optimized stiffness, each sample
/// taking the gain of its most responsible component.
std::vector<ImpedanceGains> gain_schedule(const StiffnessModel& stiffness,
                                          const Mat& responsibilities,
                                          const Mat& damping) {
  std::vector<ImpedanceGains> out;
  out.reserve(responsibilities.rows());
  for (int t = 0; t < responsibilities.rows(); ++t) {
    int best = 0;
    responsibilities.row(t).maxCoeff(&best);
    out.push_back(ImpedanceGains{stiffness.gains[best], damping});
  }
  return out;
}

}  // namespace

void SkillModel::check_invariants() const {
  if (!attractor.geometry) {
    throw Error("skill model: missing geometry");
  }
  attractor.check_invariants();
  stiffness.check_invariants();
  const int k = attractor.components();
  const int dim = attractor.geometry->tangent_dim();
  if (stiffness.components() != k) {
    throw Error("skill model: stiffness has " +
                std::to_string(stiffness.components()) + " components, model " +
                std::to_string(k));
  }
  if (damping.rows() != dim || damping.cols() != dim) {
    throw Error("skill model: damping must be " + std::to_string(dim) + " x " +
                std::to_string(dim));
  }
  if (!damping.isApprox(damping.transpose(), 1e-10)) {
    throw Error("skill model: damping must be symmetric");
  }
  if (static_cast<int>(wrench_means.size()) != k) {
    throw Error("skill model: wrench means must cover every component");
  }
  for (const Vec& w : wrench_means) {
    if (w.size() != dim || !w.allFinite()) {
      throw Error("skill model: bad wrench mean");
    }
  }
}

SkillModel train_skill(GeometryPtr geometry,
                       const std::vector<Demonstration>& demos,
                       const TrainOptions& options, const std::string& name) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!geometry) {
    throw Error("train_skill: null geometry");
  }
  if (demos.empty()) {
    throw Error("train_skill: no demonstrations");
  }
  if (options.outer_iterations < 1) {
    throw Error("train_skill: outer_iterations must be >= 1");
  }
  const int dim = geometry->tangent_dim();
  const Geometry& geom = *geometry;

  std::vector<Scene> scenes;
  scenes.reserve(demos.size());
  for (const Demonstration& demo : demos) {
    if (demo.points.empty()) {
      throw Error("train_skill: demo '" + demo.id + "' is empty");
    }
    scenes.push_back(scene_from_demo(geom, demo, options.frame_names));
  }

  const ImpedanceGains initial = ImpedanceGains::initial(
      dim, options.initial_stiffness, options.initial_damping);
  check_gains(initial, dim);

  SkillModel skill;
  skill.name = name;
  skill.damping = initial.damping;

  EmResult fit;
  for (int outer = 0; outer < options.outer_iterations; ++outer) {
    std::vector<LocalViews> views;
    views.reserve(demos.size());
    for (std::size_t m = 0; m < demos.size(); ++m) {
      AttractorTrajectory traj;
      if (outer == 0) {
        traj = attractor_trajectory(geom, demos[m], initial);
      } else {
        const auto schedule = gain_schedule(
            skill.stiffness, fit.responsibilities[m], skill.damping);
        traj = attractor_trajectory(geom, demos[m], schedule);
      }
      LocalViews view(scenes[m].frames.size());
      for (std::size_t f = 0; f < scenes[m].frames.size(); ++f) {
        const Frame& frame = scenes[m].frames[f].second;
        view[f].reserve(traj.points.size());
        for (const Vec& y : traj.points) {
          view[f].push_back(geom.unapply(frame, y));
        }
      }
      views.push_back(std::move(view));
    }

    const Tphsmm start =
        init_model(geometry, options.frame_names, views, options.model);
    fit = em_fit(start, views, options.model);
    skill.attractor = fit.model;
    skill.report.loglik_trace.insert(skill.report.loglik_trace.end(),
                                     fit.loglik_trace.begin(),
                                     fit.loglik_trace.end());
    skill.report.warnings.insert(skill.report.warnings.end(),
                                 fit.warnings.begin(), fit.warnings.end());

    StiffnessOptions sopts = options.stiffness;
    if (sopts.initial_stiffness.size() == 0) {
      sopts.initial_stiffness = initial.stiffness;
    }
    skill.stiffness = optimize_stiffness(skill.attractor, demos, scenes,
                                         fit.responsibilities, skill.damping,
                                         sopts);
    skill.report.warnings.insert(skill.report.warnings.end(),
                                 skill.stiffness.warnings.begin(),
                                 skill.stiffness.warnings.end());
  }

  const int k = skill.attractor.components();
  skill.wrench_means.assign(k, Vec::Zero(dim));
  Vec mass = Vec::Zero(k);
  for (std::size_t m = 0; m < demos.size(); ++m) {
    const Mat& resp = fit.responsibilities[m];
    for (int t = 0; t < resp.rows(); ++t) {
      const Vec& wrench = demos[m].points[t].wrench;
      for (int c = 0; c < k; ++c) {
        skill.wrench_means[c] += resp(t, c) * wrench;
        mass[c] += resp(t, c);
      }
    }
  }
  for (int c = 0; c < k; ++c) {
    if (mass[c] > 1e-8) {
      skill.wrench_means[c] /= mass[c];
    } else {
      skill.wrench_means[c].setZero();
    }
  }

  skill.report.demo_count = static_cast<int>(demos.size());
  skill.report.sample_count = 0;
  for (const Demonstration& demo : demos) {
    skill.report.sample_count += static_cast<int>(demo.points.size());
  }
  skill.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  skill.check_invariants();
  return skill;
}

std::string skill_to_json(const SkillModel& model) {
  const Tphsmm& a = model.attractor;
  json j;
  j["format"] = "fskill-model";
  j["version"] = 1;
  j["name"] = model.name;
  j["geometry"] = a.geometry ? a.geometry->name() : "";
  j["frames"] = a.frame_names;
  j["priors"] = vec_to_json(a.priors);
  j["transitions"] = mat_to_json(a.transitions);
  json durations = json::array();
  for (const DurationModel& d : a.durations) {
    durations.push_back({{"mean", d.mean}, {"stddev", d.stddev}});
  }
  j["durations"] = durations;
  json locals = json::array();
  for (const auto& frame_locals : a.locals) {
    json per_frame = json::array();
    for (const Gaussian& g : frame_locals) {
      per_frame.push_back(
          {{"mean", vec_to_json(g.mean)}, {"cov", mat_to_json(g.cov)}});
    }
    locals.push_back(per_frame);
  }
  j["locals"] = locals;
  json gains = json::array();
  for (const Mat& g : model.stiffness.gains) {
    gains.push_back(mat_to_json(g));
  }
  j["stiffness"] = {{"block_diagonal", model.stiffness.block_diagonal},
                    {"gains", gains},
                    {"warnings", model.stiffness.warnings}};
  j["damping"] = mat_to_json(model.damping);
  json wrench = json::array();
  for (const Vec& w : model.wrench_means) {
    wrench.push_back(vec_to_json(w));
  }
  j["wrench_means"] = wrench;
  j["report"] = {{"demo_count", model.report.demo_count},
                 {"loglik_trace", model.report.loglik_trace},
                 {"sample_count", model.report.sample_count},
                 {"warnings", model.report.warnings}};
  return j.dump(2) + "\n";
}

SkillModel skill_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model archive: ") + e.what());
  }
  try {
    if (need(j, "format").get<std::string>() != "fskill-model") {
      throw FormatError("model archive: unknown format tag");
    }
    if (need(j, "version").get<int>() != 1) {
      throw FormatError("model archive: unsupported version " +
                        need(j, "version").dump());
    }
    SkillModel model;
    model.name = need(j, "name").get<std::string>();
    Tphsmm& a = model.attractor;
    a.geometry = Geometry::from_name(need(j, "geometry").get<std::string>());
    a.frame_names = need(j, "frames").get<std::vector<std::string>>();
    a.priors = vec_from_json(need(j, "priors"));
    a.transitions = mat_from_json(need(j, "transitions"));
    for (const json& jd : need(j, "durations")) {
      a.durations.push_back(DurationModel{jd.at("mean").get<double>(),
                                          jd.at("stddev").get<double>()});
    }
    for (const json& jf : need(j, "locals")) {
      std::vector<Gaussian> frame_locals;
      for (const json& jg : jf) {
        frame_locals.push_back(Gaussian{vec_from_json(jg.at("mean")),
                                        mat_from_json(jg.at("cov"))});
      }
      a.locals.push_back(std::move(frame_locals));
    }
    const json& js = need(j, "stiffness");
    model.stiffness.block_diagonal = js.at("block_diagonal").get<bool>();
    for (const json& jg : js.at("gains")) {
      model.stiffness.gains.push_back(mat_from_json(jg));
    }
    model.stiffness.warnings =
        js.at("warnings").get<std::vector<std::string>>();
    model.damping = mat_from_json(need(j, "damping"));
    for (const json& jw : need(j, "wrench_means")) {
      model.wrench_means.push_back(vec_from_json(jw));
    }
    const json& jr = need(j, "report");
    model.report.demo_count = jr.at("demo_count").get<int>();
    model.report.sample_count = jr.at("sample_count").get<int>();
    model.report.loglik_trace =
        jr.at("loglik_trace").get<std::vector<double>>();
    model.report.warnings = jr.at("warnings").get<std::vector<std::string>>();
    model.check_invariants();
    return model;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model archive: ") + e.what());
  }
}

void save_skill(const SkillModel& model, const std::filesystem::path& file) {
  const std::string text = skill_to_json(model);
  std::ofstream out(file, std::ios::binary);
  if (!out) {
    throw IoError("cannot write model archive: " + file.string());
  }
  out << text;
}

SkillModel load_skill(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw IoError("cannot open model archive: " + file.string());
  }
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  try {
    return skill_from_json(text);
  } catch (const FormatError& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
}

}  // namespace fskill
