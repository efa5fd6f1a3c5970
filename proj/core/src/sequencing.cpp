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

#include "fskill/sequencing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace fskill {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

Mat regularized_precision(const Mat& cov, double regularization) {
  const int d = static_cast<int>(cov.rows());
  double reg = 0.0;
  for (int attempt = 0; attempt < 40; ++attempt) {
    Eigen::LLT<Mat> llt(cov + reg * Mat::Identity(d, d));
    if (llt.info() == Eigen::Success) {
      Mat p = llt.solve(Mat::Identity(d, d));
      if (p.allFinite()) {
        return p;
      }
    }
    reg = reg == 0.0 ? std::max(regularization, 1e-12) : reg * 10.0;
  }
  throw NumericError("covariance not invertible even after regularization");
}

}  // namespace

ComponentSequence ComponentSequence::from_flat(std::vector<int> flat) {
  ComponentSequence out;
  out.flat = std::move(flat);
  for (std::size_t i = 0; i < out.flat.size();) {
    std::size_t j = i;
    while (j < out.flat.size() && out.flat[j] == out.flat[i]) {
      ++j;
    }
    out.segments.push_back({out.flat[i], static_cast<int>(j - i)});
    i = j;
  }
  return out;
}

ComponentSequence ComponentSequence::from_segments(std::vector<Segment> segments) {
  ComponentSequence out;
  out.segments = std::move(segments);
  for (const Segment& seg : out.segments) {
    if (seg.duration < 1) {
      throw Error("segment duration must be at least 1");
    }
    out.flat.insert(out.flat.end(), seg.duration, seg.component);
  }
  return out;
}

void ComponentSequence::check_invariants(int components) const {
  std::size_t total = 0;
  for (const Segment& seg : segments) {
    if (seg.duration < 1) {
      throw Error("segment duration must be at least 1");
    }
    if (seg.component < 0 || seg.component > components) {
      throw Error("component id " + std::to_string(seg.component) +
                  " out of range");
    }
    for (int i = 0; i < seg.duration; ++i, ++total) {
      if (total >= flat.size() || flat[total] != seg.component) {
        throw Error("flat and run-length forms disagree");
      }
    }
  }
  if (total != flat.size()) {
    throw Error("flat and run-length forms disagree");
  }
}

std::vector<int> resolve_transition_ids(std::vector<int> ids, int components) {
  int next_real = -1;
  for (int i = static_cast<int>(ids.size()) - 1; i >= 0; --i) {
    if (ids[i] >= 0 && ids[i] < components) {
      next_real = ids[i];
    } else if (ids[i] == components) {
      if (next_real >= 0) {
        ids[i] = next_real;
      }
    } else {
      throw Error("component id " + std::to_string(ids[i]) + " out of range");
    }
  }
  if (next_real < 0 && !ids.empty()) {
    throw Error("executed sequence contains no real component");
  }
  // A trailing transition run has no follower; reuse the last real id.
  int prev_real = -1;
  for (int& id : ids) {
    if (id < components) {
      prev_real = id;
    } else if (prev_real >= 0) {
      id = prev_real;
    }
  }
  return ids;
}

ComponentSequence most_likely_sequence(const Geometry& geom,
                                       const std::vector<Gaussian>& globals,
                                       const Vec& priors,
                                       const Mat& transitions,
                                       const std::vector<DurationModel>& durations,
                                       const DecodeRequest& request) {
  const int t_len = request.horizon;
  const int k_count = static_cast<int>(globals.size());
  if (t_len < 1) {
    throw Error("decode horizon must be at least 1");
  }
  if (k_count < 1 || priors.size() != k_count ||
      transitions.rows() != k_count || transitions.cols() != k_count ||
      static_cast<int>(durations.size()) != k_count) {
    throw Error("model pieces disagree on component count");
  }
  const int past = static_cast<int>(request.executed.size());
  if (static_cast<int>(request.past_attractors.size()) != past) {
    throw Error("past attractors and executed ids must align");
  }
  if (past > t_len) {
    throw Error("past longer than the decode horizon");
  }
  const std::vector<int> executed =
      resolve_transition_ids(request.executed, k_count);

  std::vector<GaussianEvaluator> evals;
  evals.reserve(k_count);
  for (const Gaussian& g : globals) {
    evals.emplace_back(geom, g);
  }

  // Per-step emission terms. Past virtual attractors are scored under the
  // executed component, which is also the only feasible label there, so the
  // whole prefix contributes a path-independent constant.
  Mat emis = Mat::Zero(t_len + 1, k_count);
  Vec past_const = Vec::Zero(t_len + 1);
  if (request.start_observation) {
    const Vec obs = geom.project(*request.start_observation);
    for (int k = 0; k < k_count; ++k) {
      emis(1, k) += evals[k].logpdf(obs);
    }
  }
  if (request.end_observation) {
    const Vec obs = geom.project(*request.end_observation);
    for (int k = 0; k < k_count; ++k) {
      emis(t_len, k) += evals[k].logpdf(obs);
    }
  }
  for (int l = 1; l <= past; ++l) {
    past_const(l) =
        evals[executed[l - 1]].logpdf(geom.project(request.past_attractors[l - 1]));
  }

  // Prefix sums for O(1) segment emission and feasibility lookups.
  Mat cum_emis = Mat::Zero(t_len + 1, k_count);
  Mat cum_feas = Mat::Zero(t_len + 1, k_count);
  for (int l = 1; l <= t_len; ++l) {
    for (int k = 0; k < k_count; ++k) {
      const bool ok = l > past || executed[l - 1] == k;
      cum_feas(l, k) = cum_feas(l - 1, k) + (ok ? 1.0 : 0.0);
      cum_emis(l, k) = cum_emis(l - 1, k) + emis(l, k) + past_const(l);
    }
  }

  Vec log_pi(k_count);
  Mat log_a(k_count, k_count);
  for (int k = 0; k < k_count; ++k) {
    log_pi(k) = safe_log(priors(k));
    for (int h = 0; h < k_count; ++h) {
      log_a(h, k) = safe_log(transitions(h, k));
    }
  }
  std::vector<int> support(k_count);
  for (int k = 0; k < k_count; ++k) {
    support[k] =
        duration_support(durations[k], request.duration_sigma_span, t_len);
  }

  Mat delta(t_len + 1, k_count);
  Eigen::MatrixXi back_d(t_len + 1, k_count);
  Eigen::MatrixXi back_h(t_len + 1, k_count);

  auto run = [&](bool widen_last) {
    delta.setConstant(kNegInf);
    back_d.setConstant(0);
    back_h.setConstant(-1);
    for (int t = 1; t <= t_len; ++t) {
      for (int k = 0; k < k_count; ++k) {
        // Truncation applies to the part of a segment that lies outside the
        // executed prefix; the past cannot be made infeasible after the
        // fact. With t - past <= support, every d is overlap or short.
        int cap = t - past <= support[k] ? t : support[k];
        if (widen_last && t == t_len) {
          cap = t;
        }
        cap = std::min(cap, t);
        for (int d = 1; d <= cap; ++d) {
          const int a = t - d + 1;
          if (cum_feas(t, k) - cum_feas(a - 1, k) != static_cast<double>(d)) {
            continue;
          }
          const double seg_emis = cum_emis(t, k) - cum_emis(a - 1, k);
          const double log_dur = duration_logprob(durations[k], d);
          double cand;
          int from = -1;
          if (a == 1) {
            cand = log_pi(k) + log_dur + seg_emis;
          } else {
            double best_prev = kNegInf;
            for (int h = 0; h < k_count; ++h) {
              if (h == k) {
                continue;
              }
              const double v = delta(a - 1, h) + log_a(h, k);
              if (v > best_prev) {
                best_prev = v;
                from = h;
              }
            }
            if (from < 0 || best_prev == kNegInf) {
              continue;
            }
            cand = best_prev + log_dur + seg_emis;
          }
          if (cand > delta(t, k)) {
            delta(t, k) = cand;
            back_d(t, k) = d;
            back_h(t, k) = from;
          }
        }
      }
    }
    int best_k = -1;
    double best = kNegInf;
    for (int k = 0; k < k_count; ++k) {
      if (delta(t_len, k) > best) {
        best = delta(t_len, k);
        best_k = k;
      }
    }
    return std::make_pair(best_k, best);
  };

  auto [best_k, best] = run(false);
  std::vector<std::string> warnings;
  if (best_k < 0) {
    warnings.push_back(
        "horizon unreachable under truncated durations; widened the final "
        "segment");
    std::tie(best_k, best) = run(true);
    if (best_k < 0) {
      throw Error("no feasible component sequence");
    }
  }

  std::vector<Segment> segments;
  int t = t_len;
  int k = best_k;
  while (t > 0) {
    const int d = back_d(t, k);
    segments.push_back({k, d});
    const int h = back_h(t, k);
    t -= d;
    k = h;
  }
  std::reverse(segments.begin(), segments.end());
  ComponentSequence out = ComponentSequence::from_segments(std::move(segments));
  out.log_likelihood = best;
  out.warnings = std::move(warnings);
  return out;
}

TransitionPlan prepend_transition(const Geometry& geom,
                                  const ComponentSequence& sequence,
                                  const Vec& x_t, const Vec& y_t,
                                  const Mat& current_stiffness,
                                  const Mat& first_component_cov,
                                  int components,
                                  const TransitionOptions& options) {
  if (sequence.flat.empty()) {
    throw Error("cannot prepend to an empty sequence");
  }
  if (options.d_min < 1 || options.v_ref <= 0.0 || options.dt <= 0.0) {
    throw Error("invalid transition options");
  }
  const double dist = geom.log(geom.project(y_t), geom.project(x_t)).norm();
  const long long raw =
      std::llround(dist / (options.v_ref * options.dt));
  int d_max = options.d_max;
  if (d_max <= 0) {
    d_max = std::max(options.d_min, sequence.length() / 4);
  }
  const int d_y = static_cast<int>(
      std::clamp<long long>(raw, options.d_min, d_max));

  TransitionPlan plan;
  plan.transition_id = components;
  plan.duration = d_y;
  std::vector<Segment> segments;
  segments.push_back({components, d_y});
  segments.insert(segments.end(), sequence.segments.begin(),
                  sequence.segments.end());
  plan.sequence = ComponentSequence::from_segments(std::move(segments));
  plan.sequence.log_likelihood = sequence.log_likelihood;
  plan.sequence.warnings = sequence.warnings;
  plan.global.mean = geom.project(y_t);
  plan.global.cov = first_component_cov;
  plan.stiffness = current_stiffness;
  return plan;
}

void ReferenceTrajectory::check_invariants(const Geometry& geom) const {
  const std::size_t n = points.size();
  if (times.size() != n || velocities.size() != n ||
      accelerations.size() != n || components.size() != n ||
      stiffness_ids.size() != n) {
    throw Error("reference trajectory series disagree in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!points[i].allFinite() || !velocities[i].allFinite() ||
        !accelerations[i].allFinite()) {
      throw NumericError("reference trajectory contains non-finite values");
    }
    if (points[i].size() != geom.ambient_dim() ||
        velocities[i].size() != geom.tangent_dim()) {
      throw Error("reference trajectory dimension mismatch");
    }
  }
}

namespace {

struct LqtPass {
  PointSeq points;
  std::vector<Vec> velocities;
  std::vector<Vec> accelerations;
};

LqtPass lqt_solve(const Geometry& geom, const PointSeq& bases,
                  const std::vector<Vec>& targets, const std::vector<Mat>& q,
                  const Vec& y0, const Vec& v0, double dt, double r) {
  const int t_len = static_cast<int>(bases.size());
  const int d = geom.tangent_dim();
  const int n = 2 * d;

  Mat a = Mat::Identity(n, n);
  a.topRightCorner(d, d) = dt * Mat::Identity(d, d);
  Mat b = Mat::Zero(n, d);
  b.topRows(d) = 0.5 * dt * dt * Mat::Identity(d, d);
  b.bottomRows(d) = dt * Mat::Identity(d, d);
  const Mat r_mat = r * Mat::Identity(d, d);

  // Base-to-base dynamics: integrate in the tangent space at bases[t], then
  // re-express at bases[t+1] by parallel transport with a log offset.
  std::vector<Mat> a_t(std::max(0, t_len - 1));
  std::vector<Mat> b_t(std::max(0, t_len - 1));
  std::vector<Vec> c_t(std::max(0, t_len - 1));
  for (int t = 0; t + 1 < t_len; ++t) {
    const Mat gamma = geom.transport_matrix(bases[t], bases[t + 1]);
    Mat shift = Mat::Zero(n, n);
    shift.topLeftCorner(d, d) = gamma;
    shift.bottomRightCorner(d, d) = gamma;
    a_t[t] = shift * a;
    b_t[t] = shift * b;
    c_t[t] = Vec::Zero(n);
    c_t[t].head(d) = geom.log(bases[t], bases[t + 1]);
  }

  std::vector<Mat> gain(std::max(0, t_len - 1));
  std::vector<Vec> feed(std::max(0, t_len - 1));
  Mat p = Mat::Zero(n, n);
  p.topLeftCorner(d, d) = q[t_len - 1];
  Vec s = Vec::Zero(n);
  s.head(d) = q[t_len - 1] * targets[t_len - 1];
  for (int t = t_len - 2; t >= 0; --t) {
    const Mat quu = r_mat + b_t[t].transpose() * p * b_t[t];
    Eigen::LLT<Mat> llt(quu);
    if (llt.info() != Eigen::Success) {
      throw NumericError("LQT control Hessian not positive definite");
    }
    gain[t] = llt.solve(b_t[t].transpose() * p * a_t[t]);
    feed[t] = llt.solve(b_t[t].transpose() * (s - p * c_t[t]));
    const Mat a_cl = a_t[t] - b_t[t] * gain[t];
    const Vec b_cl = b_t[t] * feed[t] + c_t[t];
    Vec s_new = Vec::Zero(n);
    s_new.head(d) = q[t] * targets[t];
    s_new += a_cl.transpose() * (s - p * b_cl) +
             gain[t].transpose() * r_mat * feed[t];
    Mat p_new = a_cl.transpose() * p * a_cl +
                gain[t].transpose() * r_mat * gain[t];
    p_new.topLeftCorner(d, d) += q[t];
    p = 0.5 * (p_new + p_new.transpose());
    s = s_new;
  }

  LqtPass out;
  Vec z = Vec::Zero(n);
  z.head(d) = geom.log(y0, bases[0]);
  z.tail(d) = geom.transport(v0, y0, bases[0]);
  for (int t = 0; t < t_len; ++t) {
    const Vec y = geom.exp(z.head(d), bases[t]);
    out.points.push_back(y);
    out.velocities.push_back(geom.transport(z.tail(d), bases[t], y));
    if (t + 1 < t_len) {
      const Vec u = feed[t] - gain[t] * z;
      out.accelerations.push_back(geom.transport(u, bases[t], y));
      z = a_t[t] * z + b_t[t] * u + c_t[t];
    } else {
      out.accelerations.push_back(Vec::Zero(d));
    }
  }
  return out;
}

}  // namespace

ReferenceTrajectory lqt_reference(const Geometry& geom,
                                  const std::vector<int>& ids,
                                  const std::vector<Gaussian>& globals,
                                  const LqtOptions& options) {
  const int t_len = static_cast<int>(ids.size());
  if (t_len < 1) {
    throw Error("cannot build a reference for an empty horizon");
  }
  if (options.dt <= 0.0 || options.control_weight <= 0.0) {
    throw Error("invalid LQT options");
  }
  const int d = geom.tangent_dim();
  for (int id : ids) {
    if (id < 0 || id >= static_cast<int>(globals.size())) {
      throw Error("step references unknown component " + std::to_string(id));
    }
  }

  PointSeq bases(t_len);
  std::vector<Vec> targets(t_len, Vec::Zero(d));
  std::vector<Mat> precisions(t_len);
  for (int t = 0; t < t_len; ++t) {
    bases[t] = geom.project(globals[ids[t]].mean);
    precisions[t] =
        regularized_precision(globals[ids[t]].cov, options.regularization);
  }

  Vec y0 = options.start_position.size() > 0
               ? geom.project(options.start_position)
               : bases[0];
  Vec v0 = options.start_velocity.size() > 0 ? options.start_velocity
                                             : Vec::Zero(d);
  if (v0.size() != d) {
    throw Error("start velocity has wrong dimension");
  }

  LqtPass pass =
      lqt_solve(geom, bases, targets, precisions, y0, v0, options.dt,
                options.control_weight);

  const bool curved = geom.name().rfind("euclidean", 0) != 0;
  if (curved && options.rebase && t_len > 1) {
    // Second pass in the tangent spaces of the first solution, which keeps
    // the linearization error quadratic in the step size.
    PointSeq rebased = pass.points;
    std::vector<Vec> new_targets(t_len);
    std::vector<Mat> new_precisions(t_len);
    for (int t = 0; t < t_len; ++t) {
      new_targets[t] = geom.log(bases[t], rebased[t]);
      const Mat gamma = geom.transport_matrix(bases[t], rebased[t]);
      new_precisions[t] = gamma * precisions[t] * gamma.transpose();
    }
    pass = lqt_solve(geom, rebased, new_targets, new_precisions, y0, v0,
                     options.dt, options.control_weight);
  }

  ReferenceTrajectory out;
  for (int t = 0; t < t_len; ++t) {
    out.times.push_back(options.start_time + options.dt * t);
  }
  out.points = std::move(pass.points);
  out.velocities = std::move(pass.velocities);
  out.accelerations = std::move(pass.accelerations);
  out.components = ids;
  out.stiffness_ids = ids;
  out.check_invariants(geom);
  return out;
}

}  // namespace fskill
