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

#ifndef FSKILL_SEQUENCING_HPP_
#define FSKILL_SEQUENCING_HPP_

#include <optional>
#include <string>
#include <vector>

#include "fskill/gaussian.hpp"
#include "fskill/tphsmm.hpp"

namespace fskill {

struct Segment {
  int component = 0;
  int duration = 0;
};

/// Per-step component labels in both flat and run-length form. The
/// distinguished id `components` (one past the last real component) marks
/// the artificial transition component.
struct ComponentSequence {
  std::vector<int> flat;
  std::vector<Segment> segments;
  double log_likelihood = 0.0;
  std::vector<std::string> warnings;

  static ComponentSequence from_flat(std::vector<int> flat);
  static ComponentSequence from_segments(std::vector<Segment> segments);
  int length() const { return static_cast<int>(flat.size()); }
  void check_invariants(int components) const;
};

/// Rewrites transition-component labels (id == components) to the first real
/// component that follows them, falling back to the preceding one at the
/// tail. Used when executed prefixes feed back into decoding.
std::vector<int> resolve_transition_ids(std::vector<int> ids, int components);

struct DecodeRequest {
  int horizon = 0;
  std::optional<Vec> start_observation;
  std::optional<Vec> end_observation;
  /// Online mode: virtual attractors already realized, one per past step,
  /// and the component ids that produced them. The decode keeps these
  /// labels fixed and scores them as constants.
  PointSeq past_attractors;
  std::vector<int> executed;
  double duration_sigma_span = 3.0;
};

/// Duration-explicit Viterbi over the truncated duration support. Start and
/// end observations enter at the first and last step; every unobserved step
/// contributes a unit factor.
ComponentSequence most_likely_sequence(const Geometry& geom,
                                       const std::vector<Gaussian>& globals,
                                       const Vec& priors,
                                       const Mat& transitions,
                                       const std::vector<DurationModel>& durations,
                                       const DecodeRequest& request);

struct TransitionOptions {
  double v_ref = 0.1;  // m/s equivalent along the connecting geodesic
  double dt = 0.01;
  int d_min = 2;
  int d_max = 0;  // 0: length of the updated sequence / 4
};

struct TransitionPlan {
  ComponentSequence sequence;  // transition id prepended d_y times
  Gaussian global;             // artificial component at the held attractor
  Mat stiffness;               // gains frozen at the current command
  int transition_id = 0;
  int duration = 0;
};

/// Prepends the artificial transition component: duration proportional to
/// the distance between the current pose and the held attractor, mean at
/// the attractor, covariance copied from the first segment.
TransitionPlan prepend_transition(const Geometry& geom,
                                  const ComponentSequence& sequence,
                                  const Vec& x_t, const Vec& y_t,
                                  const Mat& current_stiffness,
                                  const Mat& first_component_cov,
                                  int components,
                                  const TransitionOptions& options = {});

struct ReferenceTrajectory {
  std::vector<double> times;
  PointSeq points;                  // Y*
  std::vector<Vec> velocities;      // tangent, at each point
  std::vector<Vec> accelerations;   // tangent, control of the integrator
  std::vector<int> components;      // id per step
  std::vector<int> stiffness_ids;   // id per step, transition id allowed

  int length() const { return static_cast<int>(points.size()); }
  void check_invariants(const Geometry& geom) const;
};

struct LqtOptions {
  double dt = 0.01;
  double control_weight = 1e-4;
  double start_time = 0.0;
  double regularization = 1e-9;
  /// Empty: start at the first step's component mean, at rest.
  Vec start_position;
  Vec start_velocity;
  /// One extra solve around the first solution on curved geometry.
  bool rebase = true;
};

/// Tracks the per-step component means with a discrete double integrator:
/// position cost weighted by the component precision, control cost r*I,
/// solved by an affine backward Riccati recursion in the tangent space of a
/// working reference.
ReferenceTrajectory lqt_reference(const Geometry& geom,
                                  const std::vector<int>& ids,
                                  const std::vector<Gaussian>& globals,
                                  const LqtOptions& options = {});

}  // namespace fskill

#endif  // FSKILL_SEQUENCING_HPP_
