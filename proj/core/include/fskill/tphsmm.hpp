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
#include <string>
#include <vector>

#include "fskill/demo.hpp"
#include "fskill/gaussian.hpp"
#include "fskill/geometry.hpp"

namespace fskill {

/// Explicit state-duration model, Gaussian over dwell time in samples.
struct DurationModel {
  double mean = 1.0;
  double stddev = 0.5;
};

struct TphsmmConfig {
  int components = 8;
  std::string init_strategy = "time-slice";  // or "kmeans"
  std::string topology = "left-to-right";    // or "ergodic"
  int max_iterations = 100;
  double tolerance = 1e-6;  // relative loglik change
  double covariance_floor = 1e-6;
  double duration_sigma_span = 3.0;  // support cut at mean + span * stddev
  std::uint64_t seed = 0;            // kmeans seeding
};

/// One demo seen from one frame: just the point sequence (the attractor
/// poses the model is trained on).
using PointSeq = std::vector<Vec>;
/// One demo seen from every frame, indexed like the model's frame list.
using LocalViews = std::vector<PointSeq>;

/// Task-parameterized hidden semi-Markov model over attractor poses. The
/// k-th component of every frame describes the same k-th global component;
/// priors, transitions, and durations are shared by all frames.
struct Tphsmm {
  GeometryPtr geometry;
  std::vector<std::string> frame_names;
  Vec priors;                                 // K
  Mat transitions;                            // K x K, zero diagonal
  std::vector<DurationModel> durations;       // K
  std::vector<std::vector<Gaussian>> locals;  // [frame][component]

  int components() const { return static_cast<int>(priors.size()); }
  int frames() const { return static_cast<int>(frame_names.size()); }

  /// Throws on any structural violation: priors off simplex, transition
  /// rows not summing to 1 (or 0 for absorbing rows), nonzero diagonal,
  /// duration stddev below 0.5 samples, covariance below the floor, or
  /// component counts differing across frames.
  void check_invariants(double covariance_floor = 0.0) const;
};

struct EmResult {
  Tphsmm model;
  /// Smoothed per-sample posteriors from the final E-step, one T x K
  /// matrix per demo; rows sum to 1.
  std::vector<Mat> responsibilities;
  /// Data log-likelihood per iteration, non-decreasing.
  std::vector<double> loglik_trace;
  std::vector<std::string> warnings;
};

/// Builds the starting model. "time-slice" gives component k the samples
/// in [T(k-1)/K, Tk/K) of each demo; "kmeans" clusters stacked per-frame
/// tangent coordinates (seeded, deterministic) and orders components by
/// mean sample time.
Tphsmm init_model(GeometryPtr geometry,
                  const std::vector<std::string>& frame_names,
                  const std::vector<LocalViews>& demos,
                  const TphsmmConfig& config);

/// Explicit-duration EM. Per-frame Gaussians share one set of smoothed
/// responsibilities; manifold means are re-estimated by iterated
/// tangent-space averaging. Empty components (mass < 1e-8) are kept with
/// their previous parameters and reported in `warnings`, never dropped.
EmResult em_fit(const Tphsmm& model, const std::vector<LocalViews>& demos,
                const TphsmmConfig& config);

/// Maps each component's per-frame Gaussians through the scene's frames
/// and blends them with gaussian_product.
std::vector<Gaussian> global_components(const Tphsmm& model,
                                        const Scene& scene);

/// log N(d | mean_k, stddev_k); d need not be an integer.
double duration_logprob(const Tphsmm& model, int k, double d);
double duration_logprob(const DurationModel& dm, double d);

/// Truncated duration support: ceil(mean + span * stddev), clamped to
/// [1, horizon].
int duration_support(const DurationModel& dm, double span, int horizon);

}  // namespace fskill
