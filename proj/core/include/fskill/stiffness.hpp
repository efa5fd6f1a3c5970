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

#ifndef FSKILL_STIFFNESS_HPP_
#define FSKILL_STIFFNESS_HPP_

#include <string>
#include <vector>

#include "fskill/demo.hpp"
#include "fskill/tphsmm.hpp"

namespace fskill {

/// Projects a matrix onto the PSD cone: symmetrize, eigendecompose, clamp
/// negative eigenvalues to zero. Idempotent.
Mat psd_project(const Mat& m);

struct StiffnessOptions {
  /// Restrict each gain to translational (+) rotational 3x3 blocks when the
  /// tangent dimension is 6. Full matrices otherwise.
  bool block_diagonal = true;
  /// Minimize sum_m ||eps_m||^2 instead of ||sum_m eps_m||^2. The default
  /// keeps the norm outside the demo sum, cancellation and all.
  bool sum_of_squared_residuals = false;
  double tolerance = 1e-10;
  int max_iterations = 20000;
  /// Eigenvalue clamp applied to the returned stiffness.
  double lambda_min = 1.0;
  double lambda_max = 5000.0;
  /// Solver start and degenerate-problem fallback. Empty means 400*I.
  Mat initial_stiffness;
};

struct StiffnessModel {
  std::vector<Mat> gains;  // K_k, one per component
  bool block_diagonal = true;
  std::vector<std::vector<double>> objective_traces;
  std::vector<std::string> warnings;

  int components() const { return static_cast<int>(gains.size()); }
  void check_invariants() const;
};

/// Accumulated attractor residual of one demo for component k, affine in the
/// compliance S = K^{-1}:
///   eps_m = sum_t p_{t,k} * (log_{x_t}(mu_k) - S * (K_nu * dx_t + ddx_t - f_t))
/// with mu_k the component mean in the demo's own global frame.
Vec component_residual(const Geometry& geom, const Demonstration& demo,
                       const Mat& responsibilities, int k,
                       const Vec& global_mean, const Mat& damping,
                       const Mat& compliance);

/// Fits one PSD stiffness matrix per component by accelerated projected
/// gradient on the compliance, then inverts with eigenvalues clamped to
/// [lambda_min, lambda_max]. `responsibilities` holds one T x K matrix per
/// demo; `scenes` supply the task frames each demo was recorded in.
StiffnessModel optimize_stiffness(const Tphsmm& model,
                                  const std::vector<Demonstration>& demos,
                                  const std::vector<Scene>& scenes,
                                  const std::vector<Mat>& responsibilities,
                                  const Mat& damping,
                                  const StiffnessOptions& options = {});

}  // namespace fskill

#endif  // FSKILL_STIFFNESS_HPP_
