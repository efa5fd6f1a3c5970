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

#include <span>
#include <vector>

#include "fskill/geometry.hpp"

namespace fskill {

/// Gaussian on a manifold: mean is an ambient point, covariance lives in
/// the tangent space at the mean.
struct Gaussian {
  Vec mean;
  Mat cov;
};

struct GaussianProductOptions {
  /// Fixed point tolerance on the tangent update norm.
  double tolerance = 1e-10;
  int max_iterations = 100;
  /// Eigenvalue floor applied when a covariance fails to factor.
  double regularization = 1e-6;
};

/// Throws if the covariance is not square/symmetric for the geometry or has
/// an eigenvalue below `min_eigenvalue`.
void check_gaussian(const Geometry& geom, const Gaussian& g,
                    double min_eigenvalue = 0.0, double symmetry_tol = 1e-9);

/// Maps a Gaussian expressed in a local frame to the global frame: the mean
/// by the frame action, the covariance by congruence with the tangent
/// rotation.
Gaussian frame_transform(const Geometry& geom, const Frame& f,
                         const Gaussian& g);

/// Log density of x under g using the tangent residual log_mean(x).
double gaussian_logpdf(const Geometry& geom, const Gaussian& g, const Vec& x);

/// Precomputed Cholesky for repeated density evaluations of one Gaussian.
class GaussianEvaluator {
 public:
  GaussianEvaluator(const Geometry& geom, const Gaussian& g,
                    double regularization = 1e-6);

  double logpdf(const Vec& x) const;
  const Gaussian& gaussian() const { return g_; }

 private:
  const Geometry& geom_;
  Gaussian g_;
  Eigen::LLT<Mat> llt_;
  double log_norm_;  // -(d/2) log(2 pi) - (1/2) log det
};

/// Product of Gaussians on the manifold via the iterative fixed point on
/// the mean with parallel-transported precisions. Converges in one step in
/// the Euclidean case, matching the classical precision-weighted formula.
/// Throws NumericError if an input covariance stays singular after
/// regularization or the iteration fails to converge.
Gaussian gaussian_product(const Geometry& geom, std::span<const Gaussian> gs,
                          const GaussianProductOptions& opts = {});

}  // namespace fskill
