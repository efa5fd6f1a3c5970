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

#include "fskill/gaussian.hpp"

#include <cmath>

namespace fskill {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

Mat regularized(const Mat& cov, double floor_eig) {
  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  Vec vals = es.eigenvalues();
  for (int i = 0; i < vals.size(); ++i) {
    vals(i) = std::max(vals(i), floor_eig);
  }
  return es.eigenvectors() * vals.asDiagonal() *
         es.eigenvectors().transpose();
}

// Cholesky with a single regularization retry; throws on persistent
// degeneracy so callers see a clear error instead of NaNs.
Eigen::LLT<Mat> factor(const Mat& cov, double regularization) {
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() == Eigen::Success) {
    return llt;
  }
  llt.compute(regularized(cov, regularization));
  if (llt.info() != Eigen::Success) {
    throw NumericError("covariance is singular even after regularization");
  }
  return llt;
}

double log_det_from_llt(const Eigen::LLT<Mat>& llt) {
  const Mat l = llt.matrixL();
  double out = 0.0;
  for (int i = 0; i < l.rows(); ++i) {
    out += 2.0 * std::log(l(i, i));
  }
  return out;
}

}  // namespace

void check_gaussian(const Geometry& geom, const Gaussian& g,
                    double min_eigenvalue, double symmetry_tol) {
  const int d = geom.tangent_dim();
  if (g.mean.size() != geom.ambient_dim()) {
    throw Error("gaussian mean has dimension " + std::to_string(g.mean.size()) +
                ", geometry " + geom.name() + " expects " +
                std::to_string(geom.ambient_dim()));
  }
  if (g.cov.rows() != d || g.cov.cols() != d) {
    throw Error("gaussian covariance must be " + std::to_string(d) + "x" +
                std::to_string(d));
  }
  if ((g.cov - g.cov.transpose()).cwiseAbs().maxCoeff() > symmetry_tol) {
    throw Error("gaussian covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(g.cov, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < min_eigenvalue - 1e-12) {
    throw Error("gaussian covariance eigenvalue below floor");
  }
}

Gaussian frame_transform(const Geometry& geom, const Frame& f,
                         const Gaussian& g) {
  Gaussian out;
  out.mean = geom.apply(f, g.mean);
  const Mat r = geom.tangent_rotation(f);
  out.cov = r * g.cov * r.transpose();
  return out;
}

double gaussian_logpdf(const Geometry& geom, const Gaussian& g, const Vec& x) {
  return GaussianEvaluator(geom, g).logpdf(x);
}

GaussianEvaluator::GaussianEvaluator(const Geometry& geom, const Gaussian& g,
                                     double regularization)
    : geom_(geom), g_(g), llt_(factor(g.cov, regularization)) {
  const double d = static_cast<double>(geom.tangent_dim());
  log_norm_ = -0.5 * (d * kLogTwoPi + log_det_from_llt(llt_));
}

double GaussianEvaluator::logpdf(const Vec& x) const {
  const Vec v = geom_.log(x, g_.mean);
  return log_norm_ - 0.5 * v.dot(llt_.solve(v));
}

Gaussian gaussian_product(const Geometry& geom, std::span<const Gaussian> gs,
                          const GaussianProductOptions& opts) {
  if (gs.empty()) {
    throw Error("gaussian product of an empty set");
  }
  for (const Gaussian& g : gs) {
    check_gaussian(geom, g);
  }
  if (gs.size() == 1) {
    Gaussian out = gs[0];
    out.mean = geom.project(out.mean);
    return out;
  }

  const int d = geom.tangent_dim();
  std::vector<Mat> precisions;
  precisions.reserve(gs.size());
  for (const Gaussian& g : gs) {
    precisions.push_back(
        factor(g.cov, opts.regularization).solve(Mat::Identity(d, d)));
  }

  // Fixed point on the mean: precisions are transported to the current
  // estimate, combined, and the estimate moves along the blended residual.
  Vec e = geom.project(gs[0].mean);
  Mat cov = Mat::Identity(d, d);
  bool converged = false;
  for (int it = 0; it < opts.max_iterations; ++it) {
    Mat lambda_sum = Mat::Zero(d, d);
    Vec weighted = Vec::Zero(d);
    for (std::size_t i = 0; i < gs.size(); ++i) {
      const Mat t = geom.transport_matrix(gs[i].mean, e);
      const Mat lambda = t * precisions[i] * t.transpose();
      lambda_sum += lambda;
      weighted += lambda * geom.log(gs[i].mean, e);
    }
    Eigen::LLT<Mat> llt(lambda_sum);
    if (llt.info() != Eigen::Success) {
      throw NumericError("gaussian product: combined precision is singular");
    }
    cov = llt.solve(Mat::Identity(d, d));
    const Vec step = cov * weighted;
    e = geom.exp(step, e);
    if (step.norm() < opts.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NumericError("gaussian product did not converge");
  }

  Gaussian out;
  out.mean = e;
  out.cov = 0.5 * (cov + cov.transpose());
  return out;
}

}  // namespace fskill
