// Shared helpers for the test binaries: seeded random generators and a few
// closed-form reference implementations used as oracles.
#pragma once

#include <random>

#include "fskill/gaussian.hpp"
#include "fskill/geometry.hpp"

namespace fskill::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gauss(Rng& rng, double stddev = 1.0) {
  return std::normal_distribution<double>(0.0, stddev)(rng);
}

inline Vec gauss_vec(Rng& rng, int n, double stddev = 1.0) {
  Vec v(n);
  for (int i = 0; i < n; ++i) {
    v(i) = gauss(rng, stddev);
  }
  return v;
}

inline Quat random_quat(Rng& rng) {
  // Uniform on S^3 by normalizing a 4d Gaussian; sign left unresolved on
  // purpose so double cover handling gets exercised.
  Quat q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  q.normalize();
  return q;
}

inline Vec random_pose(Rng& rng, double pos_scale = 1.0) {
  Vec p(7);
  p.head<3>() = gauss_vec(rng, 3, pos_scale);
  const Quat q = random_quat(rng);
  p(3) = q.w();
  p(4) = q.x();
  p(5) = q.y();
  p(6) = q.z();
  return p;
}

inline Mat random_spd(Rng& rng, int n, double min_eig = 0.05,
                      double max_eig = 3.0) {
  Mat a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      a(i, j) = gauss(rng);
    }
  }
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ();
  Vec eigs(n);
  for (int i = 0; i < n; ++i) {
    eigs(i) = uniform(rng, min_eig, max_eig);
  }
  return q * eigs.asDiagonal() * q.transpose();
}

inline Frame random_frame(Rng& rng, double pos_scale = 1.0) {
  Frame f;
  f.rotation = random_quat(rng);
  f.translation = gauss_vec(rng, 3, pos_scale);
  return f;
}

/// Classical precision-weighted product of Euclidean Gaussians; the
/// manifold implementation must reduce to this exactly in flat space.
inline Gaussian euclidean_product_oracle(std::span<const Gaussian> gs) {
  const int n = static_cast<int>(gs[0].mean.size());
  Mat lambda = Mat::Zero(n, n);
  Vec eta = Vec::Zero(n);
  for (const Gaussian& g : gs) {
    const Mat p = g.cov.inverse();
    lambda += p;
    eta += p * g.mean;
  }
  Gaussian out;
  out.cov = lambda.inverse();
  out.mean = out.cov * eta;
  return out;
}

}  // namespace fskill::testing
