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

#include "fskill/demo.hpp"
#include "fskill/geometry.hpp"

namespace fskill {

/// Cartesian impedance gains. Stiffness must be invertible wherever the
/// attractor inversion is applied.
struct ImpedanceGains {
  Mat stiffness;  // K^rho, D x D symmetric PSD
  Mat damping;    // K^nu, D x D symmetric PSD

  /// 400 I / 40 I, the fixed gains used while recording demonstrations.
  static ImpedanceGains initial(int dim, double stiffness_gain = 400.0,
                                double damping_gain = 40.0);
};

/// Throws unless both matrices are d x d, symmetric within 1e-12, PSD, and
/// (when `require_invertible`) the stiffness eigenvalues are >= 1e-6.
void check_gains(const ImpedanceGains& gains, int dim,
                 bool require_invertible = true);

/// Virtual attractor for one observation: the set point a mass-spring-
/// damper with these gains must hold so the recorded motion and wrench
/// balance. Displacement is computed in the tangent space at x and mapped
/// back with a single exp.
Vec attractor_point(const Geometry& geom, const Vec& x, const Vec& twist,
                    const Vec& accel, const Vec& wrench,
                    const ImpedanceGains& gains);

/// Attractor view of a demonstration: per-sample attractor poses with the
/// source timestamps and object poses.
struct AttractorTrajectory {
  std::vector<double> times;
  std::vector<Vec> points;
  std::vector<Vec> object_poses;
};

/// Constant-gain transform of a whole demo (the first training pass).
AttractorTrajectory attractor_trajectory(const Geometry& geom,
                                         const Demonstration& demo,
                                         const ImpedanceGains& gains);

/// Per-sample gain schedule (later passes, optimized stiffness).
AttractorTrajectory attractor_trajectory(const Geometry& geom,
                                         const Demonstration& demo,
                                         std::span<const ImpedanceGains> gains);

/// Virtual attractor observations over an executed prefix: each step uses
/// the stiffness of the component that was active when it was recorded.
/// `stiffness_table` is indexed by component id and must cover every id in
/// `executed` (including any trailing transition id).
std::vector<Vec> virtual_attractor_series(const Geometry& geom,
                                          std::span<const ObservationPoint> past,
                                          std::span<const int> executed,
                                          std::span<const Mat> stiffness_table,
                                          const Mat& damping);

}  // namespace fskill
