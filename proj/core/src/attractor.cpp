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

#include "fskill/attractor.hpp"

namespace fskill {

namespace {

constexpr double kStiffnessFloor = 1e-6;

void check_psd(const Mat& m, int dim, double min_eig, const char* what) {
  if (m.rows() != dim || m.cols() != dim) {
    throw Error(std::string(what) + " must be " + std::to_string(dim) + "x" +
                std::to_string(dim));
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(std::string(what) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericError(std::string(what) + ": eigensolver failed");
  }
  if (es.eigenvalues().minCoeff() < min_eig - 1e-15) {
    throw Error(std::string(what) + " eigenvalue below " +
                format_double(min_eig));
  }
}

}  // namespace

ImpedanceGains ImpedanceGains::initial(int dim, double stiffness_gain,
                                       double damping_gain) {
  ImpedanceGains g;
  g.stiffness = stiffness_gain * Mat::Identity(dim, dim);
  g.damping = damping_gain * Mat::Identity(dim, dim);
  return g;
}

void check_gains(const ImpedanceGains& gains, int dim,
                 bool require_invertible) {
  check_psd(gains.stiffness, dim, require_invertible ? kStiffnessFloor : 0.0,
            "stiffness");
  check_psd(gains.damping, dim, 0.0, "damping");
}

Vec attractor_point(const Geometry& geom, const Vec& x, const Vec& twist,
                    const Vec& accel, const Vec& wrench,
                    const ImpedanceGains& gains) {
  const int d = geom.tangent_dim();
  check_gains(gains, d, true);
  const Vec drive = gains.damping * twist + accel - wrench;
  Eigen::LLT<Mat> llt(gains.stiffness);
  if (llt.info() != Eigen::Success) {
    throw NumericError("attractor_point: stiffness is not invertible");
  }
  return geom.exp(llt.solve(drive), x);
}

AttractorTrajectory attractor_trajectory(const Geometry& geom,
                                         const Demonstration& demo,
                                         const ImpedanceGains& gains) {
  const std::vector<ImpedanceGains> schedule(demo.points.size(), gains);
  return attractor_trajectory(geom, demo, schedule);
}

AttractorTrajectory attractor_trajectory(
    const Geometry& geom, const Demonstration& demo,
    std::span<const ImpedanceGains> gains) {
  if (gains.size() != demo.points.size()) {
    throw Error("gains schedule length " + std::to_string(gains.size()) +
                " does not match demo length " +
                std::to_string(demo.points.size()));
  }
  AttractorTrajectory out;
  out.times.reserve(demo.points.size());
  out.points.reserve(demo.points.size());
  out.object_poses.reserve(demo.points.size());
  for (std::size_t i = 0; i < demo.points.size(); ++i) {
    const ObservationPoint& p = demo.points[i];
    out.times.push_back(p.time);
    out.points.push_back(
        attractor_point(geom, p.x, p.twist, p.accel, p.wrench, gains[i]));
    out.object_poses.push_back(p.object_pose);
  }
  return out;
}

std::vector<Vec> virtual_attractor_series(const Geometry& geom,
                                          std::span<const ObservationPoint> past,
                                          std::span<const int> executed,
                                          std::span<const Mat> stiffness_table,
                                          const Mat& damping) {
  if (past.size() != executed.size()) {
    throw Error("virtual_attractor_series: history and component ids differ "
                "in length");
  }
  std::vector<Vec> out;
  out.reserve(past.size());
  for (std::size_t i = 0; i < past.size(); ++i) {
    const int id = executed[i];
    if (id < 0 || id >= static_cast<int>(stiffness_table.size())) {
      throw Error("virtual_attractor_series: component id " +
                  std::to_string(id) + " has no stiffness entry");
    }
    ImpedanceGains gains;
    gains.stiffness = stiffness_table[id];
    gains.damping = damping;
    const ObservationPoint& p = past[i];
    out.push_back(
        attractor_point(geom, p.x, p.twist, p.accel, p.wrench, gains));
  }
  return out;
}

}  // namespace fskill
