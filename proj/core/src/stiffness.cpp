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

#include "fskill/stiffness.hpp"

#include <Eigen/Eigenvalues>

#include "fskill/attractor.hpp"
#include <cmath>
#include <utility>

namespace fskill {
namespace {

std::vector<std::pair<int, int>> structure_blocks(int dim,
                                                  bool block_diagonal) {
  if (block_diagonal && dim == 6) {
    return {{0, 3}, {3, 3}};
  }
  return {{0, dim}};
}

// Exact projection onto {block sparsity pattern} intersected with the PSD
// cone; the objective is separable over blocks once the off-block entries
// are dropped.
Mat project_structured(const Mat& m,
                       const std::vector<std::pair<int, int>>& blocks) {
  Mat out = Mat::Zero(m.rows(), m.cols());
  for (const auto& [start, size] : blocks) {
    out.block(start, start, size, size) =
        psd_project(m.block(start, start, size, size));
  }
  return out;
}

// One demo's residual data for a fixed component: eps(S) = c - S * w.
struct ResidualTerms {
  Vec c;
  Vec w;
};

ResidualTerms residual_terms(const Geometry& geom, const Demonstration& demo,
                             const Mat& responsibilities, int k,
                             const Vec& global_mean, const Mat& damping) {
  const int t_len = static_cast<int>(demo.points.size());
  if (responsibilities.rows() != t_len) {
    throw Error("responsibilities cover " +
                std::to_string(responsibilities.rows()) + " samples but demo '" +
                demo.id + "' has " + std::to_string(t_len));
  }
  if (k < 0 || k >= responsibilities.cols()) {
    throw Error("component index " + std::to_string(k) + " out of range");
  }
  const int d = geom.tangent_dim();
  ResidualTerms terms{Vec::Zero(d), Vec::Zero(d)};
  const Vec mean = geom.project(global_mean);
  for (int t = 0; t < t_len; ++t) {
    const double p = responsibilities(t, k);
    if (p == 0.0) {
      continue;
    }
    const ObservationPoint& pt = demo.points[t];
    terms.c += p * geom.log(mean, pt.x);
    terms.w += p * (damping * pt.twist + pt.accel - pt.wrench);
  }
  return terms;
}

struct Objective {
  std::vector<ResidualTerms> terms;
  bool sum_of_squares = false;

  double value(const Mat& s) const {
    if (sum_of_squares) {
      double acc = 0.0;
      for (const ResidualTerms& t : terms) {
        acc += (t.c - s * t.w).squaredNorm();
      }
      return acc;
    }
    Vec total = Vec::Zero(s.rows());
    for (const ResidualTerms& t : terms) {
      total += t.c - s * t.w;
    }
    return total.squaredNorm();
  }

  Mat gradient(const Mat& s) const {
    Mat g = Mat::Zero(s.rows(), s.cols());
    if (sum_of_squares) {
      for (const ResidualTerms& t : terms) {
        g += 2.0 * (s * t.w - t.c) * t.w.transpose();
      }
    } else {
      Vec c_total = Vec::Zero(s.rows());
      Vec w_total = Vec::Zero(s.rows());
      for (const ResidualTerms& t : terms) {
        c_total += t.c;
        w_total += t.w;
      }
      g = 2.0 * (s * w_total - c_total) * w_total.transpose();
    }
    return 0.5 * (g + g.transpose());  // gradient on the symmetric subspace
  }

  double lipschitz() const {
    if (sum_of_squares) {
      double acc = 0.0;
      for (const ResidualTerms& t : terms) {
        acc += t.w.squaredNorm();
      }
      return 2.0 * acc;
    }
    Vec w_total = Vec::Zero(terms.front().w.size());
    for (const ResidualTerms& t : terms) {
      w_total += t.w;
    }
    return 2.0 * w_total.squaredNorm();
  }
};

Mat invert_compliance(const Mat& s,
                      const std::vector<std::pair<int, int>>& blocks,
                      const StiffnessOptions& opts, int k,
                      std::vector<std::string>* warnings) {
  Mat gain = Mat::Zero(s.rows(), s.cols());
  const double s_floor = 1.0 / opts.lambda_max;
  const double s_ceil = 1.0 / opts.lambda_min;
  bool clamped_singular = false;
  for (const auto& [start, size] : blocks) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(s.block(start, start, size, size));
    Vec lam = eig.eigenvalues();
    for (int i = 0; i < size; ++i) {
      if (lam(i) < s_floor) {
        if (lam(i) < s_floor * (1.0 - 1e-12)) {
          clamped_singular = true;
        }
        lam(i) = s_floor;
      } else if (lam(i) > s_ceil) {
        lam(i) = s_ceil;
      }
    }
    const Mat v = eig.eigenvectors();
    Mat block = v * lam.cwiseInverse().asDiagonal() * v.transpose();
    gain.block(start, start, size, size) = 0.5 * (block + block.transpose());
  }
  if (clamped_singular && warnings != nullptr) {
    warnings->push_back("component " + std::to_string(k) +
                        ": near-singular compliance, stiffness clamped to "
                        "lambda_max");
  }
  return gain;
}

}  // namespace

Mat psd_project(const Mat& m) {
  const Mat sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
  const Vec lam = eig.eigenvalues().cwiseMax(0.0);
  const Mat v = eig.eigenvectors();
  const Mat out = v * lam.asDiagonal() * v.transpose();
  return 0.5 * (out + out.transpose());
}

void StiffnessModel::check_invariants() const {
  for (int k = 0; k < components(); ++k) {
    const Mat& g = gains[k];
    if (g.rows() != g.cols() || g.rows() == 0) {
      throw Error("stiffness " + std::to_string(k) + " is not square");
    }
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
      throw Error("stiffness " + std::to_string(k) + " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(g);
    if (eig.eigenvalues().minCoeff() < -1e-10) {
      throw Error("stiffness " + std::to_string(k) + " has negative eigenvalue");
    }
    if (block_diagonal && g.rows() == 6) {
      if (g.block(0, 3, 3, 3).cwiseAbs().maxCoeff() > 1e-12) {
        throw Error("stiffness " + std::to_string(k) +
                    " couples translation and rotation");
      }
    }
  }
}

Vec component_residual(const Geometry& geom, const Demonstration& demo,
                       const Mat& responsibilities, int k,
                       const Vec& global_mean, const Mat& damping,
                       const Mat& compliance) {
  const ResidualTerms terms =
      residual_terms(geom, demo, responsibilities, k, global_mean, damping);
  return terms.c - compliance * terms.w;
}

StiffnessModel optimize_stiffness(const Tphsmm& model,
                                  const std::vector<Demonstration>& demos,
                                  const std::vector<Scene>& scenes,
                                  const std::vector<Mat>& responsibilities,
                                  const Mat& damping,
                                  const StiffnessOptions& options) {
  const int m_count = static_cast<int>(demos.size());
  if (m_count == 0) {
    throw Error("no demonstrations for stiffness optimization");
  }
  if (static_cast<int>(scenes.size()) != m_count ||
      static_cast<int>(responsibilities.size()) != m_count) {
    throw Error("demos, scenes and responsibilities must align");
  }
  const Geometry& geom = *model.geometry;
  const int d = geom.tangent_dim();
  const int k_count = model.components();

  Mat initial = options.initial_stiffness;
  if (initial.size() == 0) {
    initial = ImpedanceGains::initial(d).stiffness;
  }
  if (initial.rows() != d || initial.cols() != d) {
    throw Error("initial stiffness has wrong dimension");
  }
  Eigen::LLT<Mat> init_llt(initial);
  if (init_llt.info() != Eigen::Success) {
    throw Error("initial stiffness must be positive definite");
  }
  const Mat s_init = init_llt.solve(Mat::Identity(d, d));

  // Component means in each demo's own global frame.
  std::vector<std::vector<Gaussian>> globals;
  globals.reserve(scenes.size());
  for (const Scene& scene : scenes) {
    globals.push_back(global_components(model, scene));
  }

  const auto blocks = structure_blocks(d, options.block_diagonal);
  StiffnessModel out;
  out.block_diagonal = options.block_diagonal;

  for (int k = 0; k < k_count; ++k) {
    Objective obj;
    obj.sum_of_squares = options.sum_of_squared_residuals;
    for (int m = 0; m < m_count; ++m) {
      obj.terms.push_back(residual_terms(geom, demos[m], responsibilities[m],
                                         k, globals[m][k].mean, damping));
    }

    const double lip = obj.lipschitz();
    std::vector<double> trace;
    if (lip < 1e-30) {
      // Objective does not depend on S at all; keep the initial gains.
      out.gains.push_back(initial);
      trace.push_back(obj.value(project_structured(s_init, blocks)));
      out.objective_traces.push_back(std::move(trace));
      continue;
    }

    const double step = 1.0 / lip;
    Mat s = project_structured(s_init, blocks);
    Mat y = s;
    double momentum = 1.0;
    double value = obj.value(s);
    trace.push_back(value);

    for (int iter = 0; iter < options.max_iterations; ++iter) {
      Mat cand = project_structured(y - step * obj.gradient(y), blocks);
      double cand_value = obj.value(cand);
      if (cand_value > value) {
        // Momentum overshot; restart from the last monotone iterate.
        cand = project_structured(s - step * obj.gradient(s), blocks);
        cand_value = obj.value(cand);
        momentum = 1.0;
        if (cand_value > value) {
          break;  // numerically stationary
        }
      }
      const double next_momentum =
          0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      y = cand + ((momentum - 1.0) / next_momentum) * (cand - s);
      momentum = next_momentum;
      s = cand;
      trace.push_back(cand_value);
      const bool converged =
          std::abs(value - cand_value) <= options.tolerance * (1.0 + value);
      value = cand_value;
      if (converged) {
        break;
      }
    }

    out.gains.push_back(
        invert_compliance(s, blocks, options, k, &out.warnings));
    out.objective_traces.push_back(std::move(trace));
  }

  out.check_invariants();
  return out;
}

}  // namespace fskill
