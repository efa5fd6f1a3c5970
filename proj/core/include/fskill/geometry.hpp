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

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <memory>
#include <string>

#include "fskill/common.hpp"

namespace fskill {

/// Normalizes a quaternion and flips its sign so the scalar part is >= 0.
/// Used everywhere a quaternion is stored, so the double cover never leaks
/// into serialized data or comparisons.
Quat canonical_quaternion(const Quat& q);

/// Exponential at identity: rotation vector (axis * angle, space frame)
/// to unit quaternion. Small angles use a series expansion.
Quat quat_exp(const Vec3& rotation_vector);

/// Logarithm at identity: unit quaternion to rotation vector with angle
/// in [0, pi]. The sign ambiguity is resolved toward the scalar-positive
/// hemisphere before taking the log.
Vec3 quat_log(const Quat& q);

/// A task frame: rigid transform from local to global coordinates.
struct Frame {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  static Frame identity() { return Frame{}; }

  Frame inverse() const;

  /// Composition such that composing then applying equals applying inner
  /// first: compose(f, g).apply(p) == f.apply(g.apply(p)).
  Frame compose(const Frame& inner) const;

  Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }

  bool approx_equal(const Frame& other, double tol = 1e-12) const;
};

/// End effector pose: position plus orientation, the canonical point type
/// of the R^3 x S^3 geometry. Ambient layout is [x y z qw qx qy qz].
struct PosePoint {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  Vec to_ambient() const;
  static PosePoint from_ambient(const Vec& p);
};

class Geometry;
using GeometryPtr = std::shared_ptr<const Geometry>;

/// Riemannian structure shared by the whole pipeline. Points live in an
/// ambient vector (pose: 7 numbers, Euclidean n: n numbers), tangent
/// vectors in R^D with D = tangent_dim(). All maps are deterministic,
/// pure, and safe to call concurrently.
class Geometry {
 public:
  virtual ~Geometry() = default;

  virtual const std::string& name() const = 0;
  virtual int ambient_dim() const = 0;
  virtual int tangent_dim() const = 0;

  /// Projects an ambient vector onto the manifold (quaternion part is
  /// normalized and sign-canonicalized; Euclidean points pass through).
  virtual Vec project(const Vec& p) const = 0;

  /// log_base(p): tangent vector at base pointing toward p.
  virtual Vec log(const Vec& p, const Vec& base) const = 0;

  /// exp_base(v): point reached from base along tangent vector v.
  virtual Vec exp(const Vec& v, const Vec& base) const = 0;

  /// Parallel transport of tangent vector v from `from` to `to`.
  virtual Vec transport(const Vec& v, const Vec& from, const Vec& to) const;

  /// Matrix of the transport map (D x D); transport is linear.
  virtual Mat transport_matrix(const Vec& from, const Vec& to) const = 0;

  /// Action of a task frame on a point (local -> global).
  virtual Vec apply(const Frame& f, const Vec& p) const = 0;

  /// Inverse action (global -> local).
  virtual Vec unapply(const Frame& f, const Vec& p) const = 0;

  /// D x D rotation acting on tangent vectors (twists, wrenches) under
  /// the frame map; covariances transform by congruence with it.
  virtual Mat tangent_rotation(const Frame& f) const = 0;

  /// Geodesic distance, i.e. the norm of log_a(b).
  double distance(const Vec& a, const Vec& b) const;

  /// A fixed reference point (origin / identity pose).
  virtual Vec origin() const = 0;

  /// Flat R^n with identity exp/log.
  static GeometryPtr euclidean(int dim);

  /// Pose manifold R^3 x S^3 with the quaternion double cover handled by
  /// sign canonicalization toward the base point.
  static GeometryPtr pose();

  /// Parses "pose" or "euclidean:<n>".
  static GeometryPtr from_name(const std::string& name);
};

}  // namespace fskill
