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

#include "fskill/geometry.hpp"

#include <cmath>

namespace fskill {

namespace {

constexpr double kSmallAngle = 1e-12;
constexpr double kPi = 3.14159265358979323846;

void check_dim(const Vec& v, int expected, const char* what) {
  if (v.size() != expected) {
    throw Error(std::string(what) + ": expected dimension " +
                std::to_string(expected) + ", got " + std::to_string(v.size()));
  }
}

}  // namespace

Quat canonical_quaternion(const Quat& q) {
  Quat r = q.normalized();
  if (r.w() < 0.0) {
    r.coeffs() = -r.coeffs();
  }
  return r;
}

Quat quat_exp(const Vec3& rotation_vector) {
  const double angle = rotation_vector.norm();
  double w;
  double scale;  // sin(angle/2) / angle
  if (angle < kSmallAngle) {
    w = 1.0 - angle * angle / 8.0;
    scale = 0.5 - angle * angle / 48.0;
  } else {
    w = std::cos(0.5 * angle);
    scale = std::sin(0.5 * angle) / angle;
  }
  Quat q(w, scale * rotation_vector.x(), scale * rotation_vector.y(),
         scale * rotation_vector.z());
  return q.normalized();
}

Vec3 quat_log(const Quat& q) {
  Quat u = q.normalized();
  double w = u.w();
  Vec3 v = u.vec();
  if (w < 0.0) {
    w = -w;
    v = -v;
  }
  const double s = v.norm();
  if (s < kSmallAngle) {
    // w is ~1 here; first order term of 2*atan2(s, w)/s.
    return 2.0 * v;
  }
  const double angle = 2.0 * std::atan2(s, w);
  return (angle / s) * v;
}

Frame Frame::inverse() const {
  Frame out;
  out.rotation = rotation.conjugate();
  out.translation = -(out.rotation * translation);
  return out;
}

Frame Frame::compose(const Frame& inner) const {
  Frame out;
  out.rotation = canonical_quaternion(rotation * inner.rotation);
  out.translation = rotation * inner.translation + translation;
  return out;
}

bool Frame::approx_equal(const Frame& other, double tol) const {
  const Quat a = canonical_quaternion(rotation);
  const Quat b = canonical_quaternion(other.rotation);
  return (a.coeffs() - b.coeffs()).norm() <= tol &&
         (translation - other.translation).norm() <= tol;
}

Vec PosePoint::to_ambient() const {
  Vec p(7);
  const Quat q = canonical_quaternion(orientation);
  p << position.x(), position.y(), position.z(), q.w(), q.x(), q.y(), q.z();
  return p;
}

PosePoint PosePoint::from_ambient(const Vec& p) {
  if (p.size() != 7) {
    throw Error("pose point: expected 7 ambient coordinates, got " +
                std::to_string(p.size()));
  }
  PosePoint out;
  out.position = p.head<3>();
  out.orientation = canonical_quaternion(Quat(p(3), p(4), p(5), p(6)));
  return out;
}

Vec Geometry::transport(const Vec& v, const Vec& from, const Vec& to) const {
  return transport_matrix(from, to) * v;
}

double Geometry::distance(const Vec& a, const Vec& b) const {
  return log(b, a).norm();
}

namespace {

class EuclideanGeometry final : public Geometry {
 public:
  explicit EuclideanGeometry(int dim)
      : dim_(dim), name_("euclidean:" + std::to_string(dim)) {
    if (dim <= 0) {
      throw Error("euclidean geometry needs a positive dimension");
    }
  }

  const std::string& name() const override { return name_; }
  int ambient_dim() const override { return dim_; }
  int tangent_dim() const override { return dim_; }

  Vec project(const Vec& p) const override {
    check_dim(p, dim_, "euclidean point");
    return p;
  }

  Vec log(const Vec& p, const Vec& base) const override {
    check_dim(p, dim_, "euclidean point");
    check_dim(base, dim_, "euclidean base");
    return p - base;
  }

  Vec exp(const Vec& v, const Vec& base) const override {
    check_dim(v, dim_, "euclidean tangent");
    check_dim(base, dim_, "euclidean base");
    return base + v;
  }

  Mat transport_matrix(const Vec&, const Vec&) const override {
    return Mat::Identity(dim_, dim_);
  }

  Vec transport(const Vec& v, const Vec&, const Vec&) const override {
    check_dim(v, dim_, "euclidean tangent");
    return v;
  }

  Vec apply(const Frame& f, const Vec& p) const override {
    check_dim(p, dim_, "euclidean point");
    if (dim_ == 3) {
      return f.rotation * Vec3(p) + f.translation;
    }
    require_translation_only(f);
    Vec out = p;
    const int n = std::min<int>(3, dim_);
    out.head(n) += f.translation.head(n);
    return out;
  }

  Vec unapply(const Frame& f, const Vec& p) const override {
    check_dim(p, dim_, "euclidean point");
    if (dim_ == 3) {
      return f.rotation.conjugate() * (Vec3(p) - f.translation);
    }
    require_translation_only(f);
    Vec out = p;
    const int n = std::min<int>(3, dim_);
    out.head(n) -= f.translation.head(n);
    return out;
  }

  Mat tangent_rotation(const Frame& f) const override {
    if (dim_ == 3) {
      return f.rotation_matrix();
    }
    require_translation_only(f);
    return Mat::Identity(dim_, dim_);
  }

  Vec origin() const override { return Vec::Zero(dim_); }

 private:
  void require_translation_only(const Frame& f) const {
    if (std::abs(canonical_quaternion(f.rotation).w() - 1.0) > 1e-12) {
      throw Error("rotating frames are only defined on euclidean:3, not " +
                  name_);
    }
  }

  int dim_;
  std::string name_;
};

// R^3 x S^3. Tangent layout [linear(3); angular(3)], angular vectors are
// expressed in the space frame (right trivialization), so the frame action
// rotates both blocks by the same rotation.
class PoseGeometry final : public Geometry {
 public:
  PoseGeometry() : name_("pose") {}

  const std::string& name() const override { return name_; }
  int ambient_dim() const override { return 7; }
  int tangent_dim() const override { return 6; }

  Vec project(const Vec& p) const override {
    check_dim(p, 7, "pose point");
    Vec out = p;
    const Quat q = canonical_quaternion(quat_of(p));
    out(3) = q.w();
    out(4) = q.x();
    out(5) = q.y();
    out(6) = q.z();
    return out;
  }

  Vec log(const Vec& p, const Vec& base) const override {
    check_dim(p, 7, "pose point");
    check_dim(base, 7, "pose base");
    Vec v(6);
    v.head<3>() = p.head<3>() - base.head<3>();
    v.tail<3>() = quat_log(relative(quat_of(p), quat_of(base)));
    return v;
  }

  Vec exp(const Vec& v, const Vec& base) const override {
    check_dim(v, 6, "pose tangent");
    check_dim(base, 7, "pose base");
    Vec p(7);
    p.head<3>() = base.head<3>() + v.head<3>();
    const Quat q = canonical_quaternion(quat_exp(v.tail<3>()) * quat_of(base));
    p(3) = q.w();
    p(4) = q.x();
    p(5) = q.y();
    p(6) = q.z();
    return p;
  }

  Mat transport_matrix(const Vec& from, const Vec& to) const override {
    check_dim(from, 7, "pose base");
    check_dim(to, 7, "pose base");
    const Quat rel = relative(quat_of(to), quat_of(from));
    const Quat half = quat_exp(0.5 * quat_log(rel));
    Mat out = Mat::Identity(6, 6);
    out.block<3, 3>(3, 3) = half.toRotationMatrix();
    return out;
  }

  Vec transport(const Vec& v, const Vec& from, const Vec& to) const override {
    check_dim(v, 6, "pose tangent");
    check_dim(from, 7, "pose base");
    check_dim(to, 7, "pose base");
    const Quat rel = relative(quat_of(to), quat_of(from));
    const Quat half = quat_exp(0.5 * quat_log(rel));
    Vec out(6);
    out.head<3>() = v.head<3>();
    out.tail<3>() = half * Vec3(v.tail<3>());
    return out;
  }

  Vec apply(const Frame& f, const Vec& p) const override {
    check_dim(p, 7, "pose point");
    Vec out(7);
    out.head<3>() = f.rotation * Vec3(p.head<3>()) + f.translation;
    const Quat q = canonical_quaternion(f.rotation * quat_of(p));
    out(3) = q.w();
    out(4) = q.x();
    out(5) = q.y();
    out(6) = q.z();
    return out;
  }

  Vec unapply(const Frame& f, const Vec& p) const override {
    check_dim(p, 7, "pose point");
    Vec out(7);
    out.head<3>() = f.rotation.conjugate() * Vec3(p.head<3>() - f.translation);
    const Quat q = canonical_quaternion(f.rotation.conjugate() * quat_of(p));
    out(3) = q.w();
    out(4) = q.x();
    out(5) = q.y();
    out(6) = q.z();
    return out;
  }

  Mat tangent_rotation(const Frame& f) const override {
    Mat out = Mat::Zero(6, 6);
    const Mat3 r = f.rotation_matrix();
    out.block<3, 3>(0, 0) = r;
    out.block<3, 3>(3, 3) = r;
    return out;
  }

  Vec origin() const override {
    Vec p = Vec::Zero(7);
    p(3) = 1.0;
    return p;
  }

 private:
  static Quat quat_of(const Vec& p) { return Quat(p(3), p(4), p(5), p(6)); }

  // Rotation taking `b` to `a` in the space frame, with the double cover
  // resolved so the relative rotation has angle <= pi. An exact antipode
  // maps to a pi turn about the x axis, chosen deterministically.
  static Quat relative(Quat a, const Quat& b) {
    if (a.dot(b) < 0.0) {
      a.coeffs() = -a.coeffs();
    }
    Quat rel = a * b.conjugate();
    if (std::abs(rel.w()) < kSmallAngle && rel.vec().norm() < kSmallAngle) {
      rel = quat_exp(Vec3(kPi, 0.0, 0.0));
    }
    return rel.normalized();
  }

  std::string name_;
};

}  // namespace

GeometryPtr Geometry::euclidean(int dim) {
  return std::make_shared<EuclideanGeometry>(dim);
}

GeometryPtr Geometry::pose() { return std::make_shared<PoseGeometry>(); }

GeometryPtr Geometry::from_name(const std::string& name) {
  if (name == "pose") {
    return pose();
  }
  const std::string prefix = "euclidean:";
  if (name.rfind(prefix, 0) == 0) {
    const long long dim = parse_integer(name.substr(prefix.size()));
    return euclidean(static_cast<int>(dim));
  }
  throw FormatError("unknown geometry '" + name +
                    "' (expected 'pose' or 'euclidean:<n>')");
}

}  // namespace fskill
