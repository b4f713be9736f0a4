#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mpe/error.hpp"

namespace mpe {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Proper rigid motion p -> R p + t.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Vec3 operator()(const Vec3& p) const { return rotation * p + translation; }
};

/// Axis-angle with angle in [0, pi] and unit axis.
struct AxisAngle {
  Vec3 axis = Vec3::UnitZ();
  double angle = 0.0;
};

/// Cross-product matrix: skew(v) * w == v.cross(w).
inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

/// R = cos(a) I + (1 - cos(a)) n n^T + sin(a) [n]x
inline Mat3 rodrigues(double angle, const Vec3& axis) {
  if (!std::isfinite(angle)) throw InvalidArgument("rodrigues: angle is not finite");
  if (std::abs(axis.norm() - 1.0) > 1e-6) throw InvalidArgument("rodrigues: axis is not unit length");
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return c * Mat3::Identity() + (1.0 - c) * axis * axis.transpose() + s * skew(axis);
}

/// Canonical axis-angle of a proper rotation; angle in [0, pi].
inline AxisAngle to_axis_angle(const Mat3& r) {
  const Eigen::AngleAxisd aa(r);
  AxisAngle out{aa.axis().normalized(), aa.angle()};
  if (out.angle < 0.0) {
    out.angle = -out.angle;
    out.axis = -out.axis;
  }
  if (out.angle > std::numbers::pi) {
    out.angle = 2.0 * std::numbers::pi - out.angle;
    out.axis = -out.axis;
  }
  return out;
}

/// Rotation angle recovered from the trace identity trace(R) = 1 + 2 cos(a).
inline double rotation_angle(const Mat3& r) {
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

/// compose(a, b)(p) == a(b(p))
inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

inline RigidTransform inverse(const RigidTransform& t) {
  const Mat3 rt = t.rotation.transpose();
  return {rt, -rt * t.translation};
}

/// Nearest proper rotation in the Frobenius sense.
inline Mat3 nearest_rotation(const Mat3& m) {
  const Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

inline RigidTransform orthonormalized(const RigidTransform& t) {
  return {nearest_rotation(t.rotation), t.translation};
}

/// Rotation by `r` about `center`: p -> r (p - center) + center.
inline RigidTransform rotation_about(const Mat3& r, const Vec3& center) {
  return {r, center - r * center};
}

inline RigidTransform translation_only(const Vec3& t) { return {Mat3::Identity(), t}; }

inline bool is_rotation(const Mat3& r, double tol = 1e-9) {
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho < tol && std::abs(r.determinant() - 1.0) < tol;
}

}  // namespace mpe
