#pragma once

#include <vector>

#include "mpe/criterion.hpp"

namespace mpe {

/// Attraction on a template point of mass `mass` from every reference point.
///
/// Each pair contributes G m_i m_j / (||y_j - x||  + eps2)^2 along the unit
/// vector from x toward y_j, i.e. exactly minus the gradient of the
/// regularized potential energy with respect to x. Coincident pairs have no
/// direction and contribute nothing.
inline Vec3 per_point_gravitation(const Vec3& x, const PointCloud& ref, const CriterionParams& params,
                                  double mass = 1.0) {
  require_non_empty(ref, "per_point_gravitation");
  Vec3 force = Vec3::Zero();
  for (std::size_t j = 0; j < ref.size(); ++j) {
    const Vec3 d = ref.points[j] - x;
    const double r = d.norm();
    if (r == 0.0) continue;
    const double denom = r + params.eps2;
    force += (ref.masses[j] / (denom * denom * r)) * d;
  }
  return (params.gravitational_constant * mass) * force;
}

struct ForceSplit {
  Vec3 axial;       // f_i1, along the radial direction from the center
  Vec3 rotational;  // f_i2 = F - f_i1
};

/// Splits a force into its component along (x - center) and the remainder.
/// A point at the center has no radial direction: all force is axial.
inline ForceSplit decompose_force(const Vec3& force, const Vec3& x, const Vec3& center) {
  const Vec3 r = x - center;
  const double len = r.norm();
  if (len <= 1e-300) return {force, Vec3::Zero()};
  const Vec3 n = r / len;
  const Vec3 axial = force.dot(n) * n;
  return {axial, force - axial};
}

/// (x - center) x f_rot
inline Vec3 torque(const Vec3& x, const Vec3& center, const Vec3& rotational_force) {
  return (x - center).cross(rotational_force);
}

struct ForceField {
  std::vector<Vec3> per_point_force;
  Vec3 force_sum = Vec3::Zero();   // sum of axial components f_i1
  Vec3 net_force = Vec3::Zero();   // sum of full forces F_i
  Vec3 torque_sum = Vec3::Zero();
  double force_scale = 0.0;        // sum ||f_i1||, for degeneracy tests
  double net_scale = 0.0;          // sum ||F_i||
  double torque_scale = 0.0;       // sum ||p_i||
  double nfi = 0.0;                // NFI energy at this pose, same pass
};

/// Evaluates the whole field for a template already placed at its current
/// pose. Sums run in template index order.
inline ForceField compute_force_field(const PointCloud& moved, const PointCloud& ref, const CriterionParams& params,
                                      const Vec3& center) {
  require_non_empty(moved, "compute_force_field");
  require_non_empty(ref, "compute_force_field");
  ForceField field;
  field.per_point_force.reserve(moved.size());
  const double eps2 = params.eps2;
  const double g = params.gravitational_constant;
  for (std::size_t i = 0; i < moved.size(); ++i) {
    const Vec3& x = moved.points[i];
    Vec3 force = Vec3::Zero();
    double inv = 0.0;
    for (std::size_t j = 0; j < ref.size(); ++j) {
      const Vec3 d = ref.points[j] - x;
      const double r = d.norm();
      const double denom = r + eps2;
      inv += 1.0 / denom;
      if (r == 0.0) continue;
      force += (ref.masses[j] / (denom * denom * r)) * d;
    }
    force *= g * moved.masses[i];
    field.nfi -= inv;

    const ForceSplit split = decompose_force(force, x, center);
    const Vec3 p = torque(x, center, split.rotational);
    field.per_point_force.push_back(force);
    field.force_sum += split.axial;
    field.net_force += force;
    field.torque_sum += p;
    field.force_scale += split.axial.norm();
    field.net_scale += force.norm();
    field.torque_scale += p.norm();
  }
  return field;
}

/// Which per-point force component drives translation.
enum class TranslationForce {
  Axial,  // sum of radial components f_i1
  Net,    // sum of full per-point forces F_i
};

struct MotionDirections {
  Vec3 rotation_axis = Vec3::UnitZ();
  Vec3 translation_dir = Vec3::UnitX();
  bool degenerate_rotation = true;
  bool degenerate_translation = true;
  double nfi = 0.0;
};

/// Relative degeneracy threshold: a direction sum is treated as zero when
/// its norm is below this fraction of the sum of its terms' norms.
inline constexpr double kDegeneracyTolerance = 1e-9;

inline MotionDirections directions_from_field(const ForceField& field,
                                              TranslationForce mode = TranslationForce::Axial) {
  MotionDirections out;
  out.nfi = field.nfi;
  const double tn = field.torque_sum.norm();
  if (tn > kDegeneracyTolerance * field.torque_scale && tn > 0.0) {
    out.rotation_axis = field.torque_sum / tn;
    out.degenerate_rotation = false;
  }
  const Vec3& f = mode == TranslationForce::Axial ? field.force_sum : field.net_force;
  const double scale = mode == TranslationForce::Axial ? field.force_scale : field.net_scale;
  const double fn = f.norm();
  if (fn > kDegeneracyTolerance * scale && fn > 0.0) {
    out.translation_dir = f / fn;
    out.degenerate_translation = false;
  }
  return out;
}

/// Rotation axis n_p and translation direction v_t for a template already
/// at its current pose.
inline MotionDirections aggregate_directions(const PointCloud& moved, const PointCloud& ref,
                                             const CriterionParams& params, const Vec3& center,
                                             TranslationForce mode = TranslationForce::Axial) {
  return directions_from_field(compute_force_field(moved, ref, params, center), mode);
}

/// Same, with the template given in its own frame plus the current pose.
inline MotionDirections aggregate_directions(const PointCloud& tmpl, const PointCloud& ref,
                                             const RigidTransform& current, const CriterionParams& params,
                                             const Vec3& center, TranslationForce mode = TranslationForce::Axial) {
  return aggregate_directions(apply_transform(current, tmpl), ref, params, center, mode);
}

}  // namespace mpe
