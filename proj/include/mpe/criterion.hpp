#pragma once

#include <cmath>
#include <ostream>
#include <optional>
#include <string>
#include <vector>

#include "mpe/point_cloud.hpp"
#include "mpe/spatial_index.hpp"

namespace mpe {

/// Additive distance offset eps2 and gravitational constant G.
struct CriterionParams {
  double eps2 = 1.0;
  double gravitational_constant = 1.0;

  void validate() const {
    if (!(eps2 > 0.0) || !std::isfinite(eps2)) throw InvalidArgument("criterion: eps2 must be positive");
    if (!(gravitational_constant > 0.0) || !std::isfinite(gravitational_constant))
      throw InvalidArgument("criterion: gravitational constant must be positive");
  }
};

/// Scale-relative default for eps2: 4% of the reference bounding-box diagonal.
inline double default_eps2(const PointCloud& reference) {
  const double diag = bounding_box(reference).diagonal();
  return diag > 0.0 ? 0.04 * diag : 1.0;
}

/// ||y - x|| + eps2
inline double pair_distance(const Vec3& x, const Vec3& y, const CriterionParams& params) {
  return (y - x).norm() + params.eps2;
}

namespace detail {

/// -sum_i w_i sum_j w_j / (||y_j - T x_i|| + eps2), optionally mass weighted.
/// Per-template-point partial sums are accumulated first and then added in
/// index order, so the result does not depend on how the outer loop is split.
inline double weighted_inverse_sum(const PointCloud& tmpl, const PointCloud& ref, const RigidTransform& t,
                                   double eps2, bool use_masses) {
  double total = 0.0;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    const Vec3 x = t(tmpl.points[i]);
    double partial = 0.0;
    for (std::size_t j = 0; j < ref.size(); ++j) {
      const double w = use_masses ? ref.masses[j] : 1.0;
      partial += w / ((ref.points[j] - x).norm() + eps2);
    }
    total += (use_masses ? tmpl.masses[i] : 1.0) * partial;
  }
  return -total;
}

}  // namespace detail

/// Negative full inverse loss over all template/reference pairs.
inline double nfi_energy(const PointCloud& tmpl, const PointCloud& ref, const RigidTransform& t,
                         const CriterionParams& params) {
  require_non_empty(tmpl, "nfi_energy");
  require_non_empty(ref, "nfi_energy");
  return detail::weighted_inverse_sum(tmpl, ref, t, params.eps2, false);
}

/// Gravitational potential energy -G sum m_i m_j / (||y_j - T x_i|| + eps2).
/// With G = 1 and unit masses this evaluates exactly the same expression as
/// nfi_energy.
inline double potential_energy(const PointCloud& tmpl, const PointCloud& ref, const RigidTransform& t,
                               const CriterionParams& params) {
  require_non_empty(tmpl, "potential_energy");
  require_non_empty(ref, "potential_energy");
  const double g = params.gravitational_constant;
  const double sum = detail::weighted_inverse_sum(tmpl, ref, t, params.eps2, true);
  return g == 1.0 ? sum : g * sum;
}

/// Clouds at or below this size use an exhaustive nearest-neighbour scan for
/// the l2 criterion; larger ones build a SpatialIndex.
inline constexpr std::size_t kExhaustiveNnLimit = 2000;

/// Sum of squared distances from each transformed template point to its
/// nearest reference point.
inline double l2_nn_energy(const PointCloud& tmpl, const PointCloud& ref, const RigidTransform& t,
                           const SpatialIndex* index = nullptr) {
  require_non_empty(tmpl, "l2_nn_energy");
  require_non_empty(ref, "l2_nn_energy");
  std::optional<SpatialIndex> local;
  if (!index && ref.size() > kExhaustiveNnLimit) index = &local.emplace(ref);
  double sum = 0.0;
  for (const auto& p : tmpl.points) {
    const Vec3 x = t(p);
    sum += index ? index->nearest(x).squared_distance : nearest_exhaustive(ref.points, x).squared_distance;
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Error landscapes

enum class SweepKind { TranslateX, TranslateY, TranslateZ, RotateX, RotateY, RotateZ };

/// One sweep axis: `steps` evenly spaced samples over [lo, hi] (inclusive).
/// Rotations are in radians about the template centroid.
struct SweepAxis {
  SweepKind kind = SweepKind::TranslateX;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t steps = 0;

  double value(std::size_t k) const {
    return steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps - 1);
  }

  void validate() const {
    if (steps == 0) throw InvalidArgument("landscape: axis has zero steps");
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) throw InvalidArgument("landscape: axis range is empty");
  }
};

inline SweepKind parse_sweep_kind(const std::string& s) {
  if (s == "tx") return SweepKind::TranslateX;
  if (s == "ty") return SweepKind::TranslateY;
  if (s == "tz") return SweepKind::TranslateZ;
  if (s == "rx") return SweepKind::RotateX;
  if (s == "ry") return SweepKind::RotateY;
  if (s == "rz") return SweepKind::RotateZ;
  throw InvalidArgument("landscape: unknown axis kind '" + s + "' (expected tx|ty|tz|rx|ry|rz)");
}

struct LandscapeSample {
  double axis1 = 0.0;
  std::optional<double> axis2;
  double nfi = 0.0;
  double l2 = 0.0;
};

struct Landscape {
  std::size_t steps1 = 0;
  std::size_t steps2 = 0;  // 0 for a 1D sweep
  std::vector<LandscapeSample> samples;  // axis2 varies fastest
};

/// Rigid motion for one sweep coordinate. Rotations act about `center`.
inline RigidTransform sweep_motion(SweepKind kind, double v, const Vec3& center) {
  switch (kind) {
    case SweepKind::TranslateX: return translation_only(v * Vec3::UnitX());
    case SweepKind::TranslateY: return translation_only(v * Vec3::UnitY());
    case SweepKind::TranslateZ: return translation_only(v * Vec3::UnitZ());
    case SweepKind::RotateX: return rotation_about(rodrigues(v, Vec3::UnitX()), center);
    case SweepKind::RotateY: return rotation_about(rodrigues(v, Vec3::UnitY()), center);
    case SweepKind::RotateZ: return rotation_about(rodrigues(v, Vec3::UnitZ()), center);
  }
  return {};
}

/// Evaluates NFI and l2 on a 1D or 2D grid of template motions. For 2D
/// grids the rotation-type axis (if any) is applied first, then the other.
inline Landscape landscape_sweep(const PointCloud& tmpl, const PointCloud& ref, const CriterionParams& params,
                                 const SweepAxis& axis1, const std::optional<SweepAxis>& axis2 = std::nullopt) {
  require_non_empty(tmpl, "landscape_sweep");
  require_non_empty(ref, "landscape_sweep");
  params.validate();
  axis1.validate();
  if (axis2) axis2->validate();

  const Vec3 center = centroid(tmpl);
  std::optional<SpatialIndex> index;
  if (ref.size() > kExhaustiveNnLimit) index.emplace(ref);

  Landscape out;
  out.steps1 = axis1.steps;
  out.steps2 = axis2 ? axis2->steps : 0;
  out.samples.reserve(axis1.steps * std::max<std::size_t>(out.steps2, 1));
  for (std::size_t a = 0; a < axis1.steps; ++a) {
    const double v1 = axis1.value(a);
    const RigidTransform m1 = sweep_motion(axis1.kind, v1, center);
    for (std::size_t b = 0; b < std::max<std::size_t>(out.steps2, 1); ++b) {
      RigidTransform t = m1;
      LandscapeSample s{v1, std::nullopt, 0.0, 0.0};
      if (axis2) {
        const double v2 = axis2->value(b);
        s.axis2 = v2;
        t = compose(sweep_motion(axis2->kind, v2, center), m1);
      }
      s.nfi = nfi_energy(tmpl, ref, t, params);
      s.l2 = l2_nn_energy(tmpl, ref, t, index ? &*index : nullptr);
      out.samples.push_back(s);
    }
  }
  return out;
}

/// CSV `axis1,axis2,nfi,l2` with 9 significant digits; axis2 empty in 1D.
inline void write_landscape_csv(std::ostream& os, const Landscape& l) {
  os << "axis1,axis2,nfi,l2\n";
  const auto old = os.precision(9);
  for (const auto& s : l.samples) {
    os << s.axis1 << ',';
    if (s.axis2) os << *s.axis2;
    os << ',' << s.nfi << ',' << s.l2 << '\n';
  }
  os.precision(old);
}

/// Indices of strict interior local minima of a sampled 1D curve.
inline std::vector<std::size_t> local_minima(const std::vector<double>& v) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i + 1 < v.size(); ++i)
    if (v[i] < v[i - 1] && v[i] < v[i + 1]) out.push_back(i);
  return out;
}

}  // namespace mpe
