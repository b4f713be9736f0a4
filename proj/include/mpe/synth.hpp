#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "mpe/point_cloud.hpp"
#include "mpe/random.hpp"

namespace mpe {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Random pose and corruption applied to a synthetic copy.
struct PerturbationSpec {
  double gaussian_sigma = 0.0;
  std::size_t outlier_count = 0;
  Interval rotation_angle_range{0.0, std::numbers::pi / 2.0};
  /// Per-axis translation bounds. Unset (both zero) means +-0.5 x the model's
  /// bounding-box diagonal when used by the sweep harness.
  Interval translation_range{0.0, 0.0};
  std::uint64_t seed = 42;
  /// Corrupt the template copy instead of the posed reference copy.
  bool perturb_template = false;

  void validate() const {
    if (!(gaussian_sigma >= 0.0)) throw InvalidArgument("perturbation: gaussian_sigma must be >= 0");
    if (!(rotation_angle_range.lo <= rotation_angle_range.hi)) throw InvalidArgument("perturbation: rotation range inverted");
    if (!(translation_range.lo <= translation_range.hi)) throw InvalidArgument("perturbation: translation range inverted");
  }
};

/// Rotation angle uniform in the range about a uniformly random axis;
/// translation uniform per axis.
inline RigidTransform random_pose(const PerturbationSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, {0x9053}));
  std::uniform_real_distribution<double> angle(spec.rotation_angle_range.lo, spec.rotation_angle_range.hi);
  std::uniform_real_distribution<double> shift(spec.translation_range.lo, spec.translation_range.hi);
  const Vec3 axis = random_unit_vector<Vec3>(rng);
  const double a = spec.rotation_angle_range.lo == spec.rotation_angle_range.hi ? spec.rotation_angle_range.lo : angle(rng);
  Vec3 t = Vec3::Zero();
  for (int k = 0; k < 3; ++k)
    t[k] = spec.translation_range.lo == spec.translation_range.hi ? spec.translation_range.lo : shift(rng);
  return {rodrigues(a, axis), t};
}

/// Independent N(0, sigma^2) displacement on every coordinate.
inline PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidArgument("add_gaussian_noise: sigma must be >= 0");
  if (sigma == 0.0) return cloud;
  Rng rng(derive_seed(seed, {0x6a55}));
  std::normal_distribution<double> n(0.0, sigma);
  PointCloud out = cloud;
  for (auto& p : out.points) p += Vec3(n(rng), n(rng), n(rng));
  return out;
}

/// Axis-aligned cube around the cloud: side = largest bounding-box extent,
/// centered on the bounding-box center.
inline BoundingBox enclosing_cube(const PointCloud& cloud) {
  const BoundingBox b = bounding_box(cloud);
  const double half = 0.5 * b.extent().maxCoeff();
  const Vec3 c = b.center();
  return {c - Vec3::Constant(half), c + Vec3::Constant(half)};
}

/// Appends `count` unit-mass points uniform in enclosing_cube(cloud).
inline PointCloud add_uniform_outliers(const PointCloud& cloud, std::size_t count, std::uint64_t seed) {
  if (count == 0) return cloud;
  const BoundingBox cube = enclosing_cube(cloud);
  Rng rng(derive_seed(seed, {0x0017}));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointCloud out = cloud;
  out.points.reserve(cloud.size() + count);
  out.masses.reserve(cloud.size() + count);
  for (std::size_t k = 0; k < count; ++k) {
    const Vec3 f(u(rng), u(rng), u(rng));
    out.push_back(cube.min + f.cwiseProduct(cube.extent()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Error metrics

struct ErrorMetrics {
  double rotation_error_deg = 0.0;
  double translation_error = 0.0;
  double rmse = 0.0;
};

/// Geodesic angle of R_gt R_est^-1, degrees.
inline double rotation_error(const Mat3& r_gt, const Mat3& r_est) {
  const Mat3 d = r_gt * r_est.transpose();
  const double c = std::clamp((d.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

inline double translation_error(const Vec3& t_gt, const Vec3& t_est) { return (t_gt - t_est).norm(); }

/// Root mean squared distance between index-paired points.
inline double rmse(const PointCloud& aligned, const PointCloud& ground_truth_aligned) {
  if (aligned.size() != ground_truth_aligned.size()) throw InvalidArgument("rmse: point counts differ");
  if (aligned.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < aligned.size(); ++i) s += (aligned.points[i] - ground_truth_aligned.points[i]).squaredNorm();
  return std::sqrt(s / static_cast<double>(aligned.size()));
}

inline ErrorMetrics evaluate(const RigidTransform& estimate, const RigidTransform& truth, const PointCloud& model) {
  return {rotation_error(truth.rotation, estimate.rotation), translation_error(truth.translation, estimate.translation),
          rmse(apply_transform(estimate, model), apply_transform(truth, model))};
}

// ---------------------------------------------------------------------------
// Procedural fixtures

/// Cambered airfoil (NACA 4-digit style) half-thickness and camber line,
/// chord-normalized x in [0, 1].
inline Eigen::Vector2d airfoil_point(double x, bool upper, double thickness = 0.12, double camber = 0.04,
                                     double camber_pos = 0.4) {
  const double yt = 5.0 * thickness *
                    (0.2969 * std::sqrt(x) - 0.1260 * x - 0.3516 * x * x + 0.2843 * x * x * x - 0.1015 * x * x * x * x);
  const double yc = x < camber_pos ? camber / (camber_pos * camber_pos) * (2.0 * camber_pos * x - x * x)
                                   : camber / ((1 - camber_pos) * (1 - camber_pos)) *
                                         ((1.0 - 2.0 * camber_pos) + 2.0 * camber_pos * x - x * x);
  return {x, yc + (upper ? yt : -yt)};
}

/// Twisted, tapered extruded airfoil ("blade"): span 2 along z, chord 1 at
/// the root tapering to 0.6, 35 degrees of twist, closed by a flat tip cap
/// at z = 1 (about 8% of the points). Points are drawn at random chord/span
/// positions on both surfaces and inside the tip section.
inline PointCloud make_blade(std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0xb1ade}));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointCloud out;
  out.points.reserve(n);
  out.masses.reserve(n);
  const double twist = 35.0 * std::numbers::pi / 180.0;
  for (std::size_t k = 0; k < n; ++k) {
    const bool tip = u(rng) < 0.08;
    const double s = tip ? 1.0 : u(rng);
    const double x = 0.5 * (1.0 - std::cos(std::numbers::pi * u(rng)));
    const bool upper = u(rng) < 0.5;
    const double chord = 1.0 - 0.4 * s;
    Eigen::Vector2d a = airfoil_point(x, upper);
    if (tip) {
      const Eigen::Vector2d lo = airfoil_point(x, false), hi = airfoil_point(x, true);
      a = lo + u(rng) * (hi - lo);
    }
    const double px = (a.x() - 0.3) * chord, py = a.y() * chord;
    const double c = std::cos(twist * s), sn = std::sin(twist * s);
    out.push_back({c * px - sn * py, sn * px + c * py, 2.0 * s - 1.0});
  }
  return out;
}

/// Single airfoil cross-section in the z = 0 plane.
inline PointCloud make_blade_section(std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x5ec7}));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointCloud out;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = 0.5 * (1.0 - std::cos(std::numbers::pi * u(rng)));
    const Eigen::Vector2d a = airfoil_point(x, u(rng) < 0.5);
    out.push_back({a.x() - 0.3, a.y(), 0.0});
  }
  return out;
}

/// Cap of the unit sphere around +z with polar angle <= max_polar.
inline PointCloud make_sphere_cap(std::size_t n, double max_polar, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0xca9}));
  std::uniform_real_distribution<double> zc(std::cos(max_polar), 1.0), phi(0.0, 2.0 * std::numbers::pi);
  PointCloud out;
  for (std::size_t k = 0; k < n; ++k) {
    const double z = zc(rng), p = phi(rng), r = std::sqrt(std::max(0.0, 1.0 - z * z));
    out.push_back({r * std::cos(p), r * std::sin(p), z});
  }
  return out;
}

/// Square patch [-side/2, side/2]^2 in the z = 0 plane.
inline PointCloud make_plane(std::size_t n, double side, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x91a}));
  std::uniform_real_distribution<double> u(-0.5 * side, 0.5 * side);
  PointCloud out;
  for (std::size_t k = 0; k < n; ++k) out.push_back({u(rng), u(rng), 0.0});
  return out;
}

/// Cylindrical arc surface, radius 1, height `height`, polar angle in
/// [angle_lo, angle_hi], with a sinusoidal ripple along the arc so that
/// sliding along it is not a symmetry.
inline PointCloud make_crescent(std::size_t n, double angle_lo, double angle_hi, double height, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0xc2e5}));
  std::uniform_real_distribution<double> a(angle_lo, angle_hi), h(-0.5 * height, 0.5 * height);
  PointCloud out;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = a(rng), z = h(rng);
    const double r = 1.0 + 0.08 * std::sin(3.0 * t) * (1.0 + z);
    out.push_back({r * std::cos(t), r * std::sin(t), z});
  }
  return out;
}

/// Radius of the closed asymmetric "blob" along unit direction d.
inline double blob_radius(const Vec3& d) {
  return 1.0 + 0.25 * d.x() * d.y() + 0.2 * std::sin(3.0 * d.z() + 0.5) * d.x() + 0.15 * d.y() * d.y() * d.z();
}

/// Closed, bumpy, anisotropic surface (no rotational symmetry). Points are
/// sampled by direction, scaled per axis by (1, 0.8, 0.6).
inline PointCloud make_blob(std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0xb10b}));
  PointCloud out;
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3 d = random_unit_vector<Vec3>(rng);
    out.push_back((blob_radius(d) * d).cwiseProduct(Vec3(1.0, 0.8, 0.6)));
  }
  return out;
}

/// 1D line data for landscape plots: template {1,2,3,4} on the x axis,
/// reference = template + 5 plus one outlier at x = 8.5.
struct LineFixture {
  PointCloud tmpl;
  PointCloud reference;
  double optimum = 5.0;
};

inline LineFixture line_fixture() {
  LineFixture f;
  for (int k = 1; k <= 4; ++k) {
    f.tmpl.push_back(Vec3(k, 0, 0));
    f.reference.push_back(Vec3(k + f.optimum, 0, 0));
  }
  f.reference.push_back(Vec3(8.5, 0, 0));
  return f;
}

/// Turntable scan simulation. The object is sampled once (`object_points`
/// points); view k sees it rotated by k * step about z, keeps the points
/// whose direction from the origin faces the +x scanner
/// (x/|p| > -visibility_slack) and is expressed in the scanner frame.
/// Noise is drawn per view. `truth[k]` maps view k back to the frame of view 0.
struct TurntableScans {
  std::vector<PointCloud> views;
  std::vector<RigidTransform> truth;
};

inline TurntableScans turntable_views(std::size_t views, double step_rad, std::size_t object_points,
                                      double noise_sigma, std::uint64_t seed, double visibility_slack = 0.1) {
  TurntableScans out;
  const PointCloud full = make_blob(object_points, seed);
  for (std::size_t k = 0; k < views; ++k) {
    const Mat3 r = rodrigues(static_cast<double>(k) * step_rad, Vec3::UnitZ());
    PointCloud view;
    for (const auto& p : full.points) {
      const Vec3 q = r * p;
      if (q.x() / q.norm() > -visibility_slack) view.push_back(q);
    }
    out.views.push_back(add_gaussian_noise(view, noise_sigma, derive_seed(seed, {k, 1})));
    out.truth.push_back({r.transpose(), Vec3::Zero()});
  }
  return out;
}

}  // namespace mpe
