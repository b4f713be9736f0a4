#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mpe/error.hpp"
#include "mpe/geom.hpp"

namespace mpe {

/// Ordered points with one positive mass per point (default 1).
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<double> masses;

  PointCloud() = default;

  explicit PointCloud(std::vector<Vec3> pts) : points(std::move(pts)), masses(points.size(), 1.0) {}

  PointCloud(std::vector<Vec3> pts, std::vector<double> m) : points(std::move(pts)), masses(std::move(m)) {
    validate();
  }

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }

  void push_back(const Vec3& p, double mass = 1.0) {
    points.push_back(p);
    masses.push_back(mass);
  }

  /// Throws InvalidArgument on length mismatch, non-positive mass or
  /// non-finite coordinates.
  void validate() const {
    if (points.size() != masses.size()) throw InvalidArgument("point cloud: points/masses length mismatch");
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!points[i].allFinite()) throw InvalidArgument("point cloud: non-finite coordinate at index " + std::to_string(i));
      if (!(masses[i] > 0.0)) throw InvalidArgument("point cloud: non-positive mass at index " + std::to_string(i));
    }
  }
};

inline void require_non_empty(const PointCloud& c, const char* what) {
  if (c.empty()) throw InvalidArgument(std::string(what) + ": point cloud is empty");
}

struct BoundingBox {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  double diagonal() const { return extent().norm(); }
};

inline BoundingBox bounding_box(const PointCloud& c) {
  require_non_empty(c, "bounding_box");
  BoundingBox b{c.points.front(), c.points.front()};
  for (const auto& p : c.points) {
    b.min = b.min.cwiseMin(p);
    b.max = b.max.cwiseMax(p);
  }
  return b;
}

/// Mass-weighted centroid.
inline Vec3 centroid(const PointCloud& c) {
  require_non_empty(c, "centroid");
  Vec3 sum = Vec3::Zero();
  double mass = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    sum += c.masses[i] * c.points[i];
    mass += c.masses[i];
  }
  return sum / mass;
}

inline PointCloud apply_transform(const RigidTransform& t, const PointCloud& cloud) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(t(p));
  out.masses = cloud.masses;
  return out;
}

inline PointCloud concatenate(const PointCloud& a, const PointCloud& b) {
  PointCloud out = a;
  out.points.insert(out.points.end(), b.points.begin(), b.points.end());
  out.masses.insert(out.masses.end(), b.masses.begin(), b.masses.end());
  return out;
}

}  // namespace mpe
