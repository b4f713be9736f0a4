#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "mpe/point_cloud.hpp"

namespace mpe {

struct Neighbor {
  std::size_t index = 0;
  double squared_distance = std::numeric_limits<double>::infinity();

  double distance() const { return std::sqrt(squared_distance); }
};

/// Exact nearest-neighbour queries over a fixed set of points (kd-tree).
///
/// Results are identical to an exhaustive scan: among equidistant candidates
/// the lowest point index wins. The index copies the points, so it stays
/// valid after the source cloud is gone. Queries are const and thread-safe.
class SpatialIndex {
 public:
  explicit SpatialIndex(const PointCloud& reference) : SpatialIndex(reference.points) {}

  explicit SpatialIndex(std::vector<Vec3> points) : points_(std::move(points)) {
    if (points_.empty()) throw InvalidArgument("build_index: reference is empty");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    build(0, order_.size());
  }

  std::size_t size() const noexcept { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  Neighbor nearest(const Vec3& query) const { return nearest_excluding(query, kNone); }

  /// Nearest neighbour ignoring point `excluded` (used for self-spacing).
  Neighbor nearest_excluding(const Vec3& query, std::size_t excluded) const {
    Neighbor best;
    search(0, query, excluded, best);
    return best;
  }

 private:
  static constexpr std::size_t kLeafSize = 8;
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  struct Node {
    std::size_t begin, end;       // range in order_
    std::uint32_t left = 0, right = 0;  // child node ids; 0 = leaf
    int axis = -1;
    double split = 0.0;
  };

  std::uint32_t build(std::size_t begin, std::size_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({begin, end});
    if (end - begin <= kLeafSize) return id;

    Vec3 lo = points_[order_[begin]], hi = lo;
    for (std::size_t k = begin; k < end; ++k) {
      lo = lo.cwiseMin(points_[order_[k]]);
      hi = hi.cwiseMax(points_[order_[k]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) return id;  // all points coincide

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];

    nodes_[id].axis = axis;
    nodes_[id].split = split;
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  static bool better(double d2, std::size_t idx, const Neighbor& best) {
    return d2 < best.squared_distance || (d2 == best.squared_distance && idx < best.index);
  }

  void search(std::uint32_t id, const Vec3& q, std::size_t excluded, Neighbor& best) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::size_t k = node.begin; k < node.end; ++k) {
        const std::size_t idx = order_[k];
        if (idx == excluded) continue;
        const double d2 = (points_[idx] - q).squaredNorm();
        if (better(d2, idx, best)) best = {idx, d2};
      }
      return;
    }
    // Left subtree holds values <= split, right subtree values >= split.
    const double diff = q[node.axis] - node.split;
    const auto near = diff < 0.0 ? node.left : node.right;
    const auto far = diff < 0.0 ? node.right : node.left;
    search(near, q, excluded, best);
    if (diff * diff <= best.squared_distance) search(far, q, excluded, best);
  }

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

inline SpatialIndex build_index(const PointCloud& reference) { return SpatialIndex(reference); }

/// Exhaustive nearest neighbour; lowest index wins ties.
inline Neighbor nearest_exhaustive(const std::vector<Vec3>& points, const Vec3& q) {
  Neighbor best;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d2 = (points[i] - q).squaredNorm();
    if (d2 < best.squared_distance) best = {i, d2};
  }
  return best;
}

}  // namespace mpe
