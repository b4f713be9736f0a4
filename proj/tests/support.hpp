#pragma once

#include <random>
#include <vector>

#include "mpe/mpe.hpp"

namespace mpe::test {

inline PointCloud random_cloud(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.push_back(Vec3(u(rng), u(rng), u(rng)));
  return c;
}

inline RigidTransform random_transform(Rng& rng, double max_angle, double max_shift) {
  std::uniform_real_distribution<double> a(0.0, max_angle), t(-max_shift, max_shift);
  return {rodrigues(a(rng), random_unit_vector<Vec3>(rng)), Vec3(t(rng), t(rng), t(rng))};
}

/// Number of strict increases in an MSE trace.
inline std::size_t increases(const std::vector<double>& trace) {
  std::size_t n = 0;
  for (std::size_t k = 1; k < trace.size(); ++k)
    if (trace[k] > trace[k - 1]) ++n;
  return n;
}

}  // namespace mpe::test
