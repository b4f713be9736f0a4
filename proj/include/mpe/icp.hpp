#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "mpe/point_cloud.hpp"
#include "mpe/spatial_index.hpp"

namespace mpe {

struct Correspondence {
  Vec3 source;
  Vec3 target;
};

/// Closed-form weighted least-squares rigid fit (cross-covariance SVD with
/// reflection correction): minimizes sum w_k ||target_k - (R source_k + t)||^2.
/// Throws DegenerateConfiguration for fewer than 3 pairs or a cross
/// covariance of rank < 2 (collinear or coincident points).
inline RigidTransform rigid_fit(std::span<const Correspondence> pairs, std::span<const double> weights = {}) {
  if (pairs.size() < 3) throw DegenerateConfiguration("rigid_fit: need at least 3 correspondences");
  if (!weights.empty() && weights.size() != pairs.size())
    throw InvalidArgument("rigid_fit: weights length does not match correspondences");

  auto w = [&](std::size_t k) { return weights.empty() ? 1.0 : weights[k]; };
  double wsum = 0.0;
  Vec3 src_mean = Vec3::Zero(), dst_mean = Vec3::Zero();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (!(w(k) >= 0.0)) throw InvalidArgument("rigid_fit: negative weight");
    wsum += w(k);
    src_mean += w(k) * pairs[k].source;
    dst_mean += w(k) * pairs[k].target;
  }
  if (!(wsum > 0.0)) throw DegenerateConfiguration("rigid_fit: weights sum to zero");
  src_mean /= wsum;
  dst_mean /= wsum;

  Mat3 cov = Mat3::Zero();
  for (std::size_t k = 0; k < pairs.size(); ++k)
    cov += w(k) * (pairs[k].target - dst_mean) * (pairs[k].source - src_mean).transpose();

  const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0))
    throw DegenerateConfiguration("rigid_fit: rank-deficient covariance (collinear correspondences)");

  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Mat3 r = svd.matrixU() * d * svd.matrixV().transpose();
  return {r, dst_mean - r * src_mean};
}

/// Weighted sum of squared residuals of `t` on `pairs`.
inline double weighted_sse(std::span<const Correspondence> pairs, const RigidTransform& t,
                           std::span<const double> weights = {}) {
  double sse = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k)
    sse += (weights.empty() ? 1.0 : weights[k]) * (pairs[k].target - t(pairs[k].source)).squaredNorm();
  return sse;
}

struct TrimmedIcpConfig {
  double overlap_ratio = 0.8;
  std::size_t max_iterations = 100;
  double mse_rel_tol = 1e-8;

  void validate() const {
    if (!(overlap_ratio > 0.0 && overlap_ratio <= 1.0)) throw InvalidArgument("icp: overlap_ratio must be in (0, 1]");
    if (max_iterations < 1) throw InvalidArgument("icp: max_iterations must be >= 1");
    if (!(mse_rel_tol > 0.0)) throw InvalidArgument("icp: mse_rel_tol must be positive");
  }
};

struct TrimmedIcpResult {
  RigidTransform transform;
  double trimmed_mse = 0.0;
  std::vector<double> mse_trace;  // trimmed MSE at each evaluated pose
  std::size_t iterations = 0;
  bool converged = false;
  bool degenerate = false;
  /// An evaluated MSE above the previous one (floating-point floor) ends the
  /// run with the previous, better pose; its relative size is kept here.
  double rejected_increase = 0.0;
};

/// Number of strict increases in an MSE trace.
inline std::size_t trace_increases(const std::vector<double>& trace) {
  std::size_t n = 0;
  for (std::size_t k = 1; k < trace.size(); ++k)
    if (trace[k] > trace[k - 1]) ++n;
  return n;
}

/// Number of correspondences kept: ceil(ratio * n), at least 1.
inline std::size_t trim_count(double overlap_ratio, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::ceil(overlap_ratio * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

namespace detail {

struct Residual {
  double squared = 0.0;
  std::size_t source = 0;
  std::size_t target = 0;
};

/// Nearest-neighbour residuals at pose `t`, then the `keep` smallest
/// (ties by source index) in ascending order.
inline std::vector<Residual> trimmed_residuals(const PointCloud& tmpl, const SpatialIndex& index,
                                               const RigidTransform& t, std::size_t keep) {
  std::vector<Residual> res(tmpl.size());
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    const Neighbor nb = index.nearest(t(tmpl.points[i]));
    res[i] = {nb.squared_distance, i, nb.index};
  }
  auto less = [](const Residual& a, const Residual& b) {
    return a.squared < b.squared || (a.squared == b.squared && a.source < b.source);
  };
  std::partial_sort(res.begin(), res.begin() + static_cast<std::ptrdiff_t>(keep), res.end(), less);
  res.resize(keep);
  return res;
}

inline double mean_squared(const std::vector<Residual>& res) {
  double s = 0.0;
  for (const auto& r : res) s += r.squared;
  return s / static_cast<double>(res.size());
}

}  // namespace detail

/// Trimmed ICP from `init`: match to nearest reference points, keep the
/// lowest overlap_ratio fraction of squared residuals, refit, repeat until
/// the relative change of the trimmed MSE drops below mse_rel_tol.
inline TrimmedIcpResult trimmed_icp(const PointCloud& tmpl, const SpatialIndex& index, const RigidTransform& init,
                                    const TrimmedIcpConfig& config) {
  require_non_empty(tmpl, "trimmed_icp");
  config.validate();
  const std::size_t keep = trim_count(config.overlap_ratio, tmpl.size());

  TrimmedIcpResult out;
  RigidTransform current = init;
  auto res = detail::trimmed_residuals(tmpl, index, current, keep);
  double mse = detail::mean_squared(res);
  out.mse_trace.push_back(mse);

  std::vector<Correspondence> pairs;
  pairs.reserve(keep);
  while (out.iterations < config.max_iterations) {
    if (mse == 0.0) {
      out.converged = true;
      break;
    }
    pairs.clear();
    for (const auto& r : res) pairs.push_back({current(tmpl.points[r.source]), index.point(r.target)});
    RigidTransform delta;
    try {
      delta = rigid_fit(pairs);
    } catch (const DegenerateConfiguration&) {
      out.degenerate = true;
      break;
    }
    const RigidTransform next = orthonormalized(compose(delta, current));
    auto next_res = detail::trimmed_residuals(tmpl, index, next, keep);
    const double next_mse = detail::mean_squared(next_res);
    ++out.iterations;

    if (next_mse > mse) {
      out.rejected_increase = (next_mse - mse) / mse;
      out.converged = true;
      break;
    }
    const double rel = (mse - next_mse) / mse;
    current = next;
    res = std::move(next_res);
    mse = next_mse;
    out.mse_trace.push_back(mse);
    if (rel < config.mse_rel_tol) {
      out.converged = true;
      break;
    }
  }
  out.transform = current;
  out.trimmed_mse = mse;
  return out;
}

inline TrimmedIcpResult trimmed_icp(const PointCloud& tmpl, const PointCloud& ref, const RigidTransform& init,
                                    const TrimmedIcpConfig& config) {
  require_non_empty(ref, "trimmed_icp");
  return trimmed_icp(tmpl, SpatialIndex(ref), init, config);
}

}  // namespace mpe
