#pragma once

#include <chrono>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mpe/icp.hpp"
#include "mpe/motion.hpp"
#include "mpe/synth.hpp"

namespace mpe {

enum class OverlapMode {
  Fraction,  // overlap fraction >= tau0
  Count,     // number of overlapping points >= min_overlap_points
};

enum class Pipeline {
  MpeIcp,   // coarse motion control, then trimmed ICP
  MpeOnly,  // coarse motion control only
  IcpOnly,  // trimmed ICP from the initial pose
};

enum class CoarseReference {
  Model,         // coarse stage against the whole merged model
  LastAccepted,  // coarse stage against the last accepted scan, in model frame
};

struct MultiviewConfig {
  double tau0 = 0.3;
  /// Unset: 2 x median nearest-neighbour spacing of the reference.
  std::optional<double> overlap_dist;
  /// Unset: overlap_dist / 2.
  std::optional<double> merge_dedup_dist;
  OverlapMode overlap_mode = OverlapMode::Fraction;
  std::size_t min_overlap_points = 100;
  /// Start each scan's registration from the last accepted scan's transform
  /// instead of identity.
  bool init_from_previous = true;
  CoarseReference coarse_reference = CoarseReference::LastAccepted;
  MpeConfig mpe;
  TrimmedIcpConfig icp;

  void validate() const {
    if (!(tau0 > 0.0 && tau0 <= 1.0)) throw InvalidArgument("multiview: tau0 must be in (0, 1]");
    if (overlap_dist && !(*overlap_dist > 0.0)) throw InvalidArgument("multiview: overlap_dist must be positive");
    if (merge_dedup_dist && !(*merge_dedup_dist >= 0.0))
      throw InvalidArgument("multiview: merge_dedup_dist must be non-negative");
    icp.validate();
  }
};

/// Median distance from each point to its nearest other point.
inline double median_spacing(const PointCloud& cloud, const SpatialIndex& index) {
  if (cloud.size() < 2) return 0.0;
  std::vector<double> d(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) d[i] = index.nearest_excluding(cloud.points[i], i).distance();
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

inline double median_spacing(const PointCloud& cloud) {
  require_non_empty(cloud, "median_spacing");
  return median_spacing(cloud, SpatialIndex(cloud));
}

inline std::size_t overlap_count(const PointCloud& aligned, const SpatialIndex& ref_index, double overlap_dist) {
  const double d2 = overlap_dist * overlap_dist;
  std::size_t n = 0;
  for (const auto& p : aligned.points)
    if (ref_index.nearest(p).squared_distance <= d2) ++n;
  return n;
}

/// Fraction of aligned template points with a reference point within
/// overlap_dist.
inline double overlap_fraction(const PointCloud& aligned, const PointCloud& ref, double overlap_dist) {
  require_non_empty(aligned, "overlap_fraction");
  require_non_empty(ref, "overlap_fraction");
  return static_cast<double>(overlap_count(aligned, SpatialIndex(ref), overlap_dist)) /
         static_cast<double>(aligned.size());
}

/// Union of the clouds. A template point within dedup_dist of a reference
/// point is fused with it (the reference point moves to the pair midpoint,
/// once); any further template points matching that reference point are
/// dropped as duplicates. dedup_dist = 0 gives plain concatenation.
inline PointCloud merge(const PointCloud& ref, const PointCloud& aligned, double dedup_dist) {
  require_non_empty(ref, "merge");
  require_non_empty(aligned, "merge");
  if (!(dedup_dist >= 0.0)) throw InvalidArgument("merge: dedup distance must be non-negative");
  if (dedup_dist == 0.0) return concatenate(ref, aligned);

  const SpatialIndex index(ref);
  const double d2 = dedup_dist * dedup_dist;
  PointCloud out = ref;
  std::vector<bool> fused(ref.size(), false);
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    const Neighbor nb = index.nearest(aligned.points[i]);
    if (nb.squared_distance <= d2) {
      if (!fused[nb.index]) {
        out.points[nb.index] = 0.5 * (ref.points[nb.index] + aligned.points[i]);
        fused[nb.index] = true;
      }
      continue;
    }
    out.push_back(aligned.points[i], aligned.masses[i]);
  }
  return out;
}

struct PairResult {
  RigidTransform transform;
  RigidTransform coarse;
  double overlap = 0.0;          // fraction
  std::size_t overlap_points = 0;
  double overlap_dist = 0.0;
  double coarse_nfi = 0.0;       // on the downsampled clouds
  double refined_nfi = 0.0;
  bool degenerate = false;
  std::optional<MpeResult> mpe;
  std::optional<TrimmedIcpResult> icp;
};

/// Coarse-to-fine registration of one pair plus the overlap test quantities.
/// The coarse stage runs against `coarse_ref` when given (NFI values are
/// then measured on that pair); ICP and overlap always use `ref`.
inline PairResult register_pair(const PointCloud& tmpl, const PointCloud& ref, const MultiviewConfig& config,
                                Pipeline pipeline = Pipeline::MpeIcp,
                                const RigidTransform& init = RigidTransform::identity(),
                                const PointCloud* coarse_ref = nullptr) {
  require_non_empty(tmpl, "register_pair");
  require_non_empty(ref, "register_pair");
  config.validate();
  const PointCloud& cref = coarse_ref ? *coarse_ref : ref;
  require_non_empty(cref, "register_pair");

  PairResult out;
  const SpatialIndex index(ref);
  out.coarse = init;
  if (pipeline != Pipeline::IcpOnly) {
    out.mpe = mpe_align(tmpl, cref, config.mpe, init);
    out.coarse = out.mpe->transform;
  }
  out.transform = out.coarse;
  if (pipeline != Pipeline::MpeOnly) {
    out.icp = trimmed_icp(tmpl, index, out.coarse, config.icp);
    out.transform = out.icp->transform;
    out.degenerate = out.icp->degenerate;
  }

  if (out.mpe) {
    const auto& cfg = out.mpe->config.criterion;
    out.coarse_nfi = out.mpe->final_nfi;
    out.refined_nfi = nfi_energy(out.mpe->template_sample, out.mpe->reference_sample, out.transform, cfg);
  } else {
    const ResolvedMpeConfig rc = resolve(config.mpe, cref);
    const PointCloud ts = random_downsample(tmpl, rc.downsample_count, derive_seed(rc.seed, {1}));
    const PointCloud rs = random_downsample(cref, rc.downsample_count, derive_seed(rc.seed, {2}));
    out.coarse_nfi = nfi_energy(ts, rs, out.coarse, rc.criterion);
    out.refined_nfi = nfi_energy(ts, rs, out.transform, rc.criterion);
  }

  out.overlap_dist = config.overlap_dist.value_or(2.0 * median_spacing(ref, index));
  out.overlap_points = overlap_count(apply_transform(out.transform, tmpl), index, out.overlap_dist);
  out.overlap = static_cast<double>(out.overlap_points) / static_cast<double>(tmpl.size());
  return out;
}

enum class ScanStatus { Accepted, Discarded };

inline const char* to_string(ScanStatus s) { return s == ScanStatus::Accepted ? "accepted" : "discarded"; }

struct ScanRecord {
  std::size_t id = 0;
  ScanStatus status = ScanStatus::Accepted;
  RigidTransform transform;  // scan frame -> model frame
  double overlap = 0.0;
  double nfi = 0.0;
  double coarse_nfi = 0.0;
  double seconds = 0.0;
  std::optional<ErrorMetrics> error;  // vs ground truth, when given
  std::size_t icp_mse_increases = 0;
};

struct MultiviewReport {
  std::vector<ScanRecord> per_scan;
  PointCloud model;
};

/// Sequential multiview reconstruction. Scan 0 seeds the model; each later
/// scan is registered to the current model and merged when its overlap
/// passes the threshold, otherwise discarded. By default the coarse stage
/// starts from the last accepted transform and aligns against the last
/// accepted scan; ICP refines against the full model.
inline MultiviewReport multiview_register(const std::vector<PointCloud>& scans, const MultiviewConfig& config,
                                          const std::vector<RigidTransform>& truth = {}) {
  if (scans.size() < 2) throw InvalidArgument("multiview_register: need at least 2 scans");
  if (!truth.empty() && truth.size() != scans.size())
    throw InvalidArgument("multiview_register: ground truth count does not match scans");
  for (const auto& s : scans) require_non_empty(s, "multiview_register");
  config.validate();

  MultiviewReport report;
  report.model = scans.front();
  ScanRecord first{0, ScanStatus::Accepted, RigidTransform::identity(), 1.0, 0.0, 0.0, 0.0, std::nullopt};
  if (!truth.empty()) first.error = evaluate(first.transform, truth[0], scans[0]);
  report.per_scan.push_back(first);

  RigidTransform prior = RigidTransform::identity();
  PointCloud last = scans.front();
  for (std::size_t k = 1; k < scans.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    const PointCloud* coarse_ref = config.coarse_reference == CoarseReference::LastAccepted ? &last : nullptr;
    const PairResult pair = register_pair(scans[k], report.model, config, Pipeline::MpeIcp, prior, coarse_ref);
    const bool pass = config.overlap_mode == OverlapMode::Fraction ? pair.overlap >= config.tau0
                                                                   : pair.overlap_points >= config.min_overlap_points;
    ScanRecord rec{k, pass ? ScanStatus::Accepted : ScanStatus::Discarded, pair.transform, pair.overlap,
                   pair.refined_nfi, pair.coarse_nfi, 0.0, std::nullopt};
    if (pass) {
      const double dedup = config.merge_dedup_dist.value_or(pair.overlap_dist / 2.0);
      PointCloud aligned = apply_transform(pair.transform, scans[k]);
      report.model = merge(report.model, aligned, dedup);
      if (config.init_from_previous) prior = pair.transform;
      last = std::move(aligned);
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!truth.empty()) rec.error = evaluate(pair.transform, truth[k], scans[k]);
    if (pair.icp) rec.icp_mse_increases = trace_increases(pair.icp->mse_trace);
    report.per_scan.push_back(rec);
  }
  return report;
}

/// One line per scan: `id status overlap nfi seconds [rot_err_deg trans_err]`.
/// Timing is written as `-` when `with_timing` is false.
inline void write_multiview_report(std::ostream& os, const MultiviewReport& report, bool with_timing = true) {
  const auto old = os.precision(9);
  os << "# id status overlap nfi seconds rot_err_deg trans_err\n";
  for (const auto& r : report.per_scan) {
    os << r.id << ' ' << to_string(r.status) << ' ' << r.overlap << ' ' << r.nfi << ' ';
    if (with_timing)
      os << r.seconds;
    else
      os << '-';
    if (r.error) os << ' ' << r.error->rotation_error_deg << ' ' << r.error->translation_error;
    os << '\n';
  }
  os << "# model_points " << report.model.size() << '\n';
  os.precision(old);
}

}  // namespace mpe
