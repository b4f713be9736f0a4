#pragma once

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <vector>

#include "mpe/gravity.hpp"
#include "mpe/random.hpp"

namespace mpe {

/// Optimizer constants for the coarse alignment. Unset optionals are
/// resolved against the reference cloud's bounding-box diagonal:
/// eps2 = eps2_scale diag, initial_step = 0.25 diag, eps_t = 1e-4 diag.
struct MpeConfig {
  std::optional<double> eps2;
  double eps2_scale = 0.04;
  double gravitational_constant = 1.0;
  double initial_theta = std::numbers::pi / 4.0;
  std::optional<double> initial_step;
  double eps_R = 1e-3;
  std::optional<double> eps_t;
  std::size_t downsample_count = 500;
  std::size_t max_iterations = 500;
  std::uint64_t seed = 42;
  /// Halve the translation stride on its own flag instead of only inside a
  /// rotation mutation.
  bool independent_halving = false;
  /// Keep iterating until both strides are below threshold (default stops
  /// as soon as either one is).
  bool exit_on_both = false;
  TranslationForce translation_force = TranslationForce::Axial;
  /// Also restart from the result turned half a turn about each principal
  /// axis of the template sample; keep the run with the lowest NFI on a
  /// second sample of 4 x downsample_count points.
  bool flip_restarts = false;
};

/// Un-nested halving, both-stride exit, net-force translation, a tighter
/// softening with a small first rotation stride, and half-turn restarts.
inline MpeConfig robust_mpe_config() {
  MpeConfig c;
  c.flip_restarts = true;
  c.eps2_scale = 0.02;
  c.initial_theta = 0.2;
  c.independent_halving = true;
  c.exit_on_both = true;
  c.translation_force = TranslationForce::Net;
  return c;
}

/// MpeConfig with every scale-relative field fixed to a number.
struct ResolvedMpeConfig {
  CriterionParams criterion;
  double initial_theta = 0.0;
  double initial_step = 0.0;
  double eps_R = 0.0;
  double eps_t = 0.0;
  std::size_t downsample_count = 0;
  std::size_t max_iterations = 0;
  std::uint64_t seed = 0;
  bool independent_halving = false;
  bool exit_on_both = false;
  TranslationForce translation_force = TranslationForce::Axial;

  void validate() const {
    criterion.validate();
    if (!(eps_R > 0.0 && eps_R < initial_theta)) throw InvalidArgument("mpe: require 0 < eps_R < initial_theta");
    if (!(eps_t > 0.0 && eps_t < initial_step)) throw InvalidArgument("mpe: require 0 < eps_t < initial_step");
    if (downsample_count < 3) throw InvalidArgument("mpe: downsample_count must be >= 3");
    if (max_iterations < 1) throw InvalidArgument("mpe: max_iterations must be >= 1");
  }
};

inline ResolvedMpeConfig resolve(const MpeConfig& c, const PointCloud& reference) {
  double diag = bounding_box(reference).diagonal();
  if (!(diag > 0.0)) diag = 1.0;
  ResolvedMpeConfig r;
  r.criterion = {c.eps2.value_or(c.eps2_scale * diag), c.gravitational_constant};
  r.initial_theta = c.initial_theta;
  r.initial_step = c.initial_step.value_or(0.25 * diag);
  r.eps_R = c.eps_R;
  r.eps_t = c.eps_t.value_or(1e-4 * diag);
  r.downsample_count = c.downsample_count;
  r.max_iterations = c.max_iterations;
  r.seed = c.seed;
  r.independent_halving = c.independent_halving;
  r.exit_on_both = c.exit_on_both;
  r.translation_force = c.translation_force;
  r.validate();
  return r;
}

struct Flags {
  double rotation = 0.0;     // F_R
  double translation = 0.0;  // F_t
};

/// F_R = n_p . n_p(last), F_t = v_t . v_t(last). An unset previous value
/// yields 0 (no mutation).
inline Flags flags(const Vec3& n_p, const std::optional<Vec3>& n_p_last, const Vec3& v_t,
                   const std::optional<Vec3>& v_t_last) {
  Flags f;
  if (n_p_last) f.rotation = std::clamp(n_p.dot(*n_p_last), -1.0, 1.0);
  if (v_t_last) f.translation = std::clamp(v_t.dot(*v_t_last), -1.0, 1.0);
  return f;
}

struct TraceRecord {
  std::size_t iter = 0;
  double theta = 0.0;
  double step = 0.0;
  double flag_rotation = 0.0;
  double flag_translation = 0.0;
  double nfi = 0.0;  // at the pose the directions were computed from
};

struct MotionState {
  double theta = 0.0;
  double step = 0.0;
  std::optional<Vec3> n_p_last;
  std::optional<Vec3> v_t_last;
  RigidTransform accumulated;
  std::size_t iteration = 0;
  std::size_t equilibrium_count = 0;
  std::size_t halvings_theta = 0;
  std::size_t halvings_step = 0;
  std::size_t perturbations = 0;
  std::vector<TraceRecord> trace;
  Rng rng;

  static MotionState initial(const ResolvedMpeConfig& c) {
    MotionState s;
    s.theta = c.initial_theta;
    s.step = c.initial_step;
    s.rng.seed(derive_seed(c.seed, {0x5eed}));
    return s;
  }

  bool done(const ResolvedMpeConfig& c) const {
    if (iteration >= c.max_iterations) return true;
    const bool rot_small = theta <= c.eps_R;
    const bool step_small = step <= c.eps_t;
    return c.exit_on_both ? (rot_small && step_small) : (rot_small || step_small);
  }
};

/// Consecutive all-degenerate iterations before the equilibrium escape.
inline constexpr std::size_t kEquilibriumPatience = 3;
/// Accumulated compositions between re-orthonormalizations.
inline constexpr std::size_t kOrthonormalizeEvery = 100;

/// One iteration of motion control: directions at the current pose, flags,
/// stride halving, then a rotation about the template centroid by theta and
/// a translation by step.
inline MotionState mpe_step(MotionState state, const PointCloud& tmpl, const PointCloud& ref,
                            const ResolvedMpeConfig& cfg) {
  require_non_empty(tmpl, "mpe_step");
  require_non_empty(ref, "mpe_step");
  const PointCloud moved = apply_transform(state.accumulated, tmpl);
  const Vec3 center = centroid(moved);
  const MotionDirections dir =
      directions_from_field(compute_force_field(moved, ref, cfg.criterion, center), cfg.translation_force);

  const Flags f = flags(dir.rotation_axis, dir.degenerate_rotation ? std::nullopt : state.n_p_last,
                        dir.translation_dir, dir.degenerate_translation ? std::nullopt : state.v_t_last);

  if (cfg.independent_halving) {
    if (f.rotation < 0.0) state.theta /= 2.0, ++state.halvings_theta;
    if (f.translation < 0.0) state.step /= 2.0, ++state.halvings_step;
  } else if (f.rotation < 0.0) {
    state.theta /= 2.0, ++state.halvings_theta;
    if (f.translation < 0.0) state.step /= 2.0, ++state.halvings_step;
  }

  RigidTransform motion;
  if (dir.degenerate_rotation && dir.degenerate_translation) {
    if (++state.equilibrium_count >= kEquilibriumPatience) {
      state.theta /= 2.0, ++state.halvings_theta;
      state.step /= 2.0, ++state.halvings_step;
      const Vec3 axis = random_unit_vector<Vec3>(state.rng);
      motion = rotation_about(rodrigues(state.theta / 10.0, axis), center);
      state.equilibrium_count = 0;
      ++state.perturbations;
    }
  } else {
    state.equilibrium_count = 0;
    if (!dir.degenerate_rotation) motion = rotation_about(rodrigues(state.theta, dir.rotation_axis), center);
    if (!dir.degenerate_translation) motion = compose(translation_only(state.step * dir.translation_dir), motion);
  }

  state.accumulated = compose(motion, state.accumulated);
  if (!dir.degenerate_rotation) state.n_p_last = dir.rotation_axis;
  if (!dir.degenerate_translation) state.v_t_last = dir.translation_dir;
  ++state.iteration;
  if (state.iteration % kOrthonormalizeEvery == 0) state.accumulated = orthonormalized(state.accumulated);

  state.trace.push_back({state.iteration, state.theta, state.step, f.rotation, f.translation, dir.nfi});
  return state;
}

/// Uniform sample of `count` points without replacement, original order
/// kept. Returns the cloud unchanged when count >= size.
inline PointCloud random_downsample(const PointCloud& cloud, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw InvalidArgument("random_downsample: count must be >= 1");
  if (count >= cloud.size()) return cloud;
  std::vector<std::size_t> all(cloud.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> picked;
  picked.reserve(count);
  Rng rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), count, rng);
  PointCloud out;
  out.points.reserve(count);
  out.masses.reserve(count);
  for (const auto i : picked) out.push_back(cloud.points[i], cloud.masses[i]);
  return out;
}

enum class Termination { Thresholds, MaxIterations };

struct MpeResult {
  RigidTransform transform;  // maps full-resolution template coordinates
  std::vector<TraceRecord> trace;
  Termination termination = Termination::Thresholds;
  ResolvedMpeConfig config;
  double initial_nfi = 0.0;  // on the downsampled clouds
  double final_nfi = 0.0;
  std::size_t start = 0;  // 0: from init, k: half-turn restart about principal axis k
  PointCloud template_sample;
  PointCloud reference_sample;
};

/// Coarse alignment: downsample both clouds, then step until the stride
/// thresholds (or the iteration cap) stop the loop.
inline MpeResult mpe_align(const PointCloud& tmpl, const PointCloud& ref, const MpeConfig& config,
                           const RigidTransform& init = RigidTransform::identity()) {
  require_non_empty(tmpl, "mpe_align");
  require_non_empty(ref, "mpe_align");
  const ResolvedMpeConfig cfg = resolve(config, ref);

  MpeResult result;
  result.config = cfg;
  result.template_sample = random_downsample(tmpl, cfg.downsample_count, derive_seed(cfg.seed, {1}));
  result.reference_sample = random_downsample(ref, cfg.downsample_count, derive_seed(cfg.seed, {2}));

  auto run = [&](const RigidTransform& start) {
    MotionState state = MotionState::initial(cfg);
    state.accumulated = start;
    while (!state.done(cfg)) state = mpe_step(std::move(state), result.template_sample, result.reference_sample, cfg);
    return state;
  };
  auto finish = [&](MotionState state, const RigidTransform& start, std::size_t index) {
    MpeResult r;
    r.transform = orthonormalized(state.accumulated);
    r.trace = std::move(state.trace);
    const bool rot_small = state.theta <= cfg.eps_R;
    const bool step_small = state.step <= cfg.eps_t;
    const bool converged = cfg.exit_on_both ? (rot_small && step_small) : (rot_small || step_small);
    r.termination = converged ? Termination::Thresholds : Termination::MaxIterations;
    r.initial_nfi = r.trace.empty() ? nfi_energy(result.template_sample, result.reference_sample, start, cfg.criterion)
                                    : r.trace.front().nfi;
    r.final_nfi = nfi_energy(result.template_sample, result.reference_sample, r.transform, cfg.criterion);
    r.start = index;
    return r;
  };

  MpeResult best = finish(run(init), init, 0);
  if (config.flip_restarts && result.template_sample.size() >= 3) {
    const Vec3 c = centroid(result.template_sample);
    Mat3 cov = Mat3::Zero();
    for (const auto& p : result.template_sample.points) cov += (p - c) * (p - c).transpose();
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    // candidates are scored on a larger, independent sample
    const std::size_t n = 4 * cfg.downsample_count;
    const PointCloud ts = random_downsample(tmpl, n, derive_seed(cfg.seed, {3}));
    const PointCloud rs = random_downsample(ref, n, derive_seed(cfg.seed, {4}));
    double best_score = nfi_energy(ts, rs, best.transform, cfg.criterion);
    const RigidTransform first = best.transform;
    for (int k = 0; k < 3; ++k) {
      const RigidTransform start = compose(first, rotation_about(rodrigues(std::numbers::pi, eig.eigenvectors().col(k)), c));
      MpeResult r = finish(run(start), start, static_cast<std::size_t>(k) + 1);
      const double score = nfi_energy(ts, rs, r.transform, cfg.criterion);
      if (score < best_score) {
        best_score = score;
        best = std::move(r);
      }
    }
  }
  best.config = cfg;
  best.template_sample = std::move(result.template_sample);
  best.reference_sample = std::move(result.reference_sample);
  return best;
}

/// CSV `iter,theta,step,F_R,F_t,nfi_energy`.
inline void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace) {
  os << "iter,theta,step,F_R,F_t,nfi_energy\n";
  const auto old = os.precision(9);
  for (const auto& r : trace)
    os << r.iter << ',' << r.theta << ',' << r.step << ',' << r.flag_rotation << ',' << r.flag_translation << ','
       << r.nfi << '\n';
  os.precision(old);
}

}  // namespace mpe
