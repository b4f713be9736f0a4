#pragma once

#include <chrono>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "mpe/multiview.hpp"

namespace mpe {

enum class SweepAxisKind { Noise, Outliers, SampleRatio };

inline const char* to_string(SweepAxisKind k) {
  switch (k) {
    case SweepAxisKind::Noise: return "noise";
    case SweepAxisKind::Outliers: return "outliers";
    case SweepAxisKind::SampleRatio: return "sample-ratio";
  }
  return "?";
}

inline SweepAxisKind parse_sweep_axis(const std::string& s) {
  if (s == "noise") return SweepAxisKind::Noise;
  if (s == "outliers") return SweepAxisKind::Outliers;
  if (s == "sample-ratio") return SweepAxisKind::SampleRatio;
  throw InvalidArgument("sweep: unknown axis '" + s + "' (expected noise|outliers|sample-ratio)");
}

inline const char* to_string(Pipeline p) {
  switch (p) {
    case Pipeline::MpeIcp: return "mpe-icp";
    case Pipeline::MpeOnly: return "mpe";
    case Pipeline::IcpOnly: return "icp";
  }
  return "?";
}

inline Pipeline parse_pipeline(const std::string& s) {
  if (s == "mpe-icp") return Pipeline::MpeIcp;
  if (s == "mpe") return Pipeline::MpeOnly;
  if (s == "icp") return Pipeline::IcpOnly;
  throw InvalidArgument("sweep: unknown pipeline '" + s + "' (expected mpe-icp|mpe|icp)");
}

struct SweepConfig {
  SweepAxisKind axis = SweepAxisKind::Noise;
  std::vector<double> levels;
  std::size_t trials = 10;
  Pipeline pipeline = Pipeline::MpeIcp;
  PerturbationSpec perturbation;  // base values for the non-swept terms
  MultiviewConfig registration;   // mpe + icp settings
};

struct SweepRow {
  std::string axis;
  double level = 0.0;
  std::size_t trial = 0;
  ErrorMetrics error;
  double runtime_s = 0.0;
  std::size_t icp_mse_increases = 0;  // not written to CSV
};

struct SweepSummary {
  std::string axis;
  double level = 0.0;
  std::size_t trials = 0;
  ErrorMetrics mean;
  ErrorMetrics stddev;
  double runtime_mean = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepSummary> summary;
};

/// Everything one seeded trial needs: the perturbed reference, its ground
/// truth pose and the registration settings.
struct TrialSetup {
  RigidTransform truth;
  PointCloud tmpl;
  PointCloud reference;
  MultiviewConfig registration;
};

/// Reference = pose(model) + noise + outliers, each drawn from a stream
/// derived from (seed, level index, trial). With perturb_template the noise
/// and outliers go on the template copy and the reference stays clean.
inline TrialSetup make_trial(const PointCloud& model, const SweepConfig& cfg, std::size_t level_idx, std::size_t trial) {
  const double level = cfg.levels.at(level_idx);
  PerturbationSpec spec = cfg.perturbation;
  spec.seed = derive_seed(cfg.perturbation.seed, {level_idx, trial});
  if (spec.translation_range.lo == 0.0 && spec.translation_range.hi == 0.0) {
    const double d = bounding_box(model).diagonal();
    spec.translation_range = {-0.5 * d, 0.5 * d};
  }
  TrialSetup t;
  t.registration = cfg.registration;
  t.registration.mpe.seed = derive_seed(spec.seed, {0x3e9});
  switch (cfg.axis) {
    case SweepAxisKind::Noise: spec.gaussian_sigma = level; break;
    case SweepAxisKind::Outliers:
      if (!(level >= 0.0)) throw InvalidArgument("sweep: outlier level must be >= 0");
      spec.outlier_count = static_cast<std::size_t>(std::llround(level));
      break;
    case SweepAxisKind::SampleRatio:
      if (!(level > 0.0 && level <= 1.0)) throw InvalidArgument("sweep: sample ratio must be in (0, 1]");
      t.registration.mpe.downsample_count =
          std::max<std::size_t>(3, static_cast<std::size_t>(std::llround(level * static_cast<double>(model.size()))));
      break;
  }
  t.truth = random_pose(spec);
  auto corrupt = [&](const PointCloud& c) {
    const PointCloud noisy = add_gaussian_noise(c, spec.gaussian_sigma, derive_seed(spec.seed, {1}));
    return add_uniform_outliers(noisy, spec.outlier_count, derive_seed(spec.seed, {2}));
  };
  t.reference = apply_transform(t.truth, model);
  t.tmpl = model;
  if (spec.perturb_template)
    t.tmpl = corrupt(t.tmpl);
  else
    t.reference = corrupt(t.reference);
  return t;
}

inline ErrorMetrics mean_of(const std::vector<ErrorMetrics>& v) {
  ErrorMetrics m;
  for (const auto& e : v) {
    m.rotation_error_deg += e.rotation_error_deg;
    m.translation_error += e.translation_error;
    m.rmse += e.rmse;
  }
  const double n = static_cast<double>(v.size());
  return {m.rotation_error_deg / n, m.translation_error / n, m.rmse / n};
}

/// Sample standard deviation (n - 1); 0 for a single trial.
inline ErrorMetrics stddev_of(const std::vector<ErrorMetrics>& v) {
  if (v.size() < 2) return {};
  const ErrorMetrics m = mean_of(v);
  ErrorMetrics s;
  for (const auto& e : v) {
    s.rotation_error_deg += std::pow(e.rotation_error_deg - m.rotation_error_deg, 2);
    s.translation_error += std::pow(e.translation_error - m.translation_error, 2);
    s.rmse += std::pow(e.rmse - m.rmse, 2);
  }
  const double n = static_cast<double>(v.size() - 1);
  return {std::sqrt(s.rotation_error_deg / n), std::sqrt(s.translation_error / n), std::sqrt(s.rmse / n)};
}

/// Registers the model against perturbed, randomly posed copies of itself
/// for every level and trial, and aggregates the error metrics.
inline SweepResult run_sweep(const PointCloud& model, const SweepConfig& cfg) {
  require_non_empty(model, "run_sweep");
  if (cfg.levels.empty()) throw InvalidArgument("sweep: no levels");
  if (cfg.trials == 0) throw InvalidArgument("sweep: trials must be >= 1");

  SweepResult out;
  for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
    std::vector<ErrorMetrics> errs;
    double runtime = 0.0;
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
      const TrialSetup setup = make_trial(model, cfg, li, trial);
      const auto start = std::chrono::steady_clock::now();
      const PairResult pr = register_pair(setup.tmpl, setup.reference, setup.registration, cfg.pipeline);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const ErrorMetrics e = evaluate(pr.transform, setup.truth, model);
      out.rows.push_back({to_string(cfg.axis), cfg.levels[li], trial, e, secs,
                          pr.icp ? trace_increases(pr.icp->mse_trace) : 0});
      errs.push_back(e);
      runtime += secs;
    }
    out.summary.push_back({to_string(cfg.axis), cfg.levels[li], cfg.trials, mean_of(errs), stddev_of(errs),
                           runtime / static_cast<double>(cfg.trials)});
  }
  return out;
}

/// Per-trial CSV. `runtime_s` is left empty when with_timing is false so
/// that repeated runs compare byte-for-byte.
inline void write_sweep_csv(std::ostream& os, const SweepResult& r, bool with_timing = true) {
  const auto old = os.precision(9);
  os << "sweep_axis,level,trial,rot_err_deg,trans_err,rmse,runtime_s\n";
  for (const auto& row : r.rows) {
    os << row.axis << ',' << row.level << ',' << row.trial << ',' << row.error.rotation_error_deg << ','
       << row.error.translation_error << ',' << row.error.rmse << ',';
    if (with_timing) os << row.runtime_s;
    os << '\n';
  }
  os.precision(old);
}

inline void write_sweep_summary_csv(std::ostream& os, const SweepResult& r, bool with_timing = true) {
  const auto old = os.precision(9);
  os << "sweep_axis,level,trials,rot_err_mean,rot_err_std,trans_err_mean,trans_err_std,rmse_mean,rmse_std,"
        "runtime_mean_s\n";
  for (const auto& s : r.summary) {
    os << s.axis << ',' << s.level << ',' << s.trials << ',' << s.mean.rotation_error_deg << ','
       << s.stddev.rotation_error_deg << ',' << s.mean.translation_error << ',' << s.stddev.translation_error << ','
       << s.mean.rmse << ',' << s.stddev.rmse << ',';
    if (with_timing) os << s.runtime_mean;
    os << '\n';
  }
  os.precision(old);
}

/// Parses `lo:hi:count` (inclusive linspace) or a comma list `a,b,c`.
inline std::vector<double> parse_levels(const std::string& spec) {
  auto to_double = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw InvalidArgument("levels: bad number '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw InvalidArgument("levels: bad number '" + s + "'");
    return v;
  };
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    const auto a = spec.find(':'), b = spec.find(':', a + 1);
    if (b == std::string::npos || spec.find(':', b + 1) != std::string::npos)
      throw InvalidArgument("levels: expected lo:hi:count, got '" + spec + "'");
    const double lo = to_double(spec.substr(0, a)), hi = to_double(spec.substr(a + 1, b - a - 1));
    const double cnt = to_double(spec.substr(b + 1));
    if (cnt < 1 || cnt != std::floor(cnt)) throw InvalidArgument("levels: count must be a positive integer");
    const auto n = static_cast<std::size_t>(cnt);
    if (n > 1 && !(hi > lo)) throw InvalidArgument("levels: empty range");
    for (std::size_t k = 0; k < n; ++k)
      out.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1));
    return out;
  }
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const auto comma = spec.find(',', pos);
    out.push_back(to_double(spec.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace mpe
