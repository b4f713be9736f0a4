#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mpe/mpe.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kIo = 3, kDegenerate = 4 };

struct Common {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "key = value configuration file");
  cmd->add_option("--preset", c.preset, "MPE parameter preset applied before the config file")
      ->check(CLI::IsMember({"default", "robust"}));
  cmd->add_option("--seed", c.seed, "seed for downsampling and synthetic perturbations");
}

// default < MPE_SEED < preset/config file < --seed
mpe::RunConfig build_config(const Common& c) {
  mpe::RunConfig cfg;
  if (const char* env = std::getenv("MPE_SEED")) {
    try {
      mpe::set_config_value(cfg, "mpe.seed", env);
      mpe::set_config_value(cfg, "synth.seed", env);
    } catch (const mpe::ParseError&) {
      throw mpe::ParseError(std::string("MPE_SEED must be a non-negative integer, got '") + env + "'");
    }
  }
  if (!c.preset.empty()) mpe::set_config_value(cfg, "mpe.preset", c.preset);
  if (!c.config_path.empty()) cfg = mpe::load_run_config(c.config_path, cfg);
  if (c.seed) {
    cfg.mpe().seed = *c.seed;
    cfg.perturbation.seed = *c.seed;
  }
  cfg.validate();
  return cfg;
}

template <class Fn>
void write_file(const std::string& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mpe::IoError("cannot open '" + path + "' for writing");
  fn(out);
  out.flush();
  if (!out) throw mpe::IoError("failed writing '" + path + "'");
}

mpe::SweepAxis parse_axis(const std::string& spec) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    const auto c = spec.find(':', pos);
    parts.push_back(spec.substr(pos, c == std::string::npos ? std::string::npos : c - pos));
    if (c == std::string::npos) break;
    pos = c + 1;
  }
  if (parts.size() != 4) throw mpe::InvalidArgument("axis: expected kind:lo:hi:steps, got '" + spec + "'");
  mpe::SweepAxis a;
  a.kind = mpe::parse_sweep_kind(parts[0]);
  double lo = 0, hi = 0, steps = 0;
  if (!mpe::detail::parse_double(parts[1], lo) || !mpe::detail::parse_double(parts[2], hi) ||
      !mpe::detail::parse_double(parts[3], steps) || steps < 0 || steps != std::floor(steps))
    throw mpe::InvalidArgument("axis: bad number in '" + spec + "'");
  a.lo = lo;
  a.hi = hi;
  a.steps = static_cast<std::size_t>(steps);
  a.validate();
  return a;
}

mpe::PointCloud make_fixture(const std::string& name, std::size_t n, std::uint64_t seed) {
  if (name == "blade") return mpe::make_blade(n, seed);
  if (name == "blade-section") return mpe::make_blade_section(n, seed);
  if (name == "sphere-cap") return mpe::make_sphere_cap(n, 1.0, seed);
  if (name == "plane") return mpe::make_plane(n, 1.0, seed);
  if (name == "crescent") return mpe::make_crescent(n, 0.0, 3.0, 1.0, seed);
  if (name == "blob") return mpe::make_blob(n, seed);
  throw mpe::InvalidArgument("unknown fixture '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum potential energy point cloud registration"};
  app.require_subcommand(1);

  // register
  Common reg_common;
  std::string reg_tmpl, reg_ref, reg_out, reg_pipeline = "mpe-icp", reg_init;
  auto* reg = app.add_subcommand("register", "Register a template cloud to a reference cloud");
  reg->add_option("template", reg_tmpl)->required();
  reg->add_option("reference", reg_ref)->required();
  reg->add_option("-o,--output", reg_out, "transform output (3 rows of r r r t)")->required();
  reg->add_option("--pipeline", reg_pipeline)->check(CLI::IsMember({"mpe-icp", "mpe", "icp"}));
  reg->add_option("--init", reg_init, "initial transform file");
  add_common(reg, reg_common);

  // multiview
  Common mv_common;
  std::vector<std::string> mv_scans;
  std::string mv_model, mv_report;
  bool mv_no_timing = false;
  auto* mv = app.add_subcommand("multiview", "Sequentially register and merge scans");
  mv->add_option("scans", mv_scans)->required()->expected(2, -1);
  mv->add_option("-o,--output", mv_model, "merged model output")->required();
  mv->add_option("--report", mv_report, "per-scan report output (default: stdout)");
  mv->add_flag("--no-timing", mv_no_timing, "write '-' for timings");
  add_common(mv, mv_common);

  // bench
  Common bench_common;
  std::string bench_model, bench_sweep = "noise", bench_levels, bench_out, bench_agg, bench_pipeline = "mpe-icp";
  std::size_t bench_trials = 10;
  bool bench_no_timing = false, bench_relative = false;
  auto* bench = app.add_subcommand("bench", "Seeded perturbation sweep against a model cloud");
  bench->add_option("model", bench_model)->required();
  bench->add_option("--sweep", bench_sweep)->check(CLI::IsMember({"noise", "outliers", "sample-ratio"}));
  bench->add_option("--levels", bench_levels, "lo:hi:count or a,b,c")->required();
  bench->add_option("--trials", bench_trials);
  bench->add_option("-o,--output", bench_out, "per-trial CSV")->required();
  bench->add_option("--aggregate", bench_agg, "per-level mean/std CSV");
  bench->add_option("--pipeline", bench_pipeline)->check(CLI::IsMember({"mpe-icp", "mpe", "icp"}));
  bench->add_flag("--no-timing", bench_no_timing, "leave runtime_s empty");
  bench->add_flag("--relative", bench_relative, "noise levels are fractions of the model bounding diagonal");
  add_common(bench, bench_common);

  // landscape
  Common land_common;
  std::string land_tmpl, land_ref, land_out, land_axis1, land_axis2;
  std::optional<double> land_eps2;
  auto* land = app.add_subcommand("landscape", "Sample NFI and l2 energies over a 1D or 2D motion grid");
  land->add_option("template", land_tmpl)->required();
  land->add_option("reference", land_ref)->required();
  land->add_option("--axis1", land_axis1, "kind:lo:hi:steps, kind in tx|ty|tz|rx|ry|rz")->required();
  land->add_option("--axis2", land_axis2);
  land->add_option("--eps2", land_eps2);
  land->add_option("-o,--output", land_out)->required();
  add_common(land, land_common);

  // generate
  std::string gen_name = "blade", gen_out;
  std::size_t gen_n = 3000;
  std::uint64_t gen_seed = 7;
  auto* gen = app.add_subcommand("generate", "Write a procedural fixture cloud");
  gen->add_option("fixture", gen_name)
      ->check(CLI::IsMember({"blade", "blade-section", "sphere-cap", "plane", "crescent", "blob"}));
  gen->add_option("-n,--points", gen_n);
  gen->add_option("--seed", gen_seed);
  gen->add_option("-o,--output", gen_out)->required();

  // perturb
  Common pert_common;
  std::string pert_in, pert_out, pert_truth;
  auto* pert = app.add_subcommand("perturb", "Apply a random pose, noise and outliers (synth.* config keys)");
  pert->add_option("input", pert_in)->required();
  pert->add_option("-o,--output", pert_out)->required();
  pert->add_option("--truth", pert_truth, "ground-truth transform output")->required();
  add_common(pert, pert_common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*reg) {
      const auto cfg = build_config(reg_common);
      const auto tmpl = mpe::load_cloud(reg_tmpl);
      const auto ref = mpe::load_cloud(reg_ref);
      const auto init = reg_init.empty() ? mpe::RigidTransform::identity() : mpe::load_transform(reg_init);
      const auto pr = mpe::register_pair(tmpl, ref, cfg.multiview, mpe::parse_pipeline(reg_pipeline), init);
      mpe::save_transform(pr.transform, reg_out);
      std::cout.precision(9);
      std::cout << "overlap " << pr.overlap << "\nnfi " << pr.refined_nfi << '\n';
      if (pr.degenerate) {
        std::cerr << "warning: degenerate correspondences during refinement\n";
        return kDegenerate;
      }
    } else if (*mv) {
      const auto cfg = build_config(mv_common);
      std::vector<mpe::PointCloud> scans;
      for (const auto& p : mv_scans) scans.push_back(mpe::load_cloud(p));
      const auto report = mpe::multiview_register(scans, cfg.multiview);
      mpe::save_cloud(report.model, mv_model);
      if (mv_report.empty())
        mpe::write_multiview_report(std::cout, report, !mv_no_timing);
      else
        write_file(mv_report, [&](std::ostream& os) { mpe::write_multiview_report(os, report, !mv_no_timing); });
    } else if (*bench) {
      const auto cfg = build_config(bench_common);
      const auto model = mpe::load_cloud(bench_model);
      mpe::SweepConfig sc;
      sc.axis = mpe::parse_sweep_axis(bench_sweep);
      sc.levels = mpe::parse_levels(bench_levels);
      if (bench_relative && sc.axis == mpe::SweepAxisKind::Noise)
        for (auto& l : sc.levels) l *= mpe::bounding_box(model).diagonal();
      sc.trials = bench_trials;
      sc.pipeline = mpe::parse_pipeline(bench_pipeline);
      sc.perturbation = cfg.perturbation;
      sc.registration = cfg.multiview;
      const auto result = mpe::run_sweep(model, sc);
      write_file(bench_out, [&](std::ostream& os) { mpe::write_sweep_csv(os, result, !bench_no_timing); });
      if (!bench_agg.empty())
        write_file(bench_agg, [&](std::ostream& os) { mpe::write_sweep_summary_csv(os, result, !bench_no_timing); });
    } else if (*land) {
      const auto cfg = build_config(land_common);
      const auto axis1 = parse_axis(land_axis1);
      std::optional<mpe::SweepAxis> axis2;
      if (!land_axis2.empty()) axis2 = parse_axis(land_axis2);
      const auto tmpl = mpe::load_cloud(land_tmpl);
      const auto ref = mpe::load_cloud(land_ref);
      auto params = mpe::resolve(cfg.mpe(), ref).criterion;
      if (land_eps2) params.eps2 = *land_eps2;
      const auto l = mpe::landscape_sweep(tmpl, ref, params, axis1, axis2);
      write_file(land_out, [&](std::ostream& os) { mpe::write_landscape_csv(os, l); });
    } else if (*gen) {
      mpe::save_cloud(make_fixture(gen_name, gen_n, gen_seed), gen_out);
    } else if (*pert) {
      const auto cfg = build_config(pert_common);
      const auto model = mpe::load_cloud(pert_in);
      auto spec = cfg.perturbation;
      if (spec.translation_range.lo == 0.0 && spec.translation_range.hi == 0.0) {
        const double d = mpe::bounding_box(model).diagonal();
        spec.translation_range = {-0.5 * d, 0.5 * d};
      }
      const auto truth = mpe::random_pose(spec);
      auto out = mpe::apply_transform(truth, model);
      out = mpe::add_gaussian_noise(out, spec.gaussian_sigma, mpe::derive_seed(spec.seed, {1}));
      out = mpe::add_uniform_outliers(out, spec.outlier_count, mpe::derive_seed(spec.seed, {2}));
      mpe::save_cloud(out, pert_out);
      mpe::save_transform(truth, pert_truth);
    }
  } catch (const mpe::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const mpe::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const mpe::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const mpe::DegenerateConfiguration& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDegenerate;
  }
  return kOk;
}
