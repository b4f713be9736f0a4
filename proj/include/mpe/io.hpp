#pragma once

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mpe/sweep.hpp"

namespace mpe {

enum class CloudFormat { Xyz, PlyAscii };

/// Format from the file extension (.ply -> PLY, anything else -> XYZ).
inline CloudFormat format_from_path(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".ply" ? CloudFormat::PlyAscii : CloudFormat::Xyz;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& v) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  return r.ec == std::errc() && r.ptr == s.data() + s.size() && std::isfinite(v);
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline PointCloud read_xyz(std::istream& in) {
  PointCloud cloud;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = trim(line);
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = trim(body.substr(0, hash));
    if (body.empty()) continue;
    const auto tok = split_ws(body);
    Vec3 p;
    if (tok.size() != 3 || !parse_double(tok[0], p.x()) || !parse_double(tok[1], p.y()) || !parse_double(tok[2], p.z()))
      throw ParseError("xyz: expected 'x y z'", lineno);
    cloud.push_back(p);
  }
  return cloud;
}

inline PointCloud read_ply(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next() || trim(line) != "ply") throw ParseError("ply: missing 'ply' magic", lineno);

  std::size_t vertex_count = 0;
  bool in_vertex = false, seen_vertex = false, ascii = false;
  std::vector<std::string> props;
  for (;;) {
    if (!next()) throw ParseError("ply: header not terminated by end_header", lineno);
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii") throw ParseError("ply: only 'format ascii' is supported", lineno);
      ascii = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw ParseError("ply: malformed element line", lineno);
      std::size_t count = 0;
      if (std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), count).ec != std::errc())
        throw ParseError("ply: bad element count", lineno);
      in_vertex = tok[1] == "vertex";
      if (in_vertex) {
        if (seen_vertex) throw ParseError("ply: duplicate vertex element", lineno);
        seen_vertex = true;
        vertex_count = count;
      } else if (count > 0) {
        throw ParseError("ply: unsupported element '" + std::string(tok[1]) + "'", lineno);
      }
    } else if (tok[0] == "property") {
      if (!in_vertex) continue;
      if (tok.size() >= 2 && tok[1] == "list") throw ParseError("ply: list properties on vertex are unsupported", lineno);
      if (tok.size() != 3) throw ParseError("ply: malformed property line", lineno);
      props.emplace_back(tok[2]);
    } else {
      throw ParseError("ply: unknown header keyword '" + std::string(tok[0]) + "'", lineno);
    }
  }
  if (!ascii) throw ParseError("ply: missing format line", lineno);
  int ix = -1, iy = -1, iz = -1;
  for (std::size_t k = 0; k < props.size(); ++k) {
    if (props[k] == "x") ix = static_cast<int>(k);
    if (props[k] == "y") iy = static_cast<int>(k);
    if (props[k] == "z") iz = static_cast<int>(k);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError("ply: vertex element lacks x, y or z", lineno);

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  cloud.masses.reserve(vertex_count);
  while (cloud.size() < vertex_count) {
    if (!next()) throw ParseError("ply: fewer vertices than declared", lineno);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != props.size()) throw ParseError("ply: vertex has wrong number of values", lineno);
    Vec3 p;
    double ignored = 0.0;
    for (std::size_t k = 0; k < tok.size(); ++k)
      if (!parse_double(tok[k], ignored)) throw ParseError("ply: bad vertex value '" + std::string(tok[k]) + "'", lineno);
    parse_double(tok[static_cast<std::size_t>(ix)], p.x());
    parse_double(tok[static_cast<std::size_t>(iy)], p.y());
    parse_double(tok[static_cast<std::size_t>(iz)], p.z());
    cloud.push_back(p);
  }
  return cloud;
}

}  // namespace detail

/// Reads XYZ (`x y z` per line, `#` comments) or ASCII PLY by extension.
inline PointCloud load_cloud(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  try {
    return format_from_path(path) == CloudFormat::PlyAscii ? detail::read_ply(in) : detail::read_xyz(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

/// Writes 9 significant digits, LF line endings.
inline void write_cloud(std::ostream& os, const PointCloud& cloud, CloudFormat format) {
  require_non_empty(cloud, "save_cloud");
  char buf[96];
  if (format == CloudFormat::PlyAscii) {
    os << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
       << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  }
  for (const auto& p : cloud.points) {
    std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", p.x(), p.y(), p.z());
    os << buf;
  }
}

inline void save_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format) {
  require_non_empty(cloud, "save_cloud");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_cloud(out, cloud, format);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline void save_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
  save_cloud(cloud, path, format_from_path(path));
}

// ---------------------------------------------------------------------------
// Transform files: three rows of `r0 r1 r2 t`, i.e. [R | t] row-major.

inline void write_transform(std::ostream& os, const RigidTransform& t) {
  char buf[128];
  for (int r = 0; r < 3; ++r) {
    std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %.9g\n", t.rotation(r, 0), t.rotation(r, 1), t.rotation(r, 2),
                  t.translation(r));
    os << buf;
  }
}

inline void save_transform(const RigidTransform& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_transform(out, t);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

/// Reads 12 numbers; the rotation is projected onto SO(3) to undo the
/// 9-digit rounding.
inline RigidTransform load_transform(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::vector<double> v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    for (const auto tok : detail::split_ws(body)) {
      double x = 0.0;
      if (!detail::parse_double(tok, x)) throw ParseError(path.string() + ": bad transform value", lineno);
      v.push_back(x);
    }
  }
  if (v.size() != 12) throw ParseError(path.string() + ": expected 12 transform values");
  RigidTransform t;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) t.rotation(r, c) = v[static_cast<std::size_t>(4 * r + c)];
    t.translation(r) = v[static_cast<std::size_t>(4 * r + 3)];
  }
  t.rotation = nearest_rotation(t.rotation);
  return t;
}

// ---------------------------------------------------------------------------
// Run configuration: flat `key = value` with dotted section prefixes.

struct RunConfig {
  MultiviewConfig multiview;  // carries mpe and icp
  PerturbationSpec perturbation;

  MpeConfig& mpe() { return multiview.mpe; }
  const MpeConfig& mpe() const { return multiview.mpe; }
  TrimmedIcpConfig& icp() { return multiview.icp; }
  const TrimmedIcpConfig& icp() const { return multiview.icp; }

  void validate() const {
    multiview.validate();
    perturbation.validate();
    const auto& m = multiview.mpe;
    if (m.eps2 && !(*m.eps2 > 0.0)) throw InvalidArgument("mpe.eps2 must be positive");
    if (!(m.eps2_scale > 0.0)) throw InvalidArgument("mpe.eps2_scale must be positive");
    if (!(m.gravitational_constant > 0.0)) throw InvalidArgument("mpe.gravitational_constant must be positive");
    if (!(m.initial_theta > 0.0)) throw InvalidArgument("mpe.initial_theta must be positive");
    if (!(m.eps_R > 0.0 && m.eps_R < m.initial_theta)) throw InvalidArgument("mpe: require 0 < eps_R < initial_theta");
    if (m.initial_step && !(*m.initial_step > 0.0)) throw InvalidArgument("mpe.initial_step must be positive");
    if (m.eps_t && !(*m.eps_t > 0.0)) throw InvalidArgument("mpe.eps_t must be positive");
    if (m.eps_t && m.initial_step && !(*m.eps_t < *m.initial_step))
      throw InvalidArgument("mpe: require eps_t < initial_step");
    if (m.downsample_count < 3) throw InvalidArgument("mpe.downsample_count must be >= 3");
    if (m.max_iterations < 1) throw InvalidArgument("mpe.max_iterations must be >= 1");
  }
};

namespace detail {

inline double to_real(const std::string& key, const std::string& v, std::size_t line) {
  double x = 0.0;
  if (!parse_double(v, x)) throw ParseError("config: '" + key + "' expects a number, got '" + v + "'", line);
  return x;
}

inline std::optional<double> to_auto_real(const std::string& key, const std::string& v, std::size_t line) {
  if (v == "auto") return std::nullopt;
  return to_real(key, v, line);
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v, std::size_t line) {
  std::uint64_t x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ParseError("config: '" + key + "' expects a non-negative integer, got '" + v + "'", line);
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v, std::size_t line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError("config: '" + key + "' expects true|false, got '" + v + "'", line);
}

}  // namespace detail

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& v, std::size_t line = 0) {
  using namespace detail;
  auto& m = c.mpe();
  auto& i = c.icp();
  auto& mv = c.multiview;
  auto& p = c.perturbation;
  if (key == "mpe.preset") {
    const auto seed = m.seed;
    if (v == "default") m = MpeConfig{};
    else if (v == "robust") m = robust_mpe_config();
    else throw ParseError("config: mpe.preset expects default|robust", line);
    m.seed = seed;
  }
  else if (key == "mpe.eps2") m.eps2 = to_auto_real(key, v, line);
  else if (key == "mpe.eps2_scale") m.eps2_scale = to_real(key, v, line);
  else if (key == "mpe.gravitational_constant") m.gravitational_constant = to_real(key, v, line);
  else if (key == "mpe.initial_theta") m.initial_theta = to_real(key, v, line);
  else if (key == "mpe.initial_step") m.initial_step = to_auto_real(key, v, line);
  else if (key == "mpe.eps_R") m.eps_R = to_real(key, v, line);
  else if (key == "mpe.eps_t") m.eps_t = to_auto_real(key, v, line);
  else if (key == "mpe.downsample_count") m.downsample_count = to_uint(key, v, line);
  else if (key == "mpe.max_iterations") m.max_iterations = to_uint(key, v, line);
  else if (key == "mpe.seed") m.seed = to_uint(key, v, line);
  else if (key == "mpe.independent_halving") m.independent_halving = to_bool(key, v, line);
  else if (key == "mpe.exit_on_both") m.exit_on_both = to_bool(key, v, line);
  else if (key == "mpe.flip_restarts") m.flip_restarts = to_bool(key, v, line);
  else if (key == "mpe.translation_force") {
    if (v == "axial") m.translation_force = TranslationForce::Axial;
    else if (v == "net") m.translation_force = TranslationForce::Net;
    else throw ParseError("config: mpe.translation_force expects axial|net", line);
  }
  else if (key == "icp.overlap_ratio") i.overlap_ratio = to_real(key, v, line);
  else if (key == "icp.max_iterations") i.max_iterations = to_uint(key, v, line);
  else if (key == "icp.mse_rel_tol") i.mse_rel_tol = to_real(key, v, line);
  else if (key == "multiview.tau0") mv.tau0 = to_real(key, v, line);
  else if (key == "multiview.overlap_dist") mv.overlap_dist = to_auto_real(key, v, line);
  else if (key == "multiview.merge_dedup_dist") mv.merge_dedup_dist = to_auto_real(key, v, line);
  else if (key == "multiview.overlap_mode") {
    if (v == "fraction") mv.overlap_mode = OverlapMode::Fraction;
    else if (v == "count") mv.overlap_mode = OverlapMode::Count;
    else throw ParseError("config: multiview.overlap_mode expects fraction|count", line);
  }
  else if (key == "multiview.min_overlap_points") mv.min_overlap_points = to_uint(key, v, line);
  else if (key == "multiview.init_from_previous") mv.init_from_previous = to_bool(key, v, line);
  else if (key == "multiview.coarse_reference") {
    if (v == "last") mv.coarse_reference = CoarseReference::LastAccepted;
    else if (v == "model") mv.coarse_reference = CoarseReference::Model;
    else throw ParseError("config: multiview.coarse_reference expects last|model", line);
  }
  else if (key == "synth.gaussian_sigma") p.gaussian_sigma = to_real(key, v, line);
  else if (key == "synth.outlier_count") p.outlier_count = to_uint(key, v, line);
  else if (key == "synth.rotation_min") p.rotation_angle_range.lo = to_real(key, v, line);
  else if (key == "synth.rotation_max") p.rotation_angle_range.hi = to_real(key, v, line);
  else if (key == "synth.translation_min") p.translation_range.lo = to_real(key, v, line);
  else if (key == "synth.translation_max") p.translation_range.hi = to_real(key, v, line);
  else if (key == "synth.seed") p.seed = to_uint(key, v, line);
  else if (key == "synth.perturb") {
    if (v == "reference") p.perturb_template = false;
    else if (v == "template") p.perturb_template = true;
    else throw ParseError("config: synth.perturb expects reference|template", line);
  }
  else throw ParseError("config: unknown key '" + key + "'", line);
}

/// Parses config text over `base`; the result is validated.
inline RunConfig parse_run_config(std::istream& in, RunConfig base = {}) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = detail::trim(line);
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = detail::trim(body.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError("config: expected 'key = value'", lineno);
    const std::string key(detail::trim(body.substr(0, eq)));
    const std::string value(detail::trim(body.substr(eq + 1)));
    if (key.empty() || value.empty()) throw ParseError("config: expected 'key = value'", lineno);
    set_config_value(base, key, value, lineno);
  }
  try {
    base.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return base;
}

inline RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {}) {
  auto in = detail::open_in(path);
  try {
    return parse_run_config(in, std::move(base));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace mpe
