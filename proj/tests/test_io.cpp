#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mpe/mpe.hpp"
#include "support.hpp"

using namespace mpe;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("mpe_io_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_run_config(in);
}

}  // namespace

TEST(LoadCloud, XyzThreeLinesInOrder) {
  TempDir dir;
  write_file(dir / "a.xyz", "1 2 3\n4 5 6\n-7 8.5 1e-3\n");
  const PointCloud c = load_cloud(dir / "a.xyz");
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.points[0], Vec3(1, 2, 3));
  EXPECT_EQ(c.points[1], Vec3(4, 5, 6));
  EXPECT_EQ(c.points[2], Vec3(-7, 8.5, 1e-3));
  EXPECT_EQ(c.masses, std::vector<double>(3, 1.0));
}

TEST(LoadCloud, XyzCommentsAndBlankLinesSkipped) {
  TempDir dir;
  write_file(dir / "a.xyz", "# header\n\n1 2 3   # trailing\n  \n4 5 6\r\n");
  const PointCloud c = load_cloud(dir / "a.xyz");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.points[1], Vec3(4, 5, 6));
}

TEST(LoadCloud, XyzMalformedLineNamesLine) {
  TempDir dir;
  write_file(dir / "bad.xyz", "1 2 3\n# ok\n4 five 6\n");
  try {
    load_cloud(dir / "bad.xyz");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("bad.xyz"), std::string::npos) << e.what();
  }
  write_file(dir / "short.xyz", "1 2\n");
  EXPECT_THROW(load_cloud(dir / "short.xyz"), ParseError);
  write_file(dir / "long.xyz", "1 2 3 4\n");
  EXPECT_THROW(load_cloud(dir / "long.xyz"), ParseError);
}

TEST(LoadCloud, PlyExtraPropertiesIgnored) {
  TempDir dir;
  write_file(dir / "a.ply",
             "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 2\n"
             "property float nx\nproperty float x\nproperty float y\nproperty uchar red\nproperty float z\n"
             "element face 0\nproperty list uchar int vertex_indices\nend_header\n"
             "0.5 1 2 255 3\n0 -1 -2 0 -3\n");
  const PointCloud c = load_cloud(dir / "a.ply");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.points[0], Vec3(1, 2, 3));
  EXPECT_EQ(c.points[1], Vec3(-1, -2, -3));
}

TEST(LoadCloud, PlyErrors) {
  TempDir dir;
  const std::string head = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n";
  write_file(dir / "binary.ply", "ply\nformat binary_little_endian 1.0\nend_header\n");
  EXPECT_THROW(load_cloud(dir / "binary.ply"), ParseError);
  write_file(dir / "faces.ply", head + "element face 1\nproperty list uchar int vertex_indices\nend_header\n1 2 3\n4 5 6\n3 0 1 1\n");
  EXPECT_THROW(load_cloud(dir / "faces.ply"), ParseError);
  write_file(dir / "few.ply", head + "end_header\n1 2 3\n");
  EXPECT_THROW(load_cloud(dir / "few.ply"), ParseError);
  write_file(dir / "noz.ply", "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nend_header\n1 2\n");
  EXPECT_THROW(load_cloud(dir / "noz.ply"), ParseError);
  write_file(dir / "badval.ply", head + "end_header\n1 2 3\n4 x 6\n");
  try {
    load_cloud(dir / "badval.ply");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 9"), std::string::npos) << e.what();
  }
}

TEST(LoadCloud, MissingFileIsIoError) {
  try {
    load_cloud("/nonexistent/dir/cloud.xyz");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/cloud.xyz"), std::string::npos);
  }
}

TEST(SaveCloud, RoundTripWithinPrecision) {
  TempDir dir;
  Rng rng(11);
  const PointCloud c = test::random_cloud(1000, rng, -250.0, 250.0);
  for (const char* name : {"r.xyz", "r.ply"}) {
    save_cloud(c, dir / name);
    const PointCloud back = load_cloud(dir / name);
    ASSERT_EQ(back.size(), c.size()) << name;
    for (std::size_t i = 0; i < c.size(); ++i)
      for (int k = 0; k < 3; ++k)
        ASSERT_LE(std::abs(back.points[i][k] - c.points[i][k]), 1e-8 * std::max(1.0, std::abs(c.points[i][k])))
            << name << " point " << i;
  }
}

TEST(SaveCloud, XyzHasOneLinePerPoint) {
  TempDir dir;
  Rng rng(12);
  const PointCloud c = test::random_cloud(37, rng, -1.0, 1.0);
  save_cloud(c, dir / "n.xyz");
  const std::string text = read_file(dir / "n.xyz");
  std::size_t lines = 0;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') ++lines;
  EXPECT_EQ(lines, 37u);
  EXPECT_EQ(text.find('\r'), std::string::npos);
}

TEST(SaveCloud, RejectsEmptyAndUnwritable) {
  TempDir dir;
  EXPECT_THROW(save_cloud(PointCloud{}, dir / "e.xyz"), InvalidArgument);
  EXPECT_FALSE(fs::exists(dir / "e.xyz"));
  EXPECT_THROW(save_cloud(PointCloud({Vec3(1, 2, 3)}), "/nonexistent/dir/x.xyz"), IoError);
}

TEST(Transform, RoundTrip) {
  TempDir dir;
  Rng rng(13);
  for (int k = 0; k < 20; ++k) {
    const RigidTransform t = test::random_transform(rng, pi, 100.0);
    save_transform(t, dir / "t.txt");
    const RigidTransform back = load_transform(dir / "t.txt");
    EXPECT_LT((back.rotation - t.rotation).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((back.translation - t.translation).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((back.rotation * back.rotation.transpose() - Mat3::Identity()).norm(), 1e-12);
  }
  write_file(dir / "short.txt", "1 0 0 0\n0 1 0 0\n");
  EXPECT_THROW(load_transform(dir / "short.txt"), ParseError);
}

TEST(Config, DefaultsAndOverrides) {
  const RunConfig d = parse("");
  EXPECT_EQ(d.multiview.tau0, 0.3);
  EXPECT_FALSE(d.mpe().eps2.has_value());
  const RunConfig c = parse(
      "# comment\n"
      "mpe.eps2 = 0.5\n"
      "mpe.initial_theta = 0.3   # trailing comment\n"
      "mpe.translation_force = net\n"
      "mpe.independent_halving = true\n"
      "icp.overlap_ratio = 0.6\n"
      "multiview.tau0 = 0.4\n"
      "multiview.overlap_dist = auto\n"
      "multiview.coarse_reference = model\n"
      "synth.outlier_count = 950\n"
      "synth.perturb = template\n");
  EXPECT_EQ(*c.mpe().eps2, 0.5);
  EXPECT_EQ(c.mpe().initial_theta, 0.3);
  EXPECT_EQ(c.mpe().translation_force, TranslationForce::Net);
  EXPECT_TRUE(c.mpe().independent_halving);
  EXPECT_EQ(c.icp().overlap_ratio, 0.6);
  EXPECT_EQ(c.multiview.tau0, 0.4);
  EXPECT_FALSE(c.multiview.overlap_dist.has_value());
  EXPECT_EQ(c.multiview.coarse_reference, CoarseReference::Model);
  EXPECT_EQ(c.perturbation.outlier_count, 950u);
  EXPECT_TRUE(c.perturbation.perturb_template);
}

TEST(Config, PresetKeepsSeedAndLaterKeysWin) {
  const RunConfig c = parse("mpe.seed = 77\nmpe.preset = robust\nmpe.initial_theta = 0.5\n");
  EXPECT_EQ(c.mpe().seed, 77u);
  EXPECT_TRUE(c.mpe().independent_halving);
  EXPECT_TRUE(c.mpe().exit_on_both);
  EXPECT_EQ(c.mpe().eps2_scale, robust_mpe_config().eps2_scale);
  EXPECT_EQ(c.mpe().initial_theta, 0.5);
  EXPECT_TRUE(c.mpe().flip_restarts);
  EXPECT_FALSE(parse("mpe.preset = robust\nmpe.flip_restarts = false\n").mpe().flip_restarts);
  const RunConfig p = parse("mpe.preset = robust\nmpe.preset = default\n");
  EXPECT_FALSE(p.mpe().independent_halving);
  EXPECT_EQ(p.mpe().initial_theta, MpeConfig{}.initial_theta);
}

TEST(Config, RejectsBadInput) {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("mpe.eps2 = 1\nmpe.bogus = 3\n"), 2u);
  EXPECT_EQ(line_of("\n\nmpe.eps2 = abc\n"), 3u);
  EXPECT_EQ(line_of("mpe.eps2\n"), 1u);
  EXPECT_EQ(line_of("mpe.translation_force = sideways\n"), 1u);
  EXPECT_EQ(line_of("mpe.independent_halving = maybe\n"), 1u);
  EXPECT_EQ(line_of("mpe.downsample_count = -4\n"), 1u);
  EXPECT_EQ(line_of("mpe.preset = fast\n"), 1u);
  // nested invariants are enforced at load
  EXPECT_THROW(parse("mpe.eps2 = -1\n"), ParseError);
  EXPECT_THROW(parse("mpe.eps_R = 2\n"), ParseError);
  EXPECT_THROW(parse("icp.overlap_ratio = 0\n"), ParseError);
  EXPECT_THROW(parse("multiview.tau0 = 1.5\n"), ParseError);
  EXPECT_THROW(parse("mpe.eps2_scale = 0\n"), ParseError);
}

TEST(Config, LoadFromFile) {
  TempDir dir;
  write_file(dir / "c.cfg", "icp.max_iterations = 7\n");
  EXPECT_EQ(load_run_config(dir / "c.cfg").icp().max_iterations, 7u);
  write_file(dir / "bad.cfg", "nope = 1\n");
  try {
    load_run_config(dir / "bad.cfg");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.cfg"), std::string::npos);
  }
  EXPECT_THROW(load_run_config(dir / "missing.cfg"), IoError);
}
