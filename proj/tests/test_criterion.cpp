#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace mpe;

namespace {

// Plain double loop, summed in a single running total.
double naive_nfi(const PointCloud& x, const PointCloud& y, const RigidTransform& t, double eps2) {
  double s = 0.0;
  for (const auto& p : x.points) {
    const Vec3 q = t.rotation * p + t.translation;
    for (const auto& r : y.points) s -= 1.0 / (std::sqrt((r - q).squaredNorm()) + eps2);
  }
  return s;
}

double naive_l2(const PointCloud& x, const PointCloud& y, const RigidTransform& t) {
  double s = 0.0;
  for (const auto& p : x.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : y.points) best = std::min(best, (r - t(p)).squaredNorm());
    s += best;
  }
  return s;
}

}  // namespace

TEST(PairDistance, Examples) {
  EXPECT_DOUBLE_EQ(pair_distance(Vec3::Zero(), Vec3::Zero(), {1.0}), 1.0);
  EXPECT_DOUBLE_EQ(pair_distance(Vec3::Zero(), Vec3(3, 4, 0), {1.0}), 6.0);
  EXPECT_NEAR(pair_distance(Vec3(1, 1, 1), Vec3(2, 3, 5), {0.5}), std::sqrt(21.0) + 0.5, 1e-15);
}

TEST(Params, RejectNonPositive) {
  EXPECT_THROW((CriterionParams{0.0}.validate()), InvalidArgument);
  EXPECT_THROW((CriterionParams{-1.0}.validate()), InvalidArgument);
  EXPECT_THROW((CriterionParams{1.0, 0.0}.validate()), InvalidArgument);
  EXPECT_NO_THROW((CriterionParams{1e-9, 2.0}.validate()));
}

TEST(NfiEnergy, Examples) {
  const RigidTransform id;
  EXPECT_DOUBLE_EQ(nfi_energy(PointCloud({Vec3::Zero()}), PointCloud({Vec3::Zero()}), id, {1.0}), -1.0);
  EXPECT_NEAR(nfi_energy(PointCloud({Vec3::Zero()}), PointCloud({Vec3(3, 4, 0)}), id, {1.0}), -1.0 / 6.0, 1e-15);
  const PointCloud two({Vec3::Zero(), Vec3::UnitX()});
  EXPECT_DOUBLE_EQ(nfi_energy(two, two, id, {1.0}), -3.0);
}

TEST(NfiEnergy, MatchesNaiveOracle) {
  Rng rng(11);
  std::uniform_int_distribution<int> n(1, 50);
  std::uniform_real_distribution<double> e(0.01, 2.0);
  for (int k = 0; k < 200; ++k) {
    const PointCloud x = test::random_cloud(n(rng), rng), y = test::random_cloud(n(rng), rng, -2, 2);
    const auto t = test::random_transform(rng, 3.0, 1.0);
    const double eps2 = e(rng);
    const double ref = naive_nfi(x, y, t, eps2);
    EXPECT_LE(std::abs(nfi_energy(x, y, t, {eps2}) - ref), 1e-12 * std::abs(ref));
  }
}

TEST(NfiEnergy, Bounds) {
  Rng rng(12);
  for (int k = 0; k < 50; ++k) {
    const PointCloud x = test::random_cloud(10, rng), y = test::random_cloud(15, rng);
    const double eps2 = 0.1 + 0.01 * k;
    const double e = nfi_energy(x, y, {}, {eps2});
    EXPECT_LT(e, 0.0);
    EXPECT_GE(e, -static_cast<double>(x.size() * y.size()) / eps2);
  }
}

TEST(NfiEnergy, LonePairIncreasesWithDistance) {
  const PointCloud y({Vec3::Zero()});
  double last = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 50; ++k) {
    const double e = nfi_energy(PointCloud({Vec3(0.1 * k, 0, 0)}), y, {}, {0.5});
    EXPECT_GT(e, last);
    last = e;
  }
}

TEST(NfiEnergy, RigidInvariance) {
  Rng rng(13);
  for (int k = 0; k < 20; ++k) {
    const PointCloud x = test::random_cloud(30, rng), y = test::random_cloud(30, rng);
    const auto t = test::random_transform(rng, 3.0, 1.0), s = test::random_transform(rng, 3.0, 5.0);
    // S y vs (S T S^-1)(S x)
    const double a = nfi_energy(x, y, t, {0.3});
    const double b = nfi_energy(apply_transform(s, x), apply_transform(s, y), compose(s, compose(t, inverse(s))), {0.3});
    EXPECT_NEAR(a, b, 1e-9 * std::abs(a));
  }
}

TEST(PotentialEnergy, Examples) {
  const PointCloud x({Vec3::Zero()}, {2.0}), y({Vec3::Zero()}, {3.0});
  EXPECT_DOUBLE_EQ(potential_energy(x, y, {}, {1.0, 1.0}), -6.0);
  EXPECT_DOUBLE_EQ(potential_energy(x, y, {}, {1.0, 2.0}), -12.0);
}

TEST(PotentialEnergy, EqualsNfiBitForBitWithUnitMasses) {
  Rng rng(14);
  for (int k = 0; k < 50; ++k) {
    const PointCloud x = test::random_cloud(25, rng), y = test::random_cloud(40, rng);
    const auto t = test::random_transform(rng, 3.0, 1.0);
    EXPECT_EQ(potential_energy(x, y, t, {0.2, 1.0}), nfi_energy(x, y, t, {0.2, 1.0}));
  }
}

TEST(L2Energy, Examples) {
  const RigidTransform id;
  Rng rng(15);
  const PointCloud c = test::random_cloud(30, rng);
  EXPECT_EQ(l2_nn_energy(c, c, id), 0.0);
  EXPECT_DOUBLE_EQ(l2_nn_energy(PointCloud({Vec3::Zero()}), PointCloud({Vec3(1, 0, 0), Vec3(5, 0, 0)}), id), 1.0);
  EXPECT_DOUBLE_EQ(l2_nn_energy(PointCloud({Vec3::Zero(), Vec3(10, 0, 0)}), PointCloud({Vec3(1, 0, 0)}), id), 82.0);
}

TEST(L2Energy, IndexedPathMatchesExhaustive) {
  Rng rng(16);
  const PointCloud x = test::random_cloud(200, rng), y = test::random_cloud(2500, rng);
  const auto t = test::random_transform(rng, 0.5, 0.2);
  EXPECT_NEAR(l2_nn_energy(x, y, t), naive_l2(x, y, t), 1e-12 * naive_l2(x, y, t));
}

TEST(Landscape, CoincidentCloudsMinimumAtZero) {
  Rng rng(17);
  const PointCloud c = test::random_cloud(40, rng);
  const auto l = landscape_sweep(c, c, {0.1}, {SweepKind::TranslateX, -1.0, 1.0, 101});
  std::vector<double> nfi;
  for (const auto& s : l.samples) nfi.push_back(s.nfi);
  const auto best = std::min_element(nfi.begin(), nfi.end()) - nfi.begin();
  EXPECT_EQ(best, 50);
  EXPECT_NEAR(l.samples[50].axis1, 0.0, 1e-15);
}

TEST(Landscape, LineFixtureNfiSingleMinimumL2Several) {
  const LineFixture f = line_fixture();
  const auto l = landscape_sweep(f.tmpl, f.reference, {8.0}, {SweepKind::TranslateX, -5.0, 20.0, 1001});
  std::vector<double> nfi, l2;
  for (const auto& s : l.samples) {
    nfi.push_back(s.nfi);
    l2.push_back(s.l2);
  }
  const auto nm = local_minima(nfi);
  ASSERT_EQ(nm.size(), 1u);
  EXPECT_NEAR(l.samples[nm[0]].axis1, f.optimum, 0.5);
  EXPECT_GE(local_minima(l2).size(), 2u);
}

TEST(Landscape, SmallOffsetIsNotConvex) {
  const LineFixture f = line_fixture();
  const auto l = landscape_sweep(f.tmpl, f.reference, {0.05}, {SweepKind::TranslateX, -5.0, 20.0, 1001});
  std::vector<double> nfi;
  for (const auto& s : l.samples) nfi.push_back(s.nfi);
  EXPECT_GE(local_minima(nfi).size(), 2u);
}

TEST(Landscape, GridShapeAndOrder) {
  Rng rng(18);
  const PointCloud x = make_blade_section(200, 3);
  const auto l = landscape_sweep(x, x, {0.1}, {SweepKind::RotateZ, -0.5, 0.5, 7},
                                 SweepAxis{SweepKind::TranslateY, -0.2, 0.2, 5});
  ASSERT_EQ(l.samples.size(), 35u);
  EXPECT_EQ(l.steps1, 7u);
  EXPECT_EQ(l.steps2, 5u);
  EXPECT_DOUBLE_EQ(*l.samples[1].axis2, -0.1);
  EXPECT_DOUBLE_EQ(l.samples[5].axis1, l.samples[0].axis1 + 1.0 / 6.0);
  std::ostringstream os;
  write_landscape_csv(os, l);
  const std::string csv = os.str();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 36);
}

TEST(Landscape, RejectsBadAxes) {
  const PointCloud c({Vec3::Zero()});
  EXPECT_THROW(landscape_sweep(c, c, {1.0}, {SweepKind::TranslateX, 0.0, 1.0, 0}), InvalidArgument);
  EXPECT_THROW(landscape_sweep(c, c, {1.0}, {SweepKind::TranslateX, 1.0, 1.0, 5}), InvalidArgument);
  EXPECT_THROW(parse_sweep_kind("tw"), InvalidArgument);
}
