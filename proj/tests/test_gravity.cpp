#include <gtest/gtest.h>

#include "support.hpp"

using namespace mpe;

namespace {

Vec3 fd_minus_gradient(const Vec3& x, const PointCloud& ref, const CriterionParams& p, double mass) {
  const double h = 1e-6;
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 xp = x, xm = x;
    xp[a] += h;
    xm[a] -= h;
    const double ep = potential_energy(PointCloud({xp}, {mass}), ref, {}, p);
    const double em = potential_energy(PointCloud({xm}, {mass}), ref, {}, p);
    g[a] = -(ep - em) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST(Gravitation, Examples) {
  const Vec3 f1 = per_point_gravitation(Vec3::Zero(), PointCloud({Vec3::UnitX()}), {1e-9});
  EXPECT_LT((f1 - Vec3::UnitX()).norm(), 1e-8);

  const Vec3 f2 = per_point_gravitation(Vec3::Zero(), PointCloud({Vec3::UnitX(), -Vec3::UnitX()}), {1.0});
  EXPECT_LT(f2.norm(), 1e-15);

  const Vec3 f3 = per_point_gravitation(Vec3::Zero(), PointCloud({Vec3(0, 3, 0)}), {1.0});
  EXPECT_NEAR(f3.norm(), 1.0 / 16.0, 1e-15);
  EXPECT_LT((f3.normalized() - Vec3::UnitY()).norm(), 1e-15);
}

TEST(Gravitation, IsNegativeGradientOfPotential) {
  Rng rng(21);
  std::uniform_real_distribution<double> m(0.5, 2.0), e(0.05, 1.0), g(0.5, 3.0);
  for (int k = 0; k < 100; ++k) {
    PointCloud ref = test::random_cloud(20, rng);
    for (auto& w : ref.masses) w = m(rng);
    const Vec3 x = random_unit_vector<Vec3>(rng) * 1.5;
    const CriterionParams p{e(rng), g(rng)};
    const double mass = m(rng);
    const Vec3 f = per_point_gravitation(x, ref, p, mass);
    const Vec3 fd = fd_minus_gradient(x, ref, p, mass);
    EXPECT_LE((f - fd).norm(), 1e-4 * f.norm()) << "probe " << k;
  }
}

TEST(Gravitation, SmallStepAlongNetForceLowersEnergy) {
  Rng rng(22);
  int checked = 0;
  for (int k = 0; k < 50; ++k) {
    const PointCloud x = test::random_cloud(15, rng), y = test::random_cloud(20, rng, -0.5, 1.5);
    const CriterionParams p{0.2};
    const auto field = compute_force_field(x, y, p, centroid(x));
    if (field.net_force.norm() < 1e-9 * field.net_scale) continue;
    const Vec3 dir = field.net_force.normalized();
    EXPECT_LT(potential_energy(x, y, translation_only(1e-5 * dir), p), potential_energy(x, y, {}, p));
    ++checked;
  }
  EXPECT_GT(checked, 40);
}

TEST(Decompose, Examples) {
  auto s = decompose_force(Vec3(1, 0, 0), Vec3(3, 0, 0), Vec3::Zero());
  EXPECT_EQ(s.axial, Vec3(1, 0, 0));
  EXPECT_EQ(s.rotational, Vec3::Zero());
  s = decompose_force(Vec3(0, 1, 0), Vec3(1, 0, 0), Vec3::Zero());
  EXPECT_EQ(s.axial, Vec3::Zero());
  EXPECT_EQ(s.rotational, Vec3(0, 1, 0));
  s = decompose_force(Vec3(1, 1, 0), Vec3(2, 0, 0), Vec3::Zero());
  EXPECT_EQ(s.axial, Vec3(1, 0, 0));
  EXPECT_EQ(s.rotational, Vec3(0, 1, 0));
  s = decompose_force(Vec3(1, 2, 3), Vec3(1, 1, 1), Vec3(1, 1, 1));
  EXPECT_EQ(s.axial, Vec3(1, 2, 3));
  EXPECT_EQ(s.rotational, Vec3::Zero());
}

TEST(Decompose, ReconstructsAndIsOrthogonal) {
  Rng rng(23);
  for (int k = 0; k < 500; ++k) {
    const Vec3 f = random_unit_vector<Vec3>(rng) * 7.0, x = random_unit_vector<Vec3>(rng) * 3.0,
               c = random_unit_vector<Vec3>(rng);
    const auto s = decompose_force(f, x, c);
    EXPECT_EQ(s.axial + s.rotational, s.axial + (f - s.axial));
    EXPECT_LT((s.axial + s.rotational - f).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT(std::abs(s.axial.dot(s.rotational)), 1e-9 * f.squaredNorm());
  }
}

TEST(Torque, Examples) {
  EXPECT_EQ(torque(Vec3(1, 0, 0), Vec3::Zero(), Vec3(0, 1, 0)), Vec3(0, 0, 1));
  EXPECT_EQ(torque(Vec3(4, 5, 6), Vec3(1, 1, 1), Vec3::Zero()), Vec3::Zero());
  EXPECT_EQ(torque(Vec3(1, 3, 1), Vec3(1, 1, 1), Vec3(0, 0, 3)), Vec3(6, 0, 0));
}

TEST(ForceField, SumsMatchPerPointDecomposition) {
  Rng rng(24);
  const PointCloud x = test::random_cloud(30, rng), y = test::random_cloud(40, rng);
  const Vec3 c = centroid(x);
  const CriterionParams p{0.3};
  const auto field = compute_force_field(x, y, p, c);
  ASSERT_EQ(field.per_point_force.size(), x.size());
  Vec3 axial = Vec3::Zero(), tq = Vec3::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Vec3 f = per_point_gravitation(x.points[i], y, p);
    EXPECT_LT((f - field.per_point_force[i]).norm(), 1e-12 * f.norm());
    const auto s = decompose_force(f, x.points[i], c);
    axial += s.axial;
    tq += torque(x.points[i], c, s.rotational);
  }
  EXPECT_LT((axial - field.force_sum).norm(), 1e-9);
  EXPECT_LT((tq - field.torque_sum).norm(), 1e-9);
  EXPECT_NEAR(field.nfi, nfi_energy(x, y, {}, p), 1e-12 * std::abs(field.nfi));
}

TEST(ForceField, Equivariance) {
  Rng rng(25);
  const PointCloud x = test::random_cloud(20, rng), y = test::random_cloud(25, rng);
  const Vec3 c = centroid(x);
  const CriterionParams p{0.25};
  const auto base = compute_force_field(x, y, p, c);

  const Vec3 shift(3, -2, 5);
  const auto moved = compute_force_field(apply_transform(translation_only(shift), x),
                                         apply_transform(translation_only(shift), y), p, c + shift);
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_LT((moved.per_point_force[i] - base.per_point_force[i]).norm(), 1e-9);

  const Mat3 s = rodrigues(1.2, Vec3(1, -1, 2).normalized());
  const RigidTransform rs{s, Vec3::Zero()};
  const auto rotated = compute_force_field(apply_transform(rs, x), apply_transform(rs, y), p, s * c);
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_LT((rotated.per_point_force[i] - s * base.per_point_force[i]).norm(), 1e-9);
  EXPECT_LT((rotated.torque_sum - s * base.torque_sum).norm(), 1e-9);
}

TEST(Directions, Examples) {
  // symmetric cloud against itself: equilibrium
  PointCloud cube;
  for (int a : {-1, 1})
    for (int b : {-1, 1})
      for (int c : {-1, 1}) cube.push_back(Vec3(a, b, c));
  const auto eq = aggregate_directions(cube, cube, {0.5}, centroid(cube));
  EXPECT_TRUE(eq.degenerate_rotation);
  EXPECT_TRUE(eq.degenerate_translation);

  const PointCloud one({Vec3::Zero()});
  const auto d = aggregate_directions(one, PointCloud({Vec3(5, 0, 0)}), {0.5}, centroid(one));
  EXPECT_FALSE(d.degenerate_translation);
  EXPECT_LT((d.translation_dir - Vec3::UnitX()).norm(), 1e-12);
  EXPECT_TRUE(d.degenerate_rotation);

  PointCloud square;
  for (int a : {-1, 1})
    for (int b : {-1, 1}) square.push_back(Vec3(a, b, 0));
  const PointCloud turned = apply_transform({rodrigues(0.5235987755982988, Vec3::UnitZ()), Vec3::Zero()}, square);
  const auto r = aggregate_directions(square, turned, {0.1}, centroid(square));
  ASSERT_FALSE(r.degenerate_rotation);
  EXPECT_NEAR(std::abs(r.rotation_axis.z()), 1.0, 1e-9);
  // rotating about +n_p moves toward the reference
  EXPECT_GT(r.rotation_axis.z(), 0.0);
}

TEST(Directions, UnitNormWhenNotDegenerate) {
  Rng rng(26);
  for (int k = 0; k < 50; ++k) {
    const PointCloud x = test::random_cloud(12, rng), y = test::random_cloud(12, rng, 0, 2);
    for (auto mode : {TranslationForce::Axial, TranslationForce::Net}) {
      const auto d = aggregate_directions(x, y, test::random_transform(rng, 1.0, 0.5), {0.2}, centroid(x), mode);
      if (!d.degenerate_rotation) EXPECT_NEAR(d.rotation_axis.norm(), 1.0, 1e-9);
      if (!d.degenerate_translation) EXPECT_NEAR(d.translation_dir.norm(), 1.0, 1e-9);
    }
  }
}
