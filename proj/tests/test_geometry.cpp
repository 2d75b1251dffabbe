#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "qlandau/config.hpp"
#include "qlandau/geometry.hpp"

using namespace qlandau;
using namespace qlandau::geometry;

TEST(EllipticChart, ForwardOnFocalSegment) {
  const auto c = elliptic_to_cylindrical({1, 0.5, 0, 1});
  EXPECT_EQ(c.rho(), 0);
  EXPECT_DOUBLE_EQ(c.z(), 0.5);
  EXPECT_EQ(c.phi(), 0);
}

TEST(EllipticChart, ForwardDirectSubstitution) {
  const auto c = elliptic_to_cylindrical({2, 0, 1, 1});
  EXPECT_NEAR(c.rho(), std::sqrt(3.0), 1e-15);
  EXPECT_EQ(c.z(), 0);
  EXPECT_DOUBLE_EQ(c.phi(), 1);

  const auto d = elliptic_to_cylindrical({1.25, -0.6, 0, 2});
  EXPECT_NEAR(d.z(), -1.5, 1e-15);
  EXPECT_NEAR(d.rho(), 1.2, 1e-15);
}

TEST(EllipticChart, InverseSpecialPoints) {
  const auto mid = cylindrical_to_elliptic({0, 0, 0}, 1);
  EXPECT_DOUBLE_EQ(mid.xi(), 1);
  EXPECT_DOUBLE_EQ(mid.eta(), 0);
  const auto axis = cylindrical_to_elliptic({0, 2, 0}, 1);
  EXPECT_DOUBLE_EQ(axis.xi(), 2);
  EXPECT_DOUBLE_EQ(axis.eta(), 1);
}

TEST(EllipticChart, RoundTripRandom) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> xi_d(1, 4), eta_d(-1, 1), phi_d(0, 2 * std::numbers::pi), a_d(0.2, 3);
  for (int i = 0; i < 1000; ++i) {
    const EllipticPoint p(xi_d(rng), eta_d(rng), phi_d(rng), a_d(rng));
    const auto back = cylindrical_to_elliptic(elliptic_to_cylindrical(p), p.a());
    EXPECT_NEAR(back.xi(), p.xi(), Tolerances::chart_roundtrip * 4);
    EXPECT_NEAR(back.eta(), p.eta(), Tolerances::chart_roundtrip);
    EXPECT_EQ(back.phi(), p.phi());
  }
}

TEST(EllipticChart, InverseMatchesEuclideanFocalDistances) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> rho_d(0, 3), z_d(-3, 3);
  for (int i = 0; i < 1000; ++i) {
    const double a = 1.3, rho = rho_d(rng), z = z_d(rng);
    const double r1 = std::sqrt(rho * rho + (z + a) * (z + a)), r2 = std::sqrt(rho * rho + (z - a) * (z - a));
    const auto e = cylindrical_to_elliptic({rho, z, 0}, a);
    EXPECT_NEAR(e.xi(), (r1 + r2) / (2 * a), 1e-13);
    EXPECT_NEAR(e.eta(), (r1 - r2) / (2 * a), 1e-13);
  }
}

TEST(EllipticChart, CoordinateSurfaces) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1, 1);
  const double a = 1.7, xi0 = 1.8, eta0 = 0.35;
  for (int i = 0; i < 500; ++i) {
    const auto c = elliptic_to_cylindrical({xi0, u(rng), 0, a});
    EXPECT_NEAR(c.z() * c.z() / (a * a * xi0 * xi0) + c.rho() * c.rho() / (a * a * (xi0 * xi0 - 1)), 1, 1e-12);
    const auto h = elliptic_to_cylindrical({1 + 3 * std::abs(u(rng)), eta0, 0, a});
    EXPECT_NEAR(h.z() * h.z() / (a * a * eta0 * eta0) - h.rho() * h.rho() / (a * a * (1 - eta0 * eta0)), 1, 1e-12);
  }
}

TEST(ParabolicChart, Forward) {
  const auto s = parabolic_to_cylindrical({2.5, 2.5, 0});
  EXPECT_DOUBLE_EQ(s.rho(), 2.5);
  EXPECT_EQ(s.z(), 0);
  const auto c = parabolic_to_cylindrical({4, 1, 0});
  EXPECT_DOUBLE_EQ(c.rho(), 2);
  EXPECT_DOUBLE_EQ(c.z(), 1.5);
}

TEST(ParabolicChart, RoundTripAndMembership) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> d(0, 5);
  for (int i = 0; i < 1000; ++i) {
    const ParabolicPoint p(d(rng), d(rng), d(rng));
    const auto back = cylindrical_to_parabolic(parabolic_to_cylindrical(p));
    EXPECT_NEAR(back.xi(), p.xi(), 1e-12 * std::max(1.0, p.xi()));
    EXPECT_NEAR(back.eta(), p.eta(), 1e-12 * std::max(1.0, p.eta()));
  }
  const double eta0 = 0.75;
  for (int i = 0; i < 200; ++i) {
    const auto c = parabolic_to_cylindrical({d(rng), eta0, 0});
    EXPECT_NEAR(c.rho() * c.rho() / eta0 - eta0 - 2 * c.z(), 0, 1e-12);
  }
}

TEST(FocalDistances, SymmetricPoints) {
  const auto m = focal_distances({0, 0, 0}, 1);
  EXPECT_EQ(m.r1, 1);
  EXPECT_EQ(m.r2, 1);
  const auto q = focal_distances({1, 0, 0}, 1);
  EXPECT_DOUBLE_EQ(q.r1, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(q.r2, std::sqrt(2.0));
}

TEST(FocalDistances, TriangleBoundsAndRecovery) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> rho_d(0, 4), z_d(-4, 4);
  const double a = 0.9;
  for (int i = 0; i < 500; ++i) {
    const CylPoint p(rho_d(rng), z_d(rng), 0);
    const auto [r1, r2] = focal_distances(p, a);
    EXPECT_GE(r1 + r2, 2 * a - 1e-15);
    EXPECT_LE(std::abs(r1 - r2), 2 * a + 1e-15);
    const auto e = cylindrical_to_elliptic(p, a);
    EXPECT_NEAR(e.xi(), (r1 + r2) / (2 * a), 1e-13);
  }
}

TEST(Points, InvariantsEnforced) {
  EXPECT_THROW(EllipticPoint(0.5, 0, 0, 1), Error);
  EXPECT_THROW(EllipticPoint(2, 1.5, 0, 1), Error);
  EXPECT_THROW(EllipticPoint(2, 0, 0, -1), Error);
  EXPECT_THROW(ParabolicPoint(-1, 0, 0), Error);
  EXPECT_THROW(CylPoint(-1, 0, 0), Error);
  EXPECT_DOUBLE_EQ(CylPoint(1, 0, -std::numbers::pi / 2).phi(), 1.5 * std::numbers::pi);
}
