#include <cmath>

#include <gtest/gtest.h>

#include "qlandau/dynamics.hpp"

using namespace qlandau;

namespace {

const SurfaceModel& reducible() {
  static const auto m = make_model(Ellipsoid{1, 0.5}, DyonPair{0.1, 0.1, 0.3, -0.3}, Dimensionality::Surface2D);
  return m;
}

PhasePoint start(const SurfaceModel& m, double E, double pf) {
  const auto pm = potential_minimum(m, pf);
  return {pm.u, std::sqrt(radial_momentum_squared(m, pm.u, E, pf)), 0, pf};
}

}  // namespace

TEST(Integrate, MeridianMotionKeepsPhi) {
  const auto m = make_model(Ellipsoid{1, 0.5}, FreeBackground{}, Dimensionality::Surface2D);
  const auto tr = integrate(m, {0.1, 0.3, 0.4, 0}, 1.0, 1e-10);
  for (const auto& s : tr.samples) EXPECT_EQ(s.state.phi, 0.4);
}

TEST(Integrate, EnergyDriftOverFiftyPeriods) {
  const auto& m = reducible();
  const double pf = 0.4, E = potential_minimum(m, pf).value + 1.0;
  const auto s0 = start(m, E, pf);
  const auto rp = measure_radial_period(m, s0, 1e-12, 2);
  const auto tr = integrate(m, s0, 52 * rp.period, 1e-10);
  const auto rep = conservation_report(tr);
  EXPECT_LT(rep.max_energy_drift, 1e-8);
  EXPECT_EQ(rep.max_pphi_drift, 0);
  EXPECT_GT(rep.steps, 100);
  for (std::size_t i = 1; i < tr.samples.size(); ++i) EXPECT_GT(tr.samples[i].t, tr.samples[i - 1].t);
}

TEST(Integrate, UniformSamplingHitsGrid) {
  const auto& m = reducible();
  const auto tr = integrate(m, start(m, 1.5, 0.4), 3.0, 1e-10, 31);
  ASSERT_EQ(tr.samples.size(), 31u);
  for (int k = 0; k < 31; ++k) EXPECT_DOUBLE_EQ(tr.samples[k].t, 3.0 * k / 30);
}

TEST(Integrate, ToleranceBounds) {
  const auto& m = reducible();
  try {
    integrate(m, start(m, 1.5, 0.4), 1.0, 1e-2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
  }
  EXPECT_THROW(integrate(m, start(m, 1.5, 0.4), 1.0, 1e-16), Error);
}

TEST(Integrate, PoleCrossingReportsSingularity) {
  const auto m = make_model(Ellipsoid{1, 0.5}, FreeBackground{}, Dimensionality::Surface2D);
  try {
    integrate(m, {0.0, 1.0, 0, 0}, 50.0, 1e-10);
    FAIL();
  } catch (const IntegrationError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularityReached);
    ASSERT_FALSE(e.partial().samples.empty());
    EXPECT_GT(std::abs(e.partial().samples.back().state.u), 0.99);
  }
}

TEST(Conservation, SingleSample) {
  const auto& m = reducible();
  const auto tr = integrate(m, start(m, 1.5, 0.4), 0.0, 1e-10);
  ASSERT_EQ(tr.samples.size(), 1u);
  const auto rep = conservation_report(tr);
  EXPECT_EQ(rep.max_energy_drift, 0);
  EXPECT_EQ(rep.max_pphi_drift, 0);
}

TEST(Conservation, FreeParticleDrift) {
  const auto m = make_model(Ellipsoid{1.2, 0.6}, FreeBackground{}, Dimensionality::Surface2D);
  const auto tr = integrate(m, {0.2, 0.5, 0, 0.7}, 100.0, 1e-10);
  EXPECT_LT(conservation_report(tr).max_energy_drift, 1e-8);
}

TEST(Conservation, DriftGrowsWithTolerance) {
  const auto& m = reducible();
  const auto s0 = start(m, 1.5, 0.4);
  double prev = 0;
  for (double tol : {1e-10, 1e-8, 1e-6}) {
    const double d = conservation_report(integrate(m, s0, 200.0, tol)).max_energy_drift;
    EXPECT_GT(d, prev) << tol;
    prev = d;
  }
}

TEST(RadialPeriod, TurningValuesMatchOracleRoots) {
  const auto& m = reducible();
  const double pf = 0.4, E = 1.5;
  const auto rp = measure_radial_period(m, start(m, E, pf));
  const auto band = allowed_band(m, E, pf);
  EXPECT_NEAR(1 - rp.u_max * rp.u_max, 1 - band.upper * band.upper, 1e-8);
  EXPECT_NEAR(1 - rp.u_min * rp.u_min, 1 - band.lower * band.lower, 1e-8);
}

TEST(RadialPeriod, IndependentOfStartingPhase) {
  const auto& m = reducible();
  const double pf = 0.4, E = 1.5;
  const auto s0 = start(m, E, pf);
  const auto a = measure_radial_period(m, s0);
  const auto tr = integrate(m, s0, 0.37 * a.period, 1e-12);
  const auto b = measure_radial_period(m, tr.samples.back().state);
  EXPECT_NEAR(a.period, b.period, 1e-8 * a.period);
}

TEST(RadialPeriod, EscapingHyperboloidIsUnbound) {
  const auto m = make_model(Hyperboloid{1, 2}, FreeBackground{}, Dimensionality::Surface2D);
  try {
    measure_radial_period(m, {1.5, 1.0, 0, 0.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnboundMotion);
  }
}

TEST(TimeReversal, ReturnsToStart) {
  const auto& m = reducible();
  const auto s0 = start(m, 1.5, 0.4);
  const double T = 20;
  const auto fwd = integrate(m, s0, T, 1e-10);
  auto mid = fwd.samples.back().state;
  mid.p_u = -mid.p_u;
  mid.p_phi = -mid.p_phi;
  const auto rev_model = magnetically_reversed(m);
  const auto back = integrate(rev_model, mid, T, 1e-10);
  const auto& end = back.samples.back().state;
  EXPECT_NEAR(end.u, s0.u, 1e-6);
  EXPECT_NEAR(-end.p_u, s0.p_u, 1e-6);
  EXPECT_NEAR(end.phi - mid.phi, -(fwd.samples.back().state.phi - s0.phi), 1e-6);
}

TEST(Ambient, TwoCenterConservation) {
  const auto m = make_model(Ellipsoid{1, 0.5}, DyonPair{-1.0, -0.6, 0.2, 0.1}, Dimensionality::Ambient3D);
  PhasePoint s{1.8, 0.1, 0, 0.6, 0.2, 0.3};
  const auto tr = integrate(m, s, 20.0, 1e-10);
  EXPECT_LT(conservation_report(tr).max_energy_drift, 1e-8);
}
