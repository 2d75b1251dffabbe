#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "qlandau/action.hpp"
#include "qlandau/dynamics.hpp"

using namespace qlandau;
using namespace qlandau::action;

namespace {

SurfaceModel ellipsoid(double a, double e, double q, double g) {
  if (q == 0 && g == 0) return make_model(Ellipsoid{a, e}, FreeBackground{}, Dimensionality::Surface2D);
  return make_model(Ellipsoid{a, e}, DyonPair{q, q, g, -g}, Dimensionality::Surface2D);
}

PhasePoint start(const SurfaceModel& m, double E, double pf) {
  const auto pm = potential_minimum(m, pf);
  return {pm.u, std::sqrt(radial_momentum_squared(m, pm.u, E, pf)), 0, pf};
}

}  // namespace

TEST(ActionI2, Identity) {
  EXPECT_EQ(action_I2(0), 0);
  EXPECT_EQ(action_I2(0.7), 0.7);
  EXPECT_EQ(action_I2(-1.3), -1.3);
}

TEST(ActionI1, ZeroAtPotentialMinimum) {
  const auto m = ellipsoid(1, 0.5, 0.1, 0.3);
  const auto pm = potential_minimum(m, 0.4);
  EXPECT_EQ(action_I1_quadrature(m, pm.value, 0.4).I1, 0);
  EXPECT_LT(action_I1_quadrature(m, pm.value + 1e-12, 0.4, false).I1, 1e-5);
  try {
    action_I1_quadrature(m, pm.value - 1e-3, 0.4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoBoundMotion);
  }
}

TEST(ActionI1, MonotonicInEnergy) {
  const auto m = ellipsoid(1, 0.5, 0.1, 0.3);
  for (double pf : {-0.6, 0.0, 0.4}) {
    const double E0 = potential_minimum(m, pf).value;
    double prev = 0;
    for (int k = 1; k <= 30; ++k) {
      const double I = action_I1_quadrature(m, E0 + 0.1 * k, pf, false).I1;
      EXPECT_GT(I, prev);
      prev = I;
    }
  }
}

TEST(ActionI1, FrequencyMatchesOde) {
  const auto m = ellipsoid(1, 0.5, 0.1, 0.3);
  for (double pf : {-0.5, 0.4})
    for (double dE : {0.2, 1.0, 3.0}) {
      const double E = potential_minimum(m, pf).value + dE;
      const auto r = action_I1_quadrature(m, E, pf);
      const double period = 2 * std::numbers::pi * action_energy_derivative(m, E, pf);
      EXPECT_NEAR(1 / r.radial_frequency, period, 1e-12 * period);
      const auto rp = measure_radial_period(m, start(m, E, pf), 1e-12, 4);
      EXPECT_NEAR(period, rp.period, 1e-4 * rp.period);
    }
}

TEST(ActionI1, MatchesMomentumIntegral) {
  // (1/pi) int |p_u| du over the band, evaluated directly in u with a sqrt-substitution at both edges.
  const auto m = ellipsoid(1.5, 0.7, -0.2, 0.5);
  const double pf = -0.6, E = potential_minimum(m, pf).value + 0.8;
  const auto band = allowed_band(m, E, pf);
  const double w = std::sqrt((band.upper - band.lower) / 2);
  auto f = [&](double s, double edge, double sign) {
    const double u = edge + sign * s * s;
    return std::sqrt(std::max(0.0, radial_momentum_squared(m, u, E, pf))) * 2 * s;
  };
  const double I = (quadrature::adaptive([&](double s) { return f(s, band.lower, 1); }, 0.0, w, 1e-13).value +
                    quadrature::adaptive([&](double s) { return f(s, band.upper, -1); }, 0.0, w, 1e-13).value) /
                   std::numbers::pi;
  EXPECT_NEAR(action_I1_quadrature(m, E, pf, false).I1, I, 1e-10 * I);
}

TEST(ActionI1, Scaling) {
  // a -> 2a, E -> E/4, q -> q/2 multiplies H by 1/4 and leaves p_u^2 = (E - U)/K unchanged.
  const auto m1 = ellipsoid(1, 0.5, 0.2, 0.3), m2 = ellipsoid(2, 0.5, 0.1, 0.3);
  const double pf = 0.4, E = potential_minimum(m1, pf).value + 0.9;
  const double I1 = action_I1_quadrature(m1, E, pf, false).I1;
  const double I2 = action_I1_quadrature(m2, E / 4, pf, false).I1;
  EXPECT_NEAR(I2, I1, 1e-10 * I1);
  // free surface: (E, p_phi) -> (4E, 2 p_phi) doubles the momentum and the action
  const auto mf = ellipsoid(1.3, 0.6, 0, 0);
  const double Ef = potential_minimum(mf, pf).value + 0.7;
  EXPECT_NEAR(action_I1_quadrature(mf, 4 * Ef, 2 * pf, false).I1, 2 * action_I1_quadrature(mf, Ef, pf, false).I1,
              1e-10 * action_I1_quadrature(mf, Ef, pf, false).I1);
}

TEST(ActionI1, UnboundSurfaces) {
  for (const auto& m : {make_model(Hyperboloid{1.3, 1.8}, FreeBackground{}, Dimensionality::Surface2D),
                        make_model(Paraboloid{1.2}, ParabolicBackground{0.4, 0.3, 0, 0}, Dimensionality::Surface2D)}) {
    try {
      action_I1_quadrature(m, 1.0, 0.3);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::NoBoundMotion);
    }
    EXPECT_THROW(action_I1_appell(m, 1.0, 0.3), Error);
  }
}

TEST(ActionAppell, GridAgreement) {
  int n = 0;
  for (double q : {0.0, 0.15})
    for (double g : {0.0, 0.3})
      for (double pf : {-0.5, 0.2, 0.6})
        for (double dE : {0.3, 2.0}) {
          if (n == 20) break;
          const auto m = ellipsoid(1, 0.5, q, g);
          const double E = potential_minimum(m, pf).value + dE;
          if (!(E > 0)) continue;
          const auto rep = action_I1_appell(m, E, pf);
          ++n;
          ASSERT_FALSE(rep.readings.empty());
          EXPECT_EQ(rep.readings[0].turning_points, "oracle");
          EXPECT_LT(rep.readings[0].relative_difference, 1e-6) << q << " " << g << " " << pf << " " << dE;
          EXPECT_FALSE(rep.matching_reading.empty());
          EXPECT_NEAR(rep.result.I1, rep.I1_quadrature, 1e-6 * rep.I1_quadrature);
          EXPECT_EQ(rep.result.method, Method::Appell);
          EXPECT_NEAR(rep.intermediate_ratio, 0.5, 1e-8);
        }
  EXPECT_EQ(n, 20);
}

TEST(ActionAppell, PrintedModifiedConstantsMismatch) {
  const auto m = ellipsoid(1, 0.5, 0.1, 0.3);
  const double pf = 0.4, E = potential_minimum(m, pf).value + 1;
  const auto rep = action_I1_appell(m, E, pf);
  bool closed = false;
  for (const auto& rd : rep.readings)
    if (rd.turning_points == "closed form") {
      closed = true;
      EXPECT_FALSE(rd.matches);
    }
  EXPECT_TRUE(closed);
}

TEST(ActionAppell, JsonShape) {
  const auto m = ellipsoid(1, 0.5, 0, 0);
  const auto j = to_json(action_I1_appell(m, 1.5, 0.3));
  EXPECT_TRUE(j.contains("readings"));
  EXPECT_EQ(j["result"]["method"], "appell");
  EXPECT_EQ(to_json(action_I1_quadrature(m, 1.5, 0.3))["method"], "quadrature");
}
