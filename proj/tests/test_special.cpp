#include <cmath>
#include <random>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "qlandau/special.hpp"

using namespace qlandau;
using namespace qlandau::special;

namespace {

AppellParams params(double alpha, double rho, double lambda, double c, double u, double v, double a = 1) {
  AppellParams p;
  p.alpha = alpha;
  p.rho = rho;
  p.lambda = lambda;
  p.gamma_sum = c;
  p.u = u;
  p.v = v;
  p.a_limit = a;
  return p;
}

// Independent evaluation of the printed Euler integral by tanh-sinh quadrature in x on [0, a].
double euler_tanh_sinh(const AppellParams& p) {
  const double b = p.beta(), a = p.a_limit;
  const double norm = std::pow(a, 1 - p.gamma_sum) * boost::math::tgamma(p.gamma_sum) /
                      (boost::math::tgamma(p.alpha) * boost::math::tgamma(b));
  boost::math::quadrature::tanh_sinh<double> ts;
  auto f = [&](double x, double xc) {
    const double right = x > a / 2 ? xc : a - x;  // a - x without cancellation near a
    return std::pow(x, p.alpha - 1) * std::pow(right, b - 1) * std::pow(1 - p.u * x, -p.rho) *
           std::pow(1 - p.v * x, -p.lambda);
  };
  return norm * ts.integrate(f, 0.0, a, 1e-15);
}

}  // namespace

TEST(Appell, OriginIsOne) {
  for (double alpha : {0.3, 0.5, 1.7})
    for (double c : {1.0, 2.0, 3.5}) {
      if (c <= alpha) continue;
      EXPECT_NEAR(appell_f1(params(alpha, 1, -0.5, c, 0, 0)).value, 1, 1e-12);
      EXPECT_NEAR(appell_f1(params(alpha, 1, -0.5, c, 0, 0, 0.37)).value, 1, 1e-12);
    }
}

TEST(Appell, LambdaZeroIgnoresV) {
  const double ref = appell_f1(params(0.5, 1, 0, 2, 0.4, 0)).value;
  for (double v : {-3.0, -0.5, 0.3, 0.9}) EXPECT_EQ(appell_f1(params(0.5, 1, 0, 2, 0.4, v)).value, ref);
}

TEST(Appell, SwapSymmetry) {
  const double x = appell_f1(params(0.5, 1, -0.5, 2, 0.3, -0.7)).value;
  const double y = appell_f1(params(0.5, -0.5, 1, 2, -0.7, 0.3)).value;
  EXPECT_NEAR(x, y, 1e-14 * std::abs(x));
}

TEST(Appell, ActionPointMatchesTanhSinh) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> am(0.05, 0.95), ap(1.05, 6.0);
  for (int k = 0; k < 20; ++k) {
    const double a_minus = am(rng), a_plus = ap(rng);
    const auto p = params(0.5, 1, -0.5, 2, a_minus, a_minus / a_plus);
    const double ref = euler_tanh_sinh(p);
    const auto v = appell_f1(p);
    EXPECT_NEAR(v.value, ref, 1e-10 * std::abs(ref));
    EXPECT_LE(v.error, 1e-13 * std::abs(v.value));
  }
}

TEST(Appell, LimitInsideArguments) {
  // F1 with arguments (u a, v a): the a_limit parameter only rescales the arguments.
  const double x = appell_f1(params(0.5, 1, -0.5, 2, 0.3, 0.2, 2)).value;
  const double y = appell_f1(params(0.5, 1, -0.5, 2, 0.6, 0.4, 1)).value;
  EXPECT_NEAR(x, y, 1e-13 * std::abs(y));
}

TEST(Appell, UnitArgumentMatchesGaussSum) {
  // F1(alpha; rho, 0; c; 1, y) = 2F1(alpha, rho; c; 1) = Gamma(c) Gamma(c - alpha - rho) / (Gamma(c - alpha) Gamma(c - rho))
  const double alpha = 0.5, rho = 1, c = 2.6;
  const double gauss = boost::math::tgamma(c) * boost::math::tgamma(c - alpha - rho) /
                       (boost::math::tgamma(c - alpha) * boost::math::tgamma(c - rho));
  EXPECT_NEAR(appell_f1(params(alpha, rho, 0, c, 1, 0.3)).value, gauss, 1e-12 * gauss);
  const auto p = params(0.5, 1, -0.5, 2, 1, 0.4, 0.5);
  EXPECT_NEAR(appell_f1(p).value, appell_f1(params(0.5, 1, -0.5, 2, 0.5, 0.2)).value, 1e-10);
}

TEST(Appell, Divergence) {
  for (const auto& p : {params(0, 1, -0.5, 2, 0.1, 0.1), params(0.5, 1, -0.5, 0.5, 0.1, 0.1),
                        params(0.5, 1, -0.5, 2, 1.5, 0.1), params(0.5, 2, 0, 2, 1, 0)}) {
    try {
      appell_f1(p);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::DivergentIntegral);
    }
  }
}

TEST(Series, Origin) { EXPECT_EQ(appell_f1_series(0.5, 1, -0.5, 2, 0, 0), 1); }

TEST(Series, SingleVariableCollapse) {
  for (double x : {-0.8, -0.2, 0.4, 0.85}) {
    const double s = appell_f1_series(0.5, 1, -0.5, 2, x, 0);
    EXPECT_NEAR(s, detail::gauss_series(0.5, 1, 2, x), 1e-14 * std::abs(s));
  }
}

TEST(Series, MatchesIntegralOnBidisk) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> arg(-0.9, 0.9), al(0.2, 2.0), be(0.3, 2.0), ex(-1.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    const double alpha = al(rng), c = alpha + be(rng), rho = ex(rng), lambda = ex(rng);
    const double x = arg(rng), y = arg(rng);
    const double s = appell_f1_series(alpha, rho, lambda, c, x, y);
    const double i = appell_f1(params(alpha, rho, lambda, c, x, y)).value;
    EXPECT_NEAR(s, i, 1e-9 * std::abs(i)) << alpha << " " << rho << " " << lambda << " " << c << " " << x << " " << y;
  }
}

TEST(Series, OutsideBidisk) {
  try {
    appell_f1_series(0.5, 1, -0.5, 2, 1.0, 0.2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Nonconvergent);
  }
}
