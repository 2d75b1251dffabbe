/**
 * \file special.hpp
 * \brief Appell F1 from its Euler integral, with a double-series validator.
 */
#pragma once

#include <cmath>
#include <limits>

#include <boost/math/special_functions/beta.hpp>

#include "qlandau/error.hpp"
#include "qlandau/quadrature.hpp"

namespace qlandau::special {

/// Parameters of a^(1-alpha-beta) Gamma(alpha+beta)/(Gamma(alpha)Gamma(beta))
///   * int_0^a x^(alpha-1) (a-x)^(beta-1) (1-u x)^(-rho) (1-v x)^(-lambda) dx.
struct AppellParams {
  double alpha = 0.5;
  double rho = 1;
  double lambda = -0.5;
  double gamma_sum = 2;  ///< alpha + beta
  double u = 0, v = 0;
  double a_limit = 1;

  double beta() const { return gamma_sum - alpha; }
};

struct AppellValue {
  double value = 0;
  double error = 0;  ///< difference between the last two quadrature orders
  int order = 0;
};

namespace detail {

// The factor (1 - s t)^(-exponent) on t in [0, 1]. Returns +inf/NaN outside its real domain.
inline double linear_factor(double s, double t, double exponent) {
  if (exponent == 0) return 1;
  return std::pow(1 - s * t, -exponent);
}

}  // namespace detail

/// Evaluates the Euler integral with Gauss-Jacobi rules in t = x / a (order doubling to 1024).
/// With x = u a = 1 (or v a = 1) the (1 - t)^(-rho) factor is merged into the Jacobi weight.
inline AppellValue appell_f1(const AppellParams& p, double rel_tol = 1e-13) {
  const double alpha = p.alpha, beta = p.beta();
  if (!(alpha > 0) || !(beta > 0)) throw Error(ErrorKind::DivergentIntegral, "need alpha > 0 and beta > 0");
  if (!(p.a_limit > 0)) throw Error(ErrorKind::DomainError, "integration limit must be positive");
  double x = p.u * p.a_limit, y = p.v * p.a_limit;
  double rho = p.rho, lambda = p.lambda;
  double beta_eff = beta, norm = 1;
  auto merge = [&](double& s, double& expo) {
    if (s == 1 && expo != 0) {
      beta_eff -= expo;
      if (!(beta_eff > 0)) throw Error(ErrorKind::DivergentIntegral, "(1 - t)^(beta - 1 - rho) is not integrable");
      expo = 0;
      s = 0;
    }
  };
  merge(x, rho);
  merge(y, lambda);
  if ((x > 1 && rho != 0) || (y > 1 && lambda != 0))
    throw Error(ErrorKind::DivergentIntegral, "integrand is not real on the integration interval");
  if (beta_eff != beta) norm = boost::math::beta(alpha, beta_eff) / boost::math::beta(alpha, beta);

  auto eval = [&](int n) {
    const auto rule = quadrature::gauss_jacobi_unit(n, alpha, beta_eff);
    double s = 0;
    for (int i = 0; i < n; ++i)
      s += rule.weights[i] * detail::linear_factor(x, rule.nodes[i], rho) * detail::linear_factor(y, rule.nodes[i], lambda);
    return s * norm;
  };
  double prev = eval(8);
  for (int n = 16; n <= 1024; n *= 2) {
    const double cur = eval(n);
    if (!std::isfinite(cur)) throw Error(ErrorKind::DivergentIntegral, "integrand is not finite");
    const double err = std::abs(cur - prev);
    if (err <= rel_tol * std::abs(cur) || err == 0) return {cur, err, n};
    prev = cur;
  }
  throw Error(ErrorKind::Nonconvergent, "Gauss-Jacobi orders up to 1024 did not converge");
}

namespace detail {

/// Gauss series 2F1(a, b; c; z) for |z| < 1 with geometric tail bound.
inline double gauss_series(double a, double b, double c, double z, double tail = 1e-17) {
  double term = 1, sum = 1;
  for (int k = 0; k < 200000; ++k) {
    const double ratio = (a + k) * (b + k) / ((c + k) * (k + 1)) * z;
    term *= ratio;
    sum += term;
    if (term == 0) return sum;
    const double r = std::abs((a + k + 1) * (b + k + 1) / ((c + k + 1) * (k + 2)) * z);
    if (k > 4 && r < 1 && std::abs(term) * r / (1 - r) <= tail * std::abs(sum)) return sum;
  }
  throw Error(ErrorKind::Nonconvergent, "Gauss series did not reach its tail bound");
}

}  // namespace detail

/// Double power series F1(alpha; rho, lambda; c; x, y) = sum_m (alpha)_m (rho)_m / ((c)_m m!) x^m
/// 2F1(alpha + m, lambda; c + m; y), summed until the geometric tail bound drops below 1e-12 relative.
inline double appell_f1_series(double alpha, double rho, double lambda, double c, double x, double y) {
  if (!(std::abs(x) < 1) || !(std::abs(y) < 1))
    throw Error(ErrorKind::Nonconvergent, "the double series needs |x| < 1 and |y| < 1");
  double coef = 1, sum = 0;
  for (int m = 0; m < 200000; ++m) {
    const double inner = detail::gauss_series(alpha + m, lambda, c + m, y);
    const double term = coef * inner;
    sum += term;
    coef *= (alpha + m) * (rho + m) / ((c + m) * (m + 1)) * x;
    if (coef == 0) return sum;
    const double r = std::abs((alpha + m + 1) * (rho + m + 1) / ((c + m + 1) * (m + 2)) * x);
    // inner sums are bounded by (1 - |y|)^(-|lambda|)-type growth; use the current inner as scale
    const double bound = std::abs(coef) * std::max(1.0, std::abs(inner)) / (1 - std::min(r, 0.999999));
    if (m > 4 && r < 1 && bound <= 1e-14 * std::abs(sum)) return sum;
  }
  throw Error(ErrorKind::Nonconvergent, "double series did not reach its tail bound");
}

}  // namespace qlandau::special
