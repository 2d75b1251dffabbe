/**
 * \file quadrature.hpp
 * \brief Gauss-Legendre and Gauss-Jacobi rules, composite panel quadrature.
 */
#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qlandau/error.hpp"

namespace qlandau::quadrature {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n).
inline std::shared_ptr<const Rule> gauss_legendre(int n) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const Rule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  if (auto it = cache.find(n); it != cache.end()) return it->second;

  auto rule = std::make_shared<Rule>();
  rule->nodes.resize(n);
  rule->weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1);
    const double w = 2 / ((1 - x * x) * dp * dp);
    rule->nodes[i] = -x;
    rule->nodes[n - 1 - i] = x;
    rule->weights[i] = rule->weights[n - 1 - i] = w;
  }
  cache.emplace(n, rule);
  return rule;
}

/// Gauss-Jacobi rule for the weight t^(alpha-1) (1-t)^(beta-1) on [0, 1], weights normalized to sum 1
/// (Golub-Welsch on the Jacobi matrix).
inline Rule gauss_jacobi_unit(int n, double alpha, double beta) {
  // Jacobi weight (1-x)^A (1+x)^B on [-1,1] with t = (1+x)/2.
  const double A = beta - 1, B = alpha - 1;
  Eigen::VectorXd diag(n), sub(n > 1 ? n - 1 : 1);
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + A + B;
    if (k == 0)
      diag(k) = (B - A) / (A + B + 2);
    else
      diag(k) = (B * B - A * A) / (s * (s + 2));
  }
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + A + B;
    double num = 4.0 * k * (k + A) * (k + B) * (k + A + B);
    double den = s * s * (s + 1) * (s - 1);
    if (k == 1) {
      num = 4.0 * (1 + A) * (1 + B);
      den = (2 + A + B) * (2 + A + B) * (3 + A + B);
    }
    sub(k - 1) = std::sqrt(num / den);
  }
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  if (n == 1) {
    r.nodes[0] = (1 + diag(0)) / 2;
    r.weights[0] = 1;
    return r;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::Nonconvergent, "Jacobi matrix eigen-decomposition failed");
  double total = 0;
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = (1 + es.eigenvalues()(i)) / 2;
    const double v0 = es.eigenvectors()(0, i);
    r.weights[i] = v0 * v0;
    total += r.weights[i];
  }
  for (auto& w : r.weights) w /= total;
  return r;
}

/// Composite Gauss-Legendre over [lo, hi] with `panels` equal panels of order `order`.
template <class F>
double composite(F&& f, double lo, double hi, int panels, int order = 20) {
  const auto rule = gauss_legendre(order);
  const double h = (hi - lo) / panels;
  double sum = 0;
  for (int k = 0; k < panels; ++k) {
    const double c = lo + (k + 0.5) * h;
    double part = 0;
    for (int i = 0; i < order; ++i) part += rule->weights[i] * f(c + 0.5 * h * rule->nodes[i]);
    sum += part * 0.5 * h;
  }
  return sum;
}

struct Estimate {
  double value;
  double error;
  int panels;
};

/// Panel doubling until two successive composite estimates agree to `rel_tol` (relative to |value| + scale).
/// A difference that stops shrinking below `floor_tol` is taken as the rounding floor of the integrand.
template <class F>
Estimate adaptive(F&& f, double lo, double hi, double rel_tol = 1e-13, double scale = 0, int max_panels = 1 << 14,
                  double floor_tol = 1e-9) {
  if (lo == hi) return {0, 0, 0};
  int panels = 1;
  double prev = composite(f, lo, hi, panels);
  double prev_err = std::numeric_limits<double>::infinity();
  for (panels = 2; panels <= max_panels; panels *= 2) {
    const double cur = composite(f, lo, hi, panels);
    const double err = std::abs(cur - prev);
    const double ref = std::abs(cur) + scale;
    if (err <= rel_tol * ref) return {cur, err, panels};
    if (err >= 0.5 * prev_err && err <= floor_tol * ref) return {cur, err, panels};
    prev = cur;
    prev_err = err;
  }
  throw Error(ErrorKind::Nonconvergent, "composite quadrature did not converge under panel doubling");
}

}  // namespace qlandau::quadrature
