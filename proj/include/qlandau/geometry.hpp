/**
 * \file geometry.hpp
 * \brief Cylindrical, prolate elliptic and parabolic charts of R^3.
 *
 * The elliptic chart has foci at (0,0,-a) and (0,0,a); xi >= 1 labels the
 * confocal ellipsoids and eta in [-1,1] the confocal hyperboloids. The
 * parabolic chart labels confocal paraboloids with xi, eta >= 0.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "qlandau/error.hpp"

namespace qlandau::geometry {

/// Wraps an angle into [0, 2*pi).
inline double normalize_angle(double phi) {
  constexpr double two_pi = 2 * std::numbers::pi;
  double r = std::fmod(phi, two_pi);
  if (r < 0) r += two_pi;
  if (r >= two_pi) r = 0;
  return r;
}

class CylPoint {
 public:
  CylPoint(double rho, double z, double phi) : rho_(rho), z_(z), phi_(normalize_angle(phi)) {
    if (!(rho >= 0) || !std::isfinite(rho) || !std::isfinite(z) || !std::isfinite(phi))
      throw Error(ErrorKind::DomainError, "cylindrical point requires finite rho >= 0");
  }
  double rho() const { return rho_; }
  double z() const { return z_; }
  double phi() const { return phi_; }

 private:
  double rho_, z_, phi_;
};

class EllipticPoint {
 public:
  EllipticPoint(double xi, double eta, double phi, double a) : xi_(xi), eta_(eta), phi_(normalize_angle(phi)), a_(a) {
    if (!(a > 0) || !std::isfinite(a)) throw Error(ErrorKind::DomainError, "focal half-separation a must be > 0");
    if (!(xi >= 1) || !std::isfinite(xi)) throw Error(ErrorKind::DomainError, "elliptic xi must be >= 1");
    if (!(std::abs(eta) <= 1)) throw Error(ErrorKind::DomainError, "elliptic eta must lie in [-1, 1]");
  }
  double xi() const { return xi_; }
  double eta() const { return eta_; }
  double phi() const { return phi_; }
  double a() const { return a_; }

 private:
  double xi_, eta_, phi_, a_;
};

class ParabolicPoint {
 public:
  ParabolicPoint(double xi, double eta, double phi) : xi_(xi), eta_(eta), phi_(normalize_angle(phi)) {
    if (!(xi >= 0) || !(eta >= 0) || !std::isfinite(xi) || !std::isfinite(eta))
      throw Error(ErrorKind::DomainError, "parabolic xi and eta must be finite and >= 0");
  }
  double xi() const { return xi_; }
  double eta() const { return eta_; }
  double phi() const { return phi_; }

 private:
  double xi_, eta_, phi_;
};

struct FocalDistances {
  double r1;  ///< distance to (0,0,-a)
  double r2;  ///< distance to (0,0,+a)
};

inline FocalDistances focal_distances(const CylPoint& p, double a) {
  if (!(a > 0)) throw Error(ErrorKind::DomainError, "focal half-separation a must be > 0");
  return {std::hypot(p.rho(), p.z() + a), std::hypot(p.rho(), p.z() - a)};
}

inline CylPoint elliptic_to_cylindrical(const EllipticPoint& p) {
  const double xi = p.xi(), eta = p.eta(), a = p.a();
  const double rho = a * std::sqrt((xi - 1) * (xi + 1) * (1 - eta) * (1 + eta));
  return {rho, a * xi * eta, p.phi()};
}

/// Inverse elliptic transform through the focal distances.
inline EllipticPoint cylindrical_to_elliptic(const CylPoint& p, double a) {
  const auto [r1, r2] = focal_distances(p, a);
  const double sum = r1 + r2;
  double xi = sum / (2 * a);
  // r1 - r2 = 4 a z / (r1 + r2) avoids cancellation near the axis.
  double eta = 2 * p.z() / sum;
  xi = std::max(xi, 1.0);
  eta = std::clamp(eta, -1.0, 1.0);
  return {xi, eta, p.phi(), a};
}

inline CylPoint parabolic_to_cylindrical(const ParabolicPoint& p) {
  return {std::sqrt(p.xi() * p.eta()), (p.xi() - p.eta()) / 2, p.phi()};
}

/// Solves xi*eta = rho^2, xi - eta = 2z with xi, eta >= 0.
inline ParabolicPoint cylindrical_to_parabolic(const CylPoint& p) {
  const double rho2 = p.rho() * p.rho();
  const double r = std::hypot(p.rho(), p.z());
  double xi, eta;
  if (p.z() >= 0) {
    xi = r + p.z();
    eta = xi > 0 ? rho2 / xi : 0.0;
  } else {
    eta = r - p.z();
    xi = eta > 0 ? rho2 / eta : 0.0;
  }
  return {xi, eta, p.phi()};
}

}  // namespace qlandau::geometry
