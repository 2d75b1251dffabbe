/**
 * \file config.hpp
 * \brief Numerical tolerances shared by every module.
 */
#pragma once

namespace qlandau {

/// Central tolerance record. Values are double-precision defaults.
struct Tolerances {
  /// Chart roundtrips (elliptic and parabolic transforms).
  static constexpr double chart_roundtrip = 1e-12;
  /// Distance kept from coordinate singularities (|eta| = 1, xi = 1, xi = 0).
  static constexpr double guard_band = 1e-10;
  /// Formula-audit threshold separating "consistent" from anything else.
  static constexpr double audit_consistent = 1e-10;
  /// Target relative accuracy of quadratures.
  static constexpr double quadrature = 1e-12;
  /// Turning points are bisected to this relative width (or machine precision).
  static constexpr double turning_point = 1e-15;
};

}  // namespace qlandau
