/**
 * \file hjq.hpp
 * \brief Hamilton-Jacobi quadrature: printed radial integrands, (b1, b2)
 *        reductions, turning points, orbit quadrature and formula audits.
 *
 * The momentum oracle p_u^2 = (E - U(u)) / K(u) is the reference for every
 * printed closed form. Closed forms are evaluated exactly as printed.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qlandau/config.hpp"
#include "qlandau/model.hpp"
#include "qlandau/quadrature.hpp"

namespace qlandau::hjq {

// ---------------------------------------------------------------------------
// Printed radicands

enum class Radicand {
  Free,           ///< free-particle radicand of the surface
  General,        ///< Landau radicand with arbitrary charges
  Reduced,        ///< Landau radicand at the reducible charge configuration
};

inline std::string to_string(Radicand r) {
  switch (r) {
    case Radicand::Free: return "free";
    case Radicand::General: return "general";
    case Radicand::Reduced: return "reduced";
  }
  return "unknown";
}

/// A printed radicand F(u) together with the squared prefactor D(u) such that the
/// printed generating function implies p_u^2 = F(u) / D(u).
struct PrintedRadicand {
  std::function<double(double)> value;
  std::function<double(double)> prefactor_squared;
  std::string name;
  double implied_momentum_squared(double u) const { return value(u) / prefactor_squared(u); }
};

/// Builds the printed radicand of the requested kind for the surface of m.
inline PrintedRadicand build_radicand(const SurfaceModel& m, double E, double p_phi, Radicand kind) {
  require_surface(m, "build_radicand");
  const double pf = p_phi;
  PrintedRadicand r;
  if (m.is_elliptic_surface()) {
    const double a = m.a(), e = m.e(), e2 = e * e;
    r.prefactor_squared = [=](double u) { return e2 * (1 - e2) * (1 - u * u) * (1 - u * u); };
    const bool ell = m.is_ellipsoid();
    if (kind == Radicand::Free) {
      r.name = ell ? "ellipsoid free radicand" : "hyperboloid free radicand";
      r.value = [=](double u) {
        return 2 * a * a * (1 - e2) * (1 - e2 * u * u) * (1 - u * u) * E - e2 * (1 - e2 * u * u) * pf * pf;
      };
      return r;
    }
    if (m.is_free()) throw Error(ErrorKind::InvalidCombination, "Landau radicands need a dyon background");
    const auto& d = m.dyons();
    const double gp = d.g_plus(), gm = d.g_minus(), qp = d.q_plus(), qm = d.q_minus();
    if (kind == Radicand::General) {
      if (ell) {
        const double gamma_el = (e2 * gp * gp - 2 * e * pf * gm) / (1 - e2) + 2 * a * qp / e;
        r.name = "ellipsoid general radicand";
        r.value = [=](double h) {
          return 2 * a * a * (1 - e2) * (1 - e2 * h * h) * (1 - h * h) * E - e2 * (1 - e2 * h * h) * pf * pf -
                 gamma_el * (1 - e2) * (1 - h * h) + 2 * (1 - e2) * (pf * gp - a * qm) * h +
                 2 * a * qm * (1 - e2) * h * h * h - gm * gm * (1 - e2);
        };
      } else {
        const double gamma_hyp = (e2 * gm * gm - 2 * e * pf * gp) / (1 - e2) - 2 * a * qm / e;
        r.name = "hyperboloid general radicand";
        r.value = [=](double x) {
          return 2 * a * a * (1 - e2) * (1 - e2 * x * x) * (1 - x * x) * E - e2 * (1 - e2 * x * x) * pf * pf -
                 gamma_hyp * (1 - e2) * (1 - x * x) + 2 * (1 - e2) * (-pf * gm - a * qp) * x +
                 2 * a * qm * (1 - e2) * x * x * x + gp * gp * (1 - e2);
        };
      }
      return r;
    }
    // reduced: effective charges (q1, g1)
    const double q = d.q1, g = d.g1;
    r.name = ell ? "ellipsoid reduced radicand" : "hyperboloid reduced radicand";
    r.value = [=](double u) {
      return 2 * a * a * e * (1 - e2) * (1 - e2 * u * u) * (1 - u * u) * E - e2 * e * (1 - e2 * u * u) * pf * pf +
             4 * (pf * e2 * g - a * q * (1 - e2)) * (1 - u * u) - 4 * g * g * e * (1 - e2);
    };
    return r;
  }
  // paraboloid
  const double p = m.p();
  if (kind == Radicand::Free) {
    r.name = "paraboloid free radicand";
    r.value = [=](double xi) { return (p * E * xi - pf * pf) * (p + 2 * xi); };
    r.prefactor_squared = [=](double xi) { return 4 * p * xi * xi; };
    return r;
  }
  if (m.is_free()) throw Error(ErrorKind::InvalidCombination, "Landau radicands need a parabolic background");
  const auto& b = m.parabolic();
  const double B = b.bfield, Ef = b.efield, g = b.g;
  const double gamma_p = detail::paraboloid_gamma(p, b, pf);
  r.name = "paraboloid general radicand";
  r.value = [=](double xi) {
    return -B * B * xi * xi * xi * xi + 4 * Ef * xi * xi * xi + 8 * (-g * B + E + 0.5 * pf * B) * xi * xi +
           4 * (-gamma_p + p * E + 0.5 * p * pf * B) * xi - 4 * (pf + g) * (pf + g);
  };
  r.prefactor_squared = [](double xi) { return 16 * xi * xi; };
  return r;
}

// ---------------------------------------------------------------------------
// (b1, b2) reductions

enum class XDomain { UnitInterval, NonPositive, NonNegative };

inline std::string to_string(XDomain d) {
  switch (d) {
    case XDomain::UnitInterval: return "[0,1]";
    case XDomain::NonPositive: return "(-inf,0]";
    case XDomain::NonNegative: return "[0,inf)";
  }
  return "?";
}

/// x^2 + b1 x + b2 with the momentum relation p_u^2 = momentum_coefficient (x^2 + b1 x + b2) / x^2,
/// x = 1 - u^2 on elliptic charts and x = xi on the paraboloid.
struct RadicalQuadratic {
  double b1 = 0, b2 = 0;
  XDomain domain = XDomain::UnitInterval;
  double scale = 0;                 ///< overall prefactor of the generating function
  double momentum_coefficient = 0;  ///< 2 a^2 E (elliptic charts) or E / 2 (paraboloid)
  std::string source;
};

inline double x_of_u(const SurfaceModel& m, double u) { return m.is_paraboloid() ? u : 1 - u * u; }

inline RadicalQuadratic quadratic_shell(const SurfaceModel& m, double E) {
  RadicalQuadratic rq;
  if (m.is_paraboloid()) {
    rq.domain = XDomain::NonNegative;
    rq.scale = std::sqrt(E / 2);
    rq.momentum_coefficient = E / 2;
  } else {
    rq.domain = m.is_ellipsoid() ? XDomain::UnitInterval : XDomain::NonPositive;
    rq.scale = -m.a() * std::sqrt(E / 2);
    rq.momentum_coefficient = 2 * m.a() * m.a() * E;
  }
  return rq;
}

/// The printed (b1, b2) for free and reducible configurations.
inline RadicalQuadratic b_constants(const SurfaceModel& m, double E, double p_phi) {
  require_surface(m, "b_constants");
  if (!(E > 0)) throw Error(ErrorKind::DomainError, "b constants need E > 0");
  const auto rep = classify_reducible(m);
  if (!rep.reducible) throw Error(ErrorKind::NotReducible, "charges do not satisfy " + rep.matched_condition);
  RadicalQuadratic rq = quadratic_shell(m, E);
  const double pf = p_phi;
  if (m.is_paraboloid()) {
    const double p = m.p();
    if (m.is_free()) {
      rq.b1 = p / 2 - pf * pf / (p * E);
      rq.b2 = -pf * pf / (2 * E);
      rq.source = "paraboloid free constants";
    } else {
      const double q = rep.q, g = rep.g;
      rq.b1 = p / 2 - (2 * q * p + (pf - g) * (pf - g)) / (E * p);
      rq.b2 = -(pf + g) * (pf + g) / (2 * E);
      rq.source = "paraboloid reduced constants";
    }
    return rq;
  }
  const double a = m.a(), e = m.e(), e2 = e * e;
  if (m.is_free()) {
    rq.b1 = (2 * a * a * E * (1 - e2) * (1 - e2) - pf * pf * e2 * e2) / (2 * a * a * e2 * E * (1 - e2));
    rq.b2 = -pf * pf / (2 * a * a * E);
    rq.source = "elliptic free constants";
  } else {
    const double q = rep.q, g = rep.g;
    rq.b1 = (2 * E * a * a * e * (1 - e2) * (1 - e2) - 4 * a * q * (1 - e2) - e2 * e2 * e * pf * pf + 4 * pf * g * e2) /
            (2 * E * a * a * (1 - e2) * e2 * e);
    rq.b2 = -(e2 * pf * pf + 4 * g * g) / (2 * E * a * a * e2);
    rq.source = "elliptic modified constants";
  }
  return rq;
}

/// (b1, b2) obtained by expanding the oracle p_u^2 at the reducible charges. Free constants for free
/// backgrounds; on the paraboloid these coincide with the printed reduced constants.
inline RadicalQuadratic derived_b_constants(const SurfaceModel& m, double E, double p_phi) {
  require_surface(m, "derived_b_constants");
  if (!(E > 0)) throw Error(ErrorKind::DomainError, "b constants need E > 0");
  const auto rep = classify_reducible(m);
  if (!rep.reducible) throw Error(ErrorKind::NotReducible, "charges do not satisfy " + rep.matched_condition);
  if (m.is_free() || m.is_paraboloid()) {
    RadicalQuadratic rq = b_constants(m, E, p_phi);
    rq.source = m.is_free() ? rq.source : "paraboloid derived constants";
    return rq;
  }
  RadicalQuadratic rq = quadratic_shell(m, E);
  const double a = m.a(), e = m.e(), e2 = e * e, pf = p_phi, g = rep.g;
  const double q = m.is_ellipsoid() ? rep.q : -rep.q;
  rq.b1 = (2 * a * a * (1 - e2) * (1 - e2) * E - e2 * e2 * pf * pf + 4 * e2 * e * pf * g - 4 * a * q * e * (1 - e2)) /
          (2 * a * a * (1 - e2) * e2 * E);
  rq.b2 = -(pf * pf + 4 * g * g) / (2 * a * a * E);
  rq.source = "elliptic derived constants";
  return rq;
}

/// Momentum implied by a RadicalQuadratic at shape coordinate u.
inline double implied_momentum_squared(const SurfaceModel& m, const RadicalQuadratic& rq, double u) {
  const double x = x_of_u(m, u);
  return rq.momentum_coefficient * (x * x + rq.b1 * x + rq.b2) / (x * x);
}

struct FittedQuadratic {
  RadicalQuadratic rq;
  double max_residual = 0;  ///< max |c(x) - (b1 x + b2)| relative to max |c|
};

/// Least-squares fit of c(x) = p_u^2 x^2 / coefficient - x^2 = b1 x + b2 over chart samples.
inline FittedQuadratic fitted_b_constants(const SurfaceModel& m, double E, double p_phi, int samples = 64) {
  require_surface(m, "fitted_b_constants");
  if (!(E > 0)) throw Error(ErrorKind::DomainError, "b constants need E > 0");
  FittedQuadratic out;
  out.rq = quadratic_shell(m, E);
  out.rq.source = "oracle fit";
  std::vector<double> xs, cs;
  for (int i = 0; i < samples; ++i) {
    const double t = (i + 0.5) / samples;
    double u;
    if (m.is_ellipsoid())
      u = -0.95 + 1.9 * t;
    else if (m.is_hyperboloid())
      u = 1.05 + 3 * t;
    else
      u = 0.05 + 5 * t;
    const double x = x_of_u(m, u);
    const double p2 = radial_momentum_squared(m, u, E, p_phi);
    xs.push_back(x);
    cs.push_back(p2 * x * x / out.rq.momentum_coefficient - x * x);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += cs[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * cs[i];
  }
  const double det = n * sxx - sx * sx;
  out.rq.b1 = (n * sxy - sx * sy) / det;
  out.rq.b2 = (sy - out.rq.b1 * sx) / n;
  double cmax = 0, rmax = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    cmax = std::max(cmax, std::abs(cs[i]));
    rmax = std::max(rmax, std::abs(cs[i] - out.rq.b1 * xs[i] - out.rq.b2));
  }
  out.max_residual = cmax > 0 ? rmax / cmax : rmax;
  return out;
}

// ---------------------------------------------------------------------------
// Turning points

enum class TurningSource { ClosedForm, Oracle };

struct TurningPoints {
  double a_minus = 0, a_plus = 0;
  TurningSource source = TurningSource::ClosedForm;
  double u_lower = 0, u_upper = 0;  ///< oracle only: edges of the allowed band
  double x_lower = 0, x_upper = 0;  ///< oracle only: x-images of the band, sorted
};

/// a_pm = (2 + b1 +- sqrt(b1^2 - 4 b2)) / 2, as printed.
inline TurningPoints turning_points_closed(const RadicalQuadratic& rq) {
  const double disc = rq.b1 * rq.b1 - 4 * rq.b2;
  if (disc < 0) throw Error(ErrorKind::ComplexRoots, "b1^2 - 4 b2 < 0");
  TurningPoints tp;
  tp.a_minus = (2 + rq.b1 - std::sqrt(disc)) / 2;
  tp.a_plus = (2 + rq.b1 + std::sqrt(disc)) / 2;
  return tp;
}

/// Real roots of x^2 + b1 x + b2, ascending (cancellation-free form).
inline std::pair<double, double> quadratic_roots(double b1, double b2) {
  const double disc = b1 * b1 - 4 * b2;
  if (disc < 0) throw Error(ErrorKind::ComplexRoots, "x^2 + b1 x + b2 has complex roots");
  const double s = std::sqrt(disc);
  const double q = -0.5 * (b1 + (b1 >= 0 ? s : -s));
  double r1 = q, r2 = q != 0 ? b2 / q : 0.0;
  if (q == 0) r1 = r2 = 0;
  return {std::min(r1, r2), std::max(r1, r2)};
}

/// Band of classical motion around the potential minimum; both edges are bisected to machine precision.
inline Band oracle_band(const SurfaceModel& m, double E, double p_phi) {
  return allowed_band(m, E, p_phi, std::nullopt);
}

/// Turning points from the momentum oracle. On elliptic charts a_minus is the squared band edge
/// |u|^2 (the variable of the printed a_pm) and a_plus follows from the oracle-fitted quadratic.
inline TurningPoints turning_points_oracle(const SurfaceModel& m, double E, double p_phi) {
  require_surface(m, "turning_points_oracle");
  const Band band = oracle_band(m, E, p_phi);
  if (!band.bounded()) throw Error(ErrorKind::NoBoundMotion, "the allowed band is not bounded by two turning points");
  TurningPoints tp;
  tp.source = TurningSource::Oracle;
  tp.u_lower = band.lower;
  tp.u_upper = band.upper;
  double xl = x_of_u(m, band.lower), xu = x_of_u(m, band.upper);
  if (m.is_ellipsoid() && band.lower < 0 && band.upper > 0) xu = 1, xl = std::min(xl, x_of_u(m, band.upper));
  tp.x_lower = std::min(xl, xu);
  tp.x_upper = std::max(xl, xu);
  if (m.is_paraboloid()) {
    tp.a_minus = tp.x_lower;
    tp.a_plus = tp.x_upper;
    return tp;
  }
  tp.a_minus = std::min(band.lower * band.lower, band.upper * band.upper);
  if (band.lower < 0 && band.upper > 0) tp.a_minus = std::min(band.lower * band.lower, band.upper * band.upper);
  const auto fit = fitted_b_constants(m, E, p_phi);
  tp.a_plus = (1 + fit.rq.b1 + fit.rq.b2) / tp.a_minus;
  if (tp.a_plus < tp.a_minus) std::swap(tp.a_plus, tp.a_minus);
  return tp;
}

// ---------------------------------------------------------------------------
// Orbit quadrature

struct OrbitIntegral {
  double time = 0;
  double delta_phi = 0;
};

namespace detail {

/// Integrands dt/du = 1 / (2 K sqrt(R)) and dphi/du = dU/dp_phi / (2 K sqrt(R)) after absorbing the
/// square-root zeros of R at turning points.
struct BandIntegrand {
  const SurfaceModel& m;
  double E, p_phi;
  Band band;
  mutable double theta_s = -1;

  double K(double u) const { return kinetic_coefficient(m, u); }
  double dU(double u) const { return gradients(m, {u, 0, 0, p_phi}).d_pphi; }
  double R(double u) const { return radial_momentum_squared(m, u, E, p_phi); }

  // theta map for a band with two turning points: u = c - h cos(theta)
  double c() const { return (band.lower + band.upper) / 2; }
  double h() const { return (band.upper - band.lower) / 2; }
  double theta_of(double u) const { return std::acos(std::clamp((c() - u) / h(), -1.0, 1.0)); }

  /// R / (h^2 sin^2 theta), smooth and even about both endpoints. Within theta_s of an endpoint the
  /// quotient is dominated by cancellation in E - U, so it is continued by A + B theta^2 fitted at
  /// theta_s and 2 theta_s.
  double q_raw(double th) const {
    const double s = h() * std::sin(th);
    return R(c() - h() * std::cos(th)) / (s * s);
  }
  double theta_split() const {
    if (theta_s < 0) {
      const double uc = c();
      const double Uc = potential(m, uc, p_phi);
      const double nu = 4 * std::numeric_limits<double>::epsilon() * (std::abs(E) + std::abs(Uc)) /
                        std::max(std::abs(E - Uc), std::numeric_limits<double>::min());
      theta_s = std::clamp(std::pow(nu, 1.0 / 6), 1e-5, 0.1);
    }
    return theta_s;
  }
  double q_of(double th) const {
    const double ts = theta_split();
    const double d = std::min(th, std::numbers::pi - th);
    double q;
    if (d >= ts) {
      q = q_raw(th);
    } else {
      const double side = th < std::numbers::pi / 2 ? 0.0 : std::numbers::pi;
      const double dir = side == 0 ? 1.0 : -1.0;
      const double q1 = q_raw(side + dir * ts), q2 = q_raw(side + dir * 2 * ts);
      const double B = (q2 - q1) / (3 * ts * ts);
      q = q1 + B * (d * d - ts * ts);
    }
    return q > 0 ? q : std::numeric_limits<double>::min();
  }

  /// Returns (dt/dtheta, dphi/dtheta).
  std::pair<double, double> theta_rates(double theta) const {
    const double th = std::clamp(theta, 0.0, std::numbers::pi);
    const double u = c() - h() * std::cos(th);
    const double base = 1 / (2 * K(u) * std::sqrt(q_of(th)));
    return {base, base * dU(u)};
  }

  /// s-map for a single lower (sign=+1) or upper (sign=-1) turning point: u = edge + sign s^2.
  std::pair<double, double> s_rates(double s, double edge, int sign) const {
    const double ss = std::max(std::abs(s), 1e-8);
    const double u = edge + sign * ss * ss;
    double q = R(u) / (ss * ss);
    if (!(q > 0)) q = std::numeric_limits<double>::min();
    const double base = 1 / (K(u) * std::sqrt(q));
    return {base, base * dU(u)};
  }

  std::pair<double, double> u_rates(double u) const {
    const double r = R(u);
    const double base = 1 / (2 * K(u) * std::sqrt(std::max(r, std::numeric_limits<double>::min())));
    return {base, base * dU(u)};
  }
};

template <class F>
OrbitIntegral integrate_pair(F&& rates, double lo, double hi) {
  if (lo == hi) return {};
  auto ft = [&](double x) { return rates(x).first; };
  auto fp = [&](double x) { return rates(x).second; };
  const auto t = quadrature::adaptive(ft, lo, hi, 1e-13);
  // phi rate can change sign; measure its convergence against the time scale of the integrand magnitude
  double fmag = 0;
  {
    const int n = 16;
    for (int i = 0; i < n; ++i) fmag = std::max(fmag, std::abs(fp(lo + (hi - lo) * (i + 0.5) / n)));
  }
  const auto p = quadrature::adaptive(fp, lo, hi, 1e-13, fmag * std::abs(hi - lo) * 1e-3);
  return {t.value, p.value};
}

}  // namespace detail

/// Elapsed time and phi advance while u moves from u_from to u_to inside one allowed band.
inline OrbitIntegral orbit_quadrature(const SurfaceModel& m, double E, double p_phi, double u_from, double u_to) {
  require_surface(m, "orbit_quadrature");
  if (u_from == u_to) return {};
  if (!(radial_momentum_squared(m, u_from, E, p_phi) >= 0))
    throw Error(ErrorKind::ForbiddenRegion, "u_from lies in a classically forbidden region");
  const Band band = allowed_band(m, E, p_phi, u_from);
  const double lo = std::min(u_from, u_to), hi = std::max(u_from, u_to);
  const double slack = 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi));
  if (lo < band.lower - slack || hi > band.upper + slack)
    throw Error(ErrorKind::ForbiddenRegion, "the path leaves the classically allowed band");
  detail::BandIntegrand bi{m, E, p_phi, band};
  const double clo = std::max(lo, band.lower), chi = std::min(hi, band.upper);
  if (band.bounded()) {
    return detail::integrate_pair([&](double th) { return bi.theta_rates(th); }, bi.theta_of(clo), bi.theta_of(chi));
  }
  if (band.lower_turning) {
    const double s0 = std::sqrt(clo - band.lower), s1 = std::sqrt(chi - band.lower);
    return detail::integrate_pair([&](double s) { return bi.s_rates(s, band.lower, +1); }, s0, s1);
  }
  if (band.upper_turning) {
    const double s0 = std::sqrt(band.upper - chi), s1 = std::sqrt(band.upper - clo);
    return detail::integrate_pair([&](double s) { return bi.s_rates(s, band.upper, -1); }, s0, s1);
  }
  return detail::integrate_pair([&](double u) { return bi.u_rates(u); }, clo, chi);
}

struct RadialCycle {
  double period = 0;
  double phi_advance = 0;
  Band band{};
};

/// Full radial period and apsidal advance (twice the turning-point-to-turning-point integrals).
inline RadialCycle radial_cycle(const SurfaceModel& m, double E, double p_phi, std::optional<double> seed = {}) {
  const Band band = allowed_band(m, E, p_phi, seed);
  if (!band.bounded()) throw Error(ErrorKind::NoBoundMotion, "the allowed band is not bounded by two turning points");
  detail::BandIntegrand bi{m, E, p_phi, band};
  const auto half =
      detail::integrate_pair([&](double th) { return bi.theta_rates(th); }, 0.0, std::numbers::pi);
  return {2 * half.time, 2 * half.delta_phi, band};
}

/// Parametric orbit u(t), phi(t) from the quadratures, for bound bands.
class QuadratureOrbit {
 public:
  QuadratureOrbit(const SurfaceModel& m, const PhasePoint& s0, int panels = 256)
      : m_(m), p_phi_(s0.p_phi), phi0_(s0.phi), panels_(panels) {
    E_ = energy(m, s0);
    band_ = allowed_band(m, E_, p_phi_, s0.u);
    if (!band_.bounded()) throw Error(ErrorKind::NoBoundMotion, "the allowed band is not bounded by two turning points");
    detail::BandIntegrand bi{m_, E_, p_phi_, band_};
    const auto rule = quadrature::gauss_legendre(order_);
    cum_t_.assign(panels_ + 1, 0);
    cum_p_.assign(panels_ + 1, 0);
    const double w = std::numbers::pi / panels_;
    for (int k = 0; k < panels_; ++k) {
      const auto seg = panel_integral(bi, k * w, (k + 1) * w);
      cum_t_[k + 1] = cum_t_[k] + seg.first;
      cum_p_[k + 1] = cum_p_[k] + seg.second;
    }
    half_t_ = cum_t_.back();
    half_p_ = cum_p_.back();
    const double th0 = bi.theta_of(std::clamp(s0.u, band_.lower, band_.upper));
    theta0_ = s0.p_u >= 0 ? th0 : 2 * std::numbers::pi - th0;
    const auto tp0 = unwrapped(theta0_);
    tau0_ = tp0.first;
    phase0_ = tp0.second;
  }

  double energy_value() const { return E_; }
  double period() const { return 2 * half_t_; }
  double phi_advance() const { return 2 * half_p_; }
  const Band& band() const { return band_; }

  /// (u, phi) at time t after the initial state.
  std::pair<double, double> at(double t) const {
    const double target = tau0_ + t;
    const double n = std::floor(target / half_t_);
    const double rem = target - n * half_t_;
    const long k = static_cast<long>(n);
    double theta, phase;
    if (k % 2 == 0) {
      const double th = invert(rem);
      theta = th;
      phase = n * half_p_ + partial(th).second;
    } else {
      const double th = invert(half_t_ - rem);
      theta = -th;
      phase = n * half_p_ + half_p_ - partial(th).second;
    }
    const double c = (band_.lower + band_.upper) / 2, h = (band_.upper - band_.lower) / 2;
    return {c - h * std::cos(theta), phi0_ + phase - phase0_};
  }

 private:
  std::pair<double, double> panel_integral(const detail::BandIntegrand& bi, double lo, double hi) const {
    const auto rule = quadrature::gauss_legendre(order_);
    double st = 0, sp = 0;
    for (int i = 0; i < order_; ++i) {
      const double x = (lo + hi) / 2 + (hi - lo) / 2 * rule->nodes[i];
      const auto r = bi.theta_rates(x);
      st += rule->weights[i] * r.first;
      sp += rule->weights[i] * r.second;
    }
    return {st * (hi - lo) / 2, sp * (hi - lo) / 2};
  }

  /// (tau, phase) accumulated from theta = 0 up to theta in [0, pi].
  std::pair<double, double> partial(double theta) const {
    const double w = std::numbers::pi / panels_;
    int k = std::clamp(static_cast<int>(theta / w), 0, panels_ - 1);
    detail::BandIntegrand bi{m_, E_, p_phi_, band_};
    const auto seg = panel_integral(bi, k * w, theta);
    return {cum_t_[k] + seg.first, cum_p_[k] + seg.second};
  }

  /// Accumulated (tau, phase) for an unwrapped theta in [0, 2 pi).
  std::pair<double, double> unwrapped(double theta) const {
    if (theta <= std::numbers::pi) return partial(theta);
    const auto r = partial(2 * std::numbers::pi - theta);
    return {2 * half_t_ - r.first, 2 * half_p_ - r.second};
  }

  double invert(double tau) const {
    if (tau <= 0) return 0;
    if (tau >= half_t_) return std::numbers::pi;
    auto it = std::upper_bound(cum_t_.begin(), cum_t_.end(), tau);
    int k = static_cast<int>(it - cum_t_.begin()) - 1;
    k = std::clamp(k, 0, panels_ - 1);
    const double w = std::numbers::pi / panels_;
    double lo = k * w, hi = (k + 1) * w;
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = lo + (hi - lo) / 2;
      if (mid == lo || mid == hi) break;
      if (partial(mid).first < tau)
        lo = mid;
      else
        hi = mid;
    }
    return lo + (hi - lo) / 2;
  }

  const SurfaceModel& m_;
  double p_phi_, phi0_;
  int panels_;
  static constexpr int order_ = 20;
  double E_ = 0;
  Band band_{};
  std::vector<double> cum_t_, cum_p_;
  double half_t_ = 0, half_p_ = 0;
  double theta0_ = 0, tau0_ = 0, phase0_ = 0;
};

// ---------------------------------------------------------------------------
// Formula audit

enum class Verdict { Consistent, ConsistentUpToConstantFactor, Inconsistent };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Consistent: return "consistent";
    case Verdict::ConsistentUpToConstantFactor: return "consistent_up_to_constant_factor";
    case Verdict::Inconsistent: return "inconsistent";
  }
  return "?";
}

struct FormulaAudit {
  std::string formula;
  std::string reference;  ///< what the formula is compared against
  std::vector<double> grid;
  std::vector<double> printed;
  std::vector<double> expected;
  std::vector<double> discrepancy;
  double max_discrepancy = 0;
  Verdict verdict = Verdict::Inconsistent;
  std::optional<double> factor;
  std::string note;
  std::vector<double> b1;  ///< per-sample b1 for the turning-point audits
};

/// Compares printed against reference values; discrepancies are relative to max |reference|.
inline FormulaAudit compare_samples(std::string formula, std::string reference, const std::vector<double>& grid,
                                    const std::vector<double>& printed, const std::vector<double>& expected,
                                    bool allow_factor = true) {
  FormulaAudit fa;
  fa.formula = std::move(formula);
  fa.reference = std::move(reference);
  fa.grid = grid;
  fa.printed = printed;
  fa.expected = expected;
  double scale = 0;
  for (double v : expected) scale = std::max(scale, std::abs(v));
  if (scale == 0) scale = 1;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    fa.discrepancy.push_back(std::abs(printed[i] - expected[i]) / scale);
    fa.max_discrepancy = std::max(fa.max_discrepancy, fa.discrepancy.back());
  }
  if (fa.max_discrepancy < Tolerances::audit_consistent) {
    fa.verdict = Verdict::Consistent;
    return fa;
  }
  if (allow_factor) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      num += printed[i] * expected[i];
      den += expected[i] * expected[i];
    }
    if (den > 0) {
      const double c = num / den;
      double worst = 0;
      for (std::size_t i = 0; i < grid.size(); ++i)
        worst = std::max(worst, std::abs(printed[i] - c * expected[i]) / (std::abs(c) * scale));
      if (c != 0 && worst < Tolerances::audit_consistent) {
        fa.verdict = Verdict::ConsistentUpToConstantFactor;
        fa.factor = c;
        return fa;
      }
    }
  }
  fa.verdict = Verdict::Inconsistent;
  return fa;
}

struct AuditReport {
  std::string model_id;
  double E = 0, p_phi = 0;
  std::vector<FormulaAudit> audits;
};

namespace detail {

inline std::vector<double> audit_grid(const SurfaceModel& m, int n = 41) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) {
    const double t = (i + 0.5) / n;
    if (m.is_ellipsoid())
      g.push_back(-0.98 + 1.96 * t);
    else if (m.is_hyperboloid())
      g.push_back(1.02 + 4 * t);
    else
      g.push_back(0.02 + 6 * t);
  }
  return g;
}

}  // namespace detail

/// Audit of the turning-point closed form on a 5x5 (E, p_phi) grid around (E, p_phi).
inline std::vector<FormulaAudit> audit_turning_points(const SurfaceModel& m, double E, double p_phi) {
  std::vector<FormulaAudit> out;
  if (!m.is_ellipsoid() || !classify_reducible(m).reducible) return out;
  std::vector<double> closed_minus, closed_plus, xroot_lo, xroot_hi, yroot_lo, yroot_hi, oracle_x, oracle_root;
  std::vector<double> b1s;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const double Ei = E * (0.7 + 0.15 * i);
      const double pj = p_phi != 0 ? p_phi * (0.5 + 0.25 * j) : 0.1 * j;
      RadicalQuadratic rq;
      try {
        rq = m.is_free() ? b_constants(m, Ei, pj) : fitted_b_constants(m, Ei, pj).rq;
        const auto tp = turning_points_closed(rq);
        const auto xr = quadratic_roots(rq.b1, rq.b2);
        const auto orc = turning_points_oracle(m, Ei, pj);
        b1s.push_back(rq.b1);
        closed_minus.push_back(tp.a_minus);
        closed_plus.push_back(tp.a_plus);
        xroot_lo.push_back(xr.first);
        xroot_hi.push_back(xr.second);
        yroot_lo.push_back(1 - xr.second);
        yroot_hi.push_back(1 - xr.first);
        oracle_x.push_back(orc.x_lower);
        // the quadratic root lying in (0, 1)
        oracle_root.push_back(xr.second > 0 && xr.second < 1 ? xr.second : xr.first);
      } catch (const Error&) {
        continue;
      }
    }
  const std::string src = m.is_free() ? "printed free constants" : "oracle-fitted constants";
  std::vector<double> idx;
  for (std::size_t k = 0; k < closed_minus.size(); ++k) idx.push_back(static_cast<double>(k));
  auto pack = [&](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> r;
    for (std::size_t k = 0; k < a.size(); ++k) {
      r.push_back(a[k]);
      r.push_back(b[k]);
    }
    return r;
  };
  std::vector<double> gidx;
  for (std::size_t k = 0; k < 2 * closed_minus.size(); ++k) gidx.push_back(static_cast<double>(k));
  auto fa = compare_samples("a_pm closed form (" + src + ")", "roots of x^2 + b1 x + b2", gidx,
                            pack(closed_minus, closed_plus), pack(xroot_lo, xroot_hi), false);
  fa.note = "samples alternate (a_-, a_+) over " + std::to_string(closed_minus.size()) + " (E, p_phi) grid points";
  for (double b : b1s) fa.b1.insert(fa.b1.end(), {b, b});
  out.push_back(fa);
  auto fb = compare_samples("a_pm closed form (" + src + ")", "1 - roots of x^2 + b1 x + b2 (roots in eta^2)", gidx,
                            pack(closed_minus, closed_plus), pack(yroot_lo, yroot_hi), false);
  fb.b1 = fa.b1;
  out.push_back(fb);
  auto fc = compare_samples("root of x^2 + b1 x + b2 in (0,1) (" + src + ")", "oracle turning point x = 1 - eta*^2",
                            idx, oracle_root, oracle_x, false);
  out.push_back(fc);
  return out;
}

/// Audits every printed closed form that applies to m at (E, p_phi) against the oracle.
inline AuditReport audit_formula(const SurfaceModel& m, double E, double p_phi) {
  require_surface(m, "audit_formula");
  AuditReport rep;
  rep.model_id = m.id();
  rep.E = E;
  rep.p_phi = p_phi;
  const auto grid = detail::audit_grid(m);
  std::vector<double> oracle;
  for (double u : grid) oracle.push_back(radial_momentum_squared(m, u, E, p_phi));

  auto radicand_audit = [&](Radicand kind) {
    const auto r = build_radicand(m, E, p_phi, kind);
    std::vector<double> printed;
    for (double u : grid) printed.push_back(r.implied_momentum_squared(u));
    return compare_samples(r.name, "oracle p_u^2", grid, printed, oracle);
  };
  auto quadratic_audit = [&](const RadicalQuadratic& rq, const std::string& name) {
    std::vector<double> printed;
    for (double u : grid) printed.push_back(implied_momentum_squared(m, rq, u));
    return compare_samples(name, "oracle p_u^2", grid, printed, oracle, false);
  };

  const auto red = classify_reducible(m);
  if (m.is_free()) {
    rep.audits.push_back(radicand_audit(Radicand::Free));
    if (E > 0) rep.audits.push_back(quadratic_audit(b_constants(m, E, p_phi), b_constants(m, E, p_phi).source));
  } else {
    rep.audits.push_back(radicand_audit(Radicand::General));
    if (red.reducible && !m.is_paraboloid()) {
      rep.audits.push_back(radicand_audit(Radicand::Reduced));
      const auto rg = build_radicand(m, E, p_phi, Radicand::General);
      const auto rr = build_radicand(m, E, p_phi, Radicand::Reduced);
      std::vector<double> pr, pg;
      for (double u : grid) {
        pr.push_back(rr.value(u));
        pg.push_back(rg.value(u));
      }
      rep.audits.push_back(compare_samples(rr.name, "printed general radicand at the reduced charges", grid, pr, pg));
    }
    if (red.reducible && E > 0) {
      const auto rq = b_constants(m, E, p_phi);
      rep.audits.push_back(quadratic_audit(rq, rq.source));
      const auto fit = fitted_b_constants(m, E, p_phi);
      FormulaAudit fa = compare_samples(rq.source + " (b1, b2)", "oracle-fitted (b1, b2)", {0, 1}, {rq.b1, rq.b2},
                                        {fit.rq.b1, fit.rq.b2}, false);
      fa.note = "fit residual " + std::to_string(fit.max_residual);
      rep.audits.push_back(fa);
      const auto dq = derived_b_constants(m, E, p_phi);
      if (dq.source != rq.source) rep.audits.push_back(quadratic_audit(dq, dq.source));
    }
  }
  for (auto& fa : audit_turning_points(m, E, p_phi)) rep.audits.push_back(std::move(fa));
  return rep;
}

inline nlohmann::json to_json(const FormulaAudit& fa) {
  nlohmann::json j;
  j["formula"] = fa.formula;
  j["reference"] = fa.reference;
  j["verdict"] = to_string(fa.verdict);
  j["max_discrepancy"] = fa.max_discrepancy;
  j["factor"] = fa.factor ? nlohmann::json(*fa.factor) : nlohmann::json(nullptr);
  j["grid"] = fa.grid;
  j["printed"] = fa.printed;
  j["expected"] = fa.expected;
  j["discrepancy"] = fa.discrepancy;
  if (!fa.note.empty()) j["note"] = fa.note;
  if (!fa.b1.empty()) j["b1"] = fa.b1;
  return j;
}

inline nlohmann::json to_json(const AuditReport& r) {
  nlohmann::json j;
  j["model"] = r.model_id;
  j["E"] = r.E;
  j["p_phi"] = r.p_phi;
  j["audits"] = nlohmann::json::array();
  for (const auto& fa : r.audits) j["audits"].push_back(to_json(fa));
  return j;
}

}  // namespace qlandau::hjq
