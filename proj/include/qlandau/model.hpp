/**
 * \file model.hpp
 * \brief Free and Landau Hamiltonians on quadrics of revolution, the
 *        two-center dyon Hamiltonian in elliptic coordinates and its
 *        parabolic limit.
 *
 * Units: unit mass, unit probe charge. On surfaces the shape coordinate u is
 * eta (ellipsoid) or xi (hyperboloid, paraboloid); in the ambient models u is
 * xi and v is eta.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

#include "qlandau/config.hpp"
#include "qlandau/error.hpp"

namespace qlandau {

struct Ellipsoid {
  double a;
  double e;
};
struct Hyperboloid {
  double a;
  double e;
};
struct Paraboloid {
  double p;
};
using SurfaceSpec = std::variant<Ellipsoid, Hyperboloid, Paraboloid>;

struct FreeBackground {};

/// Two dyons at (0,0,-a) (charges q1, g1) and (0,0,a) (charges q2, g2).
struct DyonPair {
  double q1 = 0, q2 = 0, g1 = 0, g2 = 0;
  double q_plus() const { return q1 + q2; }
  double q_minus() const { return q1 - q2; }
  double g_plus() const { return g1 + g2; }
  double g_minus() const { return g1 - g2; }
};

/// Dyon (q, g) in the focus plus parallel uniform fields along z.
struct ParabolicBackground {
  double q = 0, g = 0, efield = 0, bfield = 0;
};

using Background = std::variant<FreeBackground, DyonPair, ParabolicBackground>;

enum class Dimensionality { Surface2D, Ambient3D };

enum class ModelKind {
  FreeEllipsoid,
  FreeHyperboloid,
  FreeParaboloid,
  LandauEllipsoid,
  LandauHyperboloid,
  LandauParaboloid,
  TwoCenter3D,
  Parabolic3D,
};

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::FreeEllipsoid: return "free_ellipsoid";
    case ModelKind::FreeHyperboloid: return "free_hyperboloid";
    case ModelKind::FreeParaboloid: return "free_paraboloid";
    case ModelKind::LandauEllipsoid: return "landau_ellipsoid";
    case ModelKind::LandauHyperboloid: return "landau_hyperboloid";
    case ModelKind::LandauParaboloid: return "landau_paraboloid";
    case ModelKind::TwoCenter3D: return "two_center_3d";
    case ModelKind::Parabolic3D: return "parabolic_3d";
  }
  return "unknown";
}

struct PhasePoint {
  double u = 0, p_u = 0, phi = 0, p_phi = 0;
  double v = 0, p_v = 0;  ///< second shape pair, ambient models only
};

struct Gradient {
  double d_u = 0, d_pu = 0, d_phi = 0, d_pphi = 0, d_v = 0, d_pv = 0;
};

namespace detail {

/// Coefficients of the common elliptic-surface form
///   H = P(u) [ (1-u^2) p^2 + Q(u) p_phi^2 + (S - 2 p_phi L u)/(1-u^2) + K u + c0 + c1 p_phi ],
///   P = e^2 / (2 a^2 (1 - e^2 u^2)),  Q = (1 - e^2 u^2) / ((1 - e^2)(1 - u^2)).
struct EllipticTerms {
  double a = 1, e = 0.5;
  double square = 0, linear = 0, field = 0, c0 = 0, c1 = 0;
};

inline EllipticTerms ellipsoid_terms(double a, double e, const DyonPair& d) {
  const double w = 1 - e * e;
  return {a,
          e,
          d.g_minus() * d.g_minus(),
          d.g_plus(),
          2 * a * d.q_minus(),
          e * e * d.g_plus() * d.g_plus() / w + 2 * a * d.q_plus() / e,
          -2 * e * d.g_minus() / w};
}

inline EllipticTerms hyperboloid_terms(double a, double e, const DyonPair& d) {
  const double w = 1 - e * e;
  return {a,
          e,
          d.g_plus() * d.g_plus(),
          d.g_minus(),
          -2 * a * d.q_plus(),
          e * e * d.g_minus() * d.g_minus() / w - 2 * a * d.q_minus() / e,
          -2 * e * d.g_plus() / w};
}

inline double elliptic_energy(const EllipticTerms& t, double u, double pu, double pphi) {
  const double e2 = t.e * t.e, w = 1 - u * u, s = 1 - e2 * u * u;
  const double P = e2 / (2 * t.a * t.a * s);
  const double Q = s / ((1 - e2) * w);
  return P * (w * pu * pu + Q * pphi * pphi + (t.square - 2 * pphi * t.linear * u) / w + t.field * u + t.c0 +
              t.c1 * pphi);
}

inline Gradient elliptic_gradient(const EllipticTerms& t, double u, double pu, double pphi) {
  const double e2 = t.e * t.e, w = 1 - u * u, s = 1 - e2 * u * u;
  const double P = e2 / (2 * t.a * t.a * s);
  const double dP = P * 2 * e2 * u / s;
  const double Q = s / ((1 - e2) * w);
  const double dQ = 2 * u / (w * w);
  const double N = t.square - 2 * pphi * t.linear * u;
  const double bracket = w * pu * pu + Q * pphi * pphi + N / w + t.field * u + t.c0 + t.c1 * pphi;
  const double dbracket = -2 * u * pu * pu + dQ * pphi * pphi + (-2 * pphi * t.linear * w + 2 * u * N) / (w * w) + t.field;
  Gradient g;
  g.d_u = dP * bracket + P * dbracket;
  g.d_pu = 2 * P * w * pu;
  g.d_pphi = P * (2 * Q * pphi - 2 * t.linear * u / w + t.c1);
  return g;
}

/// Bracket pieces of the paraboloid Landau Hamiltonian.
inline double paraboloid_gamma(double p, const ParabolicBackground& b, double pphi) {
  const double B = b.bfield, E = b.efield;
  return 4 * b.q + 2 * (pphi - b.g) * (pphi - b.g) / p + (p / 32) * (B * (p * p * B - 48 * b.g) + 8 * p * E);
}

inline bool in_guard(double x, double lo, double hi) {
  return x >= lo + Tolerances::guard_band && x <= hi - Tolerances::guard_band;
}

}  // namespace detail

class SurfaceModel;
SurfaceModel make_model(const SurfaceSpec& surface, const Background& background, Dimensionality dim);

/// Validated (surface, background, dimensionality) bundle. Immutable.
class SurfaceModel {
 public:
  const SurfaceSpec& surface() const { return surface_; }
  const Background& background() const { return background_; }
  Dimensionality dimensionality() const { return dim_; }
  ModelKind kind() const { return kind_; }
  bool is_ambient() const { return dim_ == Dimensionality::Ambient3D; }
  bool is_elliptic_surface() const {
    return kind_ == ModelKind::FreeEllipsoid || kind_ == ModelKind::LandauEllipsoid ||
           kind_ == ModelKind::FreeHyperboloid || kind_ == ModelKind::LandauHyperboloid;
  }
  bool is_ellipsoid() const { return kind_ == ModelKind::FreeEllipsoid || kind_ == ModelKind::LandauEllipsoid; }
  bool is_hyperboloid() const {
    return kind_ == ModelKind::FreeHyperboloid || kind_ == ModelKind::LandauHyperboloid;
  }
  bool is_paraboloid() const { return kind_ == ModelKind::FreeParaboloid || kind_ == ModelKind::LandauParaboloid; }
  bool is_free() const {
    return kind_ == ModelKind::FreeEllipsoid || kind_ == ModelKind::FreeHyperboloid ||
           kind_ == ModelKind::FreeParaboloid;
  }

  /// Focal half-separation (elliptic charts).
  double a() const { return a_; }
  /// Eccentricity (ellipsoid, hyperboloid).
  double e() const { return e_; }
  /// Paraboloid parameter.
  double p() const { return p_; }

  const DyonPair& dyons() const { return dyons_; }
  const ParabolicBackground& parabolic() const { return par_; }
  const detail::EllipticTerms& terms() const { return terms_; }

  /// Open chart interval for u on a surface (hyperboloid and paraboloid are unbounded above).
  double u_min() const {
    if (is_ellipsoid()) return -1;
    if (is_hyperboloid() || kind_ == ModelKind::TwoCenter3D) return 1;
    return 0;
  }
  double u_max() const { return is_ellipsoid() ? 1 : std::numeric_limits<double>::infinity(); }

  std::string id() const {
    std::ostringstream os;
    os.precision(17);
    os << to_string(kind_);
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Paraboloid>)
            os << "(p=" << s.p << ")";
          else
            os << "(a=" << s.a << ",e=" << s.e << ")";
        },
        surface_);
    std::visit(
        [&](const auto& b) {
          using T = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<T, DyonPair>)
            os << "[q1=" << b.q1 << ",q2=" << b.q2 << ",g1=" << b.g1 << ",g2=" << b.g2 << "]";
          else if constexpr (std::is_same_v<T, ParabolicBackground>)
            os << "[q=" << b.q << ",g=" << b.g << ",E=" << b.efield << ",B=" << b.bfield << "]";
        },
        background_);
    return os.str();
  }

 private:
  friend SurfaceModel make_model(const SurfaceSpec&, const Background&, Dimensionality);
  SurfaceModel() = default;

  SurfaceSpec surface_ = Ellipsoid{1, 0.5};
  Background background_ = FreeBackground{};
  Dimensionality dim_ = Dimensionality::Surface2D;
  ModelKind kind_ = ModelKind::FreeEllipsoid;
  double a_ = 0, e_ = 0, p_ = 0;
  DyonPair dyons_{};
  ParabolicBackground par_{};
  detail::EllipticTerms terms_{};
};

inline SurfaceModel make_model(const SurfaceSpec& surface, const Background& background, Dimensionality dim) {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidCombination, msg); };
  auto finite = [](double x) { return std::isfinite(x); };
  SurfaceModel m;
  m.surface_ = surface;
  m.background_ = background;
  m.dim_ = dim;

  if (const auto* el = std::get_if<Ellipsoid>(&surface)) {
    if (!(el->a > 0) || !finite(el->a)) fail("ellipsoid requires a > 0");
    if (!(el->e > 0 && el->e < 1)) fail("ellipsoid requires eccentricity 0 < e < 1");
    m.a_ = el->a;
    m.e_ = el->e;
  } else if (const auto* hy = std::get_if<Hyperboloid>(&surface)) {
    if (!(hy->a > 0) || !finite(hy->a)) fail("hyperboloid requires a > 0");
    if (!(hy->e > 1) || !finite(hy->e)) fail("hyperboloid requires eccentricity e > 1");
    m.a_ = hy->a;
    m.e_ = hy->e;
  } else {
    const auto& pa = std::get<Paraboloid>(surface);
    if (!(pa.p > 0) || !finite(pa.p)) fail("paraboloid requires p > 0");
    m.p_ = pa.p;
  }

  if (const auto* d = std::get_if<DyonPair>(&background)) {
    if (!finite(d->q1) || !finite(d->q2) || !finite(d->g1) || !finite(d->g2)) fail("dyon charges must be finite");
    m.dyons_ = *d;
  }
  if (const auto* b = std::get_if<ParabolicBackground>(&background)) {
    if (!finite(b->q) || !finite(b->g) || !finite(b->efield) || !finite(b->bfield))
      fail("parabolic background parameters must be finite");
    m.par_ = *b;
  }

  const bool parab = std::holds_alternative<Paraboloid>(surface);
  const bool has_dyons = std::holds_alternative<DyonPair>(background);
  const bool has_par = std::holds_alternative<ParabolicBackground>(background);
  const bool free = std::holds_alternative<FreeBackground>(background);

  if (parab && has_dyons) fail("paraboloid pairs only with a parabolic background or none");
  if (!parab && has_par) fail("ellipsoid/hyperboloid pair only with a dyon pair or none");

  if (dim == Dimensionality::Ambient3D) {
    if (free) fail("ambient models require a dyon pair (elliptic chart) or a parabolic background");
    m.kind_ = parab ? ModelKind::Parabolic3D : ModelKind::TwoCenter3D;
    return m;
  }

  if (std::holds_alternative<Ellipsoid>(surface)) {
    m.kind_ = free ? ModelKind::FreeEllipsoid : ModelKind::LandauEllipsoid;
    m.terms_ = detail::ellipsoid_terms(m.a_, m.e_, m.dyons_);
  } else if (std::holds_alternative<Hyperboloid>(surface)) {
    m.kind_ = free ? ModelKind::FreeHyperboloid : ModelKind::LandauHyperboloid;
    m.terms_ = detail::hyperboloid_terms(m.a_, m.e_, m.dyons_);
  } else {
    m.kind_ = free ? ModelKind::FreeParaboloid : ModelKind::LandauParaboloid;
  }
  return m;
}

/// True when s lies inside the chart domain minus the guard band.
inline bool in_domain(const SurfaceModel& m, const PhasePoint& s) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (!std::isfinite(s.u) || !std::isfinite(s.p_u) || !std::isfinite(s.p_phi)) return false;
  switch (m.kind()) {
    case ModelKind::FreeEllipsoid:
    case ModelKind::LandauEllipsoid: return detail::in_guard(s.u, -1, 1);
    case ModelKind::FreeHyperboloid:
    case ModelKind::LandauHyperboloid: return detail::in_guard(s.u, 1, inf);
    case ModelKind::FreeParaboloid:
    case ModelKind::LandauParaboloid: return detail::in_guard(s.u, 0, inf);
    case ModelKind::TwoCenter3D:
      return detail::in_guard(s.u, 1, inf) && detail::in_guard(s.v, -1, 1) && std::isfinite(s.p_v);
    case ModelKind::Parabolic3D:
      return detail::in_guard(s.u, 0, inf) && detail::in_guard(s.v, 0, inf) && std::isfinite(s.p_v);
  }
  return false;
}

inline void check_domain(const SurfaceModel& m, const PhasePoint& s) {
  if (!in_domain(m, s)) {
    std::ostringstream os;
    os.precision(17);
    os << "phase point (u=" << s.u;
    if (m.is_ambient()) os << ", v=" << s.v;
    os << ") touches a coordinate singularity or leaves the chart of " << to_string(m.kind());
    throw Error(ErrorKind::DomainError, os.str());
  }
}

/// Hamiltonian value. Each variant follows its printed expression term by term.
inline double energy(const SurfaceModel& m, const PhasePoint& s) {
  check_domain(m, s);
  const double pf = s.p_phi;
  switch (m.kind()) {
    case ModelKind::FreeEllipsoid: {
      const double a = m.a(), e = m.e(), eta = s.u;
      return e * e / (2 * a * a * (1 - e * e * eta * eta)) *
             ((1 - eta * eta) * s.p_u * s.p_u + (1 - e * e * eta * eta) / ((1 - e * e) * (1 - eta * eta)) * pf * pf);
    }
    case ModelKind::FreeHyperboloid: {
      const double a = m.a(), e = m.e(), xi = s.u;
      return e * e / (2 * a * a * (1 - e * e * xi * xi)) *
             ((1 - xi * xi) * s.p_u * s.p_u + (1 - e * e * xi * xi) / ((1 - e * e) * (1 - xi * xi)) * pf * pf);
    }
    case ModelKind::FreeParaboloid: {
      const double p = m.p(), xi = s.u;
      return (4 * xi * s.p_u * s.p_u + (p + 2 * xi) / (p * xi) * pf * pf) / (p + 2 * xi);
    }
    case ModelKind::LandauEllipsoid: {
      const double a = m.a(), e = m.e(), eta = s.u;
      const auto& d = m.dyons();
      const double gp = d.g_plus(), gm = d.g_minus(), qp = d.q_plus(), qm = d.q_minus();
      const double gamma_el = (e * e * gp * gp - 2 * e * pf * gm) / (1 - e * e) + 2 * a * qp / e;
      return e * e / (2 * a * a * (1 - e * e * eta * eta)) *
             ((1 - eta * eta) * s.p_u * s.p_u + (1 - e * e * eta * eta) / ((1 - e * e) * (1 - eta * eta)) * pf * pf +
              (gm * gm - 2 * pf * gp * eta) / (1 - eta * eta) + 2 * a * qm * eta + gamma_el);
    }
    case ModelKind::LandauHyperboloid: {
      const double a = m.a(), e = m.e(), xi = s.u;
      const auto& d = m.dyons();
      const double gp = d.g_plus(), gm = d.g_minus(), qp = d.q_plus(), qm = d.q_minus();
      const double gamma_hyp = (e * e * gm * gm - 2 * e * pf * gp) / (1 - e * e) - 2 * a * qm / e;
      return e * e / (2 * a * a * (1 - e * e * xi * xi)) *
             ((1 - xi * xi) * s.p_u * s.p_u + (1 - e * e * xi * xi) / ((1 - xi * xi) * (1 - e * e)) * pf * pf +
              (gp * gp - 2 * pf * gm * xi) / (1 - xi * xi) - 2 * a * qp * xi + gamma_hyp);
    }
    case ModelKind::LandauParaboloid: {
      const double p = m.p(), xi = s.u;
      const auto& b = m.parabolic();
      const double B = b.bfield, g = b.g;
      const double gamma_p = detail::paraboloid_gamma(p, b, pf);
      return (4 * xi * s.p_u * s.p_u + (pf + g) * (pf + g) / xi + 3 * g * B * xi - b.efield * xi * xi +
              B * B * xi * xi * xi / 4 + gamma_p) /
                 (p + 2 * xi) -
             B * pf / 2;
    }
    case ModelKind::TwoCenter3D: {
      const double a = m.a(), xi = s.u, eta = s.v;
      const auto& d = m.dyons();
      const double V = (d.g_plus() * d.g_plus() - 2 * pf * d.g_minus() * xi) / (xi * xi - 1) + 2 * a * d.q_plus() * xi;
      const double W =
          (d.g_minus() * d.g_minus() - 2 * pf * d.g_plus() * eta) / (1 - eta * eta) + 2 * a * d.q_minus() * eta;
      return ((xi * xi - 1) * s.p_u * s.p_u + (1 - eta * eta) * s.p_v * s.p_v +
              (xi * xi - eta * eta) / ((xi * xi - 1) * (1 - eta * eta)) * pf * pf + V + W) /
             (2 * a * a * (xi * xi - eta * eta));
    }
    case ModelKind::Parabolic3D: {
      const double xi = s.u, eta = s.v;
      const auto& b = m.parabolic();
      const double B = b.bfield, g = b.g, E = b.efield;
      const double V = (pf + g) * (pf + g) / xi + 3 * g * B * xi - E * xi * xi + B * B * xi * xi * xi / 4 + 2 * b.q;
      const double W = (pf - g) * (pf - g) / eta - 3 * g * B * eta + E * eta * eta + B * B * eta * eta * eta / 4 + 2 * b.q;
      return (4 * xi * s.p_u * s.p_u + 4 * eta * s.p_v * s.p_v + V + W) / (2 * (xi + eta)) - B * pf / 2;
    }
  }
  return 0;
}

/// Closed-form partial derivatives; d_phi is always zero.
inline Gradient gradients(const SurfaceModel& m, const PhasePoint& s) {
  check_domain(m, s);
  const double pf = s.p_phi;
  switch (m.kind()) {
    case ModelKind::FreeEllipsoid:
    case ModelKind::FreeHyperboloid:
    case ModelKind::LandauEllipsoid:
    case ModelKind::LandauHyperboloid: return detail::elliptic_gradient(m.terms(), s.u, s.p_u, pf);
    case ModelKind::FreeParaboloid:
    case ModelKind::LandauParaboloid: {
      const double p = m.p(), xi = s.u, pu = s.p_u;
      const auto& b = m.parabolic();  // zero for the free model
      const double B = b.bfield, g = b.g, E = b.efield;
      const double D = p + 2 * xi;
      const double bracket = 4 * xi * pu * pu + (pf + g) * (pf + g) / xi + 3 * g * B * xi - E * xi * xi +
                             B * B * xi * xi * xi / 4 + detail::paraboloid_gamma(p, b, pf);
      Gradient gr;
      gr.d_u = (4 * pu * pu - (pf + g) * (pf + g) / (xi * xi) + 3 * g * B - 2 * E * xi + 0.75 * B * B * xi * xi) / D -
               2 * bracket / (D * D);
      gr.d_pu = 8 * xi * pu / D;
      gr.d_pphi = (2 * (pf + g) / xi + 4 * (pf - g) / p) / D - B / 2;
      return gr;
    }
    case ModelKind::TwoCenter3D: {
      const double a = m.a(), xi = s.u, eta = s.v;
      const auto& d = m.dyons();
      const double gp = d.g_plus(), gm = d.g_minus(), qp = d.q_plus(), qm = d.q_minus();
      const double X = xi * xi - 1, Y = 1 - eta * eta, D = xi * xi - eta * eta;
      const double Vn = gp * gp - 2 * pf * gm * xi, Wn = gm * gm - 2 * pf * gp * eta;
      const double br = X * s.p_u * s.p_u + Y * s.p_v * s.p_v + pf * pf * (1 / Y + 1 / X) + Vn / X + 2 * a * qp * xi +
                        Wn / Y + 2 * a * qm * eta;
      const double dxi = 2 * xi * s.p_u * s.p_u - 2 * xi * pf * pf / (X * X) + (-2 * pf * gm * X - 2 * xi * Vn) / (X * X) +
                         2 * a * qp;
      const double deta = -2 * eta * s.p_v * s.p_v + 2 * eta * pf * pf / (Y * Y) +
                          (-2 * pf * gp * Y + 2 * eta * Wn) / (Y * Y) + 2 * a * qm;
      const double c = 1 / (2 * a * a * D);
      Gradient gr;
      gr.d_u = c * dxi - c * br * 2 * xi / D;
      gr.d_v = c * deta + c * br * 2 * eta / D;
      gr.d_pu = c * 2 * X * s.p_u;
      gr.d_pv = c * 2 * Y * s.p_v;
      gr.d_pphi = c * (2 * pf * (1 / Y + 1 / X) - 2 * gm * xi / X - 2 * gp * eta / Y);
      return gr;
    }
    case ModelKind::Parabolic3D: {
      const double xi = s.u, eta = s.v;
      const auto& b = m.parabolic();
      const double B = b.bfield, g = b.g, E = b.efield;
      const double S = xi + eta;
      const double V = (pf + g) * (pf + g) / xi + 3 * g * B * xi - E * xi * xi + B * B * xi * xi * xi / 4 + 2 * b.q;
      const double W = (pf - g) * (pf - g) / eta - 3 * g * B * eta + E * eta * eta + B * B * eta * eta * eta / 4 + 2 * b.q;
      const double br = 4 * xi * s.p_u * s.p_u + 4 * eta * s.p_v * s.p_v + V + W;
      const double dV = -(pf + g) * (pf + g) / (xi * xi) + 3 * g * B - 2 * E * xi + 0.75 * B * B * xi * xi;
      const double dW = -(pf - g) * (pf - g) / (eta * eta) - 3 * g * B + 2 * E * eta + 0.75 * B * B * eta * eta;
      Gradient gr;
      gr.d_u = (4 * s.p_u * s.p_u + dV) / (2 * S) - br / (2 * S * S);
      gr.d_v = (4 * s.p_v * s.p_v + dW) / (2 * S) - br / (2 * S * S);
      gr.d_pu = 4 * xi * s.p_u / S;
      gr.d_pv = 4 * eta * s.p_v / S;
      gr.d_pphi = (2 * (pf + g) / xi + 2 * (pf - g) / eta) / (2 * S) - B / 2;
      return gr;
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Canonical (gauge-split) form

struct GaugeSplit {
  std::function<double(double)> a_phi;
  std::function<double(double)> potential;
  double constant_shift = 0;
  bool reduced = false;
};

struct ReducibilityReport {
  bool reducible = false;
  std::string matched_condition;
  double q = 0, g = 0;  ///< effective charges (q1, g1) when reducible
};

/// Exact test of the charge conditions under which the radial integral keeps the free form.
inline ReducibilityReport classify_reducible(const SurfaceModel& m) {
  if (m.is_ambient()) throw Error(ErrorKind::InvalidCombination, "reducibility is defined for surface models only");
  ReducibilityReport r;
  if (m.is_free()) {
    r.reducible = true;
    r.matched_condition = "no background";
    return r;
  }
  const auto& d = m.dyons();
  if (m.kind() == ModelKind::LandauEllipsoid) {
    r.matched_condition = "q_minus = 0 and g_plus = 0";
    r.reducible = d.q_minus() == 0 && d.g_plus() == 0;
  } else if (m.kind() == ModelKind::LandauHyperboloid) {
    r.matched_condition = "q_plus = 0 and g_minus = 0";
    r.reducible = d.q_plus() == 0 && d.g_minus() == 0;
  } else {
    const auto& b = m.parabolic();
    r.matched_condition = "efield = 0 and bfield = 0";
    r.reducible = b.efield == 0 && b.bfield == 0;
    if (r.reducible) {
      r.q = b.q;
      r.g = b.g;
    }
    return r;
  }
  if (r.reducible) {
    r.q = d.q1;
    r.g = d.g1;
  }
  return r;
}

/// Vector potential and scalar potential of the canonical form; reduced pair in reducible configurations.
inline GaugeSplit gauge_split(const SurfaceModel& m) {
  if (m.is_ambient() || m.is_free())
    throw Error(ErrorKind::InvalidCombination, "gauge split needs a surface model with a background");
  const auto rep = classify_reducible(m);
  GaugeSplit gs;
  gs.reduced = rep.reducible;
  const double a = m.a(), e = m.e(), p = m.p();
  switch (m.kind()) {
    case ModelKind::LandauEllipsoid: {
      if (rep.reducible) {
        const double g = rep.g, q = rep.q;
        gs.a_phi = [=](double eta) { return 2 * e * g * (1 - eta * eta) / (1 - e * e * eta * eta); };
        gs.potential = [=](double eta) {
          const double e2 = e * e, h2 = eta * eta;
          return 4 * g * g * (1 + e2 * ((1 + e2 - h2) * h2 - 2)) / ((1 - e2) * (1 - h2) * (1 - e2 * h2)) + 4 * a * q / e;
        };
        return gs;
      }
      const auto& d = m.dyons();
      const double gm = d.g_minus(), gp = d.g_plus(), qm = d.q_minus(), qp = d.q_plus();
      if (gm == 0) throw Error(ErrorKind::GaugeUndefined, "ellipsoid split divides by g_minus = 0");
      const double gel = gp * (1 - e * e) / (2 * e * gm);
      gs.a_phi = [=](double eta) {
        return e * gm * (1 + gel * gel - (eta - gel) * (eta - gel)) / (1 - e * e * eta * eta);
      };
      gs.potential = [=](double eta) {
        const double e2 = e * e, h2 = eta * eta, t = 1 + 2 * gel * eta - h2;
        return 2 * a * qm * eta + gm * gm * ((1 - e2) * (1 - e2 * h2) - e2 * t * t) / ((1 - e2) * (1 - h2) * (1 - e2 * h2)) +
               e2 * gp * gp / (1 - e2) + 2 * a * qp / e;
      };
      return gs;
    }
    case ModelKind::LandauHyperboloid: {
      if (rep.reducible) {
        const double g = rep.g, q = rep.q;
        gs.a_phi = [=](double xi) { return 2 * e * g * (1 - xi * xi) / (1 - e * e * xi * xi); };
        gs.potential = [=](double xi) {
          const double e2 = e * e, x2 = xi * xi;
          return 4 * g * g * (1 + e2 * ((1 + e2 - x2) * x2 - 2)) / ((1 - e2) * (1 - x2) * (1 - e2 * x2)) - 4 * a * q / e;
        };
        return gs;
      }
      const auto& d = m.dyons();
      const double gm = d.g_minus(), gp = d.g_plus(), qm = d.q_minus(), qp = d.q_plus();
      if (gp == 0) throw Error(ErrorKind::GaugeUndefined, "hyperboloid split divides by g_plus = 0");
      const double ghyp = gm * (1 - e * e) / (2 * e * gp);
      gs.a_phi = [=](double xi) {
        return e * gp * (1 + ghyp * ghyp - (xi - ghyp) * (xi - ghyp)) / (1 - e * e * xi * xi);
      };
      gs.potential = [=](double xi) {
        const double e2 = e * e, x2 = xi * xi, t = 1 + 2 * ghyp * xi - x2;
        return -2 * a * qp * xi + gp * gp * ((1 - e2) * (1 - e2 * x2) - e2 * t * t) / ((1 - e2) * (1 - x2) * (1 - e2 * x2)) +
               e2 * gm * gm / (1 - e2) - 2 * a * qm / e;
      };
      return gs;
    }
    case ModelKind::LandauParaboloid: {
      const auto& b = m.parabolic();
      const double g = b.g, q = b.q;
      if (rep.reducible) {
        gs.a_phi = [=](double xi) { return g * (xi - p / 2) / (xi + p / 2); };
        gs.potential = [=](double xi) {
          const double r = (xi - p / 2) * (xi - p / 2) / (xi * (xi + p / 2));
          return g * g * (1 / xi + (2 / p) * (1 - r)) + 4 * q;
        };
        return gs;
      }
      const double B = b.bfield, E = b.efield;
      if (B == 0) throw Error(ErrorKind::GaugeUndefined, "paraboloid split divides by bfield = 0");
      const double G = 2 * g / (p * B) + p / 4;
      auto A = [=](double xi) { return (p * B / 2) * ((xi + G) * (xi + G) - G * G - 2 * g / B) / (p + 2 * xi); };
      gs.a_phi = A;
      gs.potential = [=](double xi) {
        const double ax = A(xi);
        return g * g / xi + 3 * g * B * xi - E * xi * xi + B * B * xi * xi * xi / 4 - (p + 2 * xi) * ax * ax / (p * xi) +
               4 * q + 2 * g * g / p + (p / 32) * (B * (p * p * B - 48 * g) + 8 * p * E);
      };
      return gs;
    }
    default: break;
  }
  throw Error(ErrorKind::InvalidCombination, "no gauge split for this model");
}

/// Reassembles the Hamiltonian from a gauge split.
inline double canonical_energy(const SurfaceModel& m, const GaugeSplit& gs, const PhasePoint& s) {
  check_domain(m, s);
  const double u = s.u, k = s.p_phi - gs.a_phi(u);
  if (m.is_paraboloid()) {
    const double p = m.p();
    return (4 * u * s.p_u * s.p_u + (p + 2 * u) / (p * u) * k * k + gs.potential(u)) / (p + 2 * u) + gs.constant_shift;
  }
  const double a = m.a(), e = m.e();
  return e * e / (2 * a * a * (1 - e * e * u * u)) *
             ((1 - u * u) * s.p_u * s.p_u + (1 - e * e * u * u) / ((1 - e * e) * (1 - u * u)) * k * k + gs.potential(u)) +
         gs.constant_shift;
}

// ---------------------------------------------------------------------------
// Restriction of the ambient models to a coordinate surface

enum class Coordinate { Xi, Eta };

struct Restriction {
  Coordinate coordinate;
  double value;
};

/// Fixes one coordinate (with zero conjugate momentum) of an ambient model.
inline SurfaceModel restrict_3d(const SurfaceModel& m3, const Restriction& r) {
  if (!m3.is_ambient()) throw Error(ErrorKind::InvalidRestriction, "restriction needs an ambient model");
  if (m3.kind() == ModelKind::TwoCenter3D) {
    if (r.coordinate == Coordinate::Xi) {
      if (!(r.value > 1) || !std::isfinite(r.value))
        throw Error(ErrorKind::InvalidRestriction, "ellipsoid restriction needs xi = 1/e > 1");
      return make_model(Ellipsoid{m3.a(), 1 / r.value}, m3.dyons(), Dimensionality::Surface2D);
    }
    if (!(r.value > 0 && r.value < 1))
      throw Error(ErrorKind::InvalidRestriction, "hyperboloid restriction needs 0 < eta = 1/e < 1");
    return make_model(Hyperboloid{m3.a(), 1 / r.value}, m3.dyons(), Dimensionality::Surface2D);
  }
  if (r.coordinate != Coordinate::Eta)
    throw Error(ErrorKind::InvalidRestriction, "paraboloid restriction fixes eta = p/2");
  if (!(r.value > 0) || !std::isfinite(r.value))
    throw Error(ErrorKind::InvalidRestriction, "paraboloid restriction needs eta = p/2 > 0");
  return make_model(Paraboloid{2 * r.value}, m3.parabolic(), Dimensionality::Surface2D);
}

/// Ambient phase point sitting on the restricted surface.
inline PhasePoint lift_to_ambient(const Restriction& r, const PhasePoint& s2) {
  PhasePoint s3;
  s3.phi = s2.phi;
  s3.p_phi = s2.p_phi;
  if (r.coordinate == Coordinate::Xi) {
    s3.u = r.value;
    s3.p_u = 0;
    s3.v = s2.u;
    s3.p_v = s2.p_u;
  } else {
    s3.u = s2.u;
    s3.p_u = s2.p_u;
    s3.v = r.value;
    s3.p_v = 0;
  }
  return s3;
}

// ---------------------------------------------------------------------------
// Radial-momentum oracle: H = E solved for p_u^2

inline void require_surface(const SurfaceModel& m, const char* what) {
  if (m.is_ambient()) throw Error(ErrorKind::InvalidCombination, std::string(what) + " is defined for surface models only");
}

/// Coefficient K(u) of p_u^2 in the Hamiltonian.
inline double kinetic_coefficient(const SurfaceModel& m, double u) {
  require_surface(m, "kinetic_coefficient");
  check_domain(m, {u, 0, 0, 0});
  if (m.is_paraboloid()) return 4 * u / (m.p() + 2 * u);
  const double e = m.e(), a = m.a();
  return e * e * (1 - u * u) / (2 * a * a * (1 - e * e * u * u));
}

/// Effective potential: the Hamiltonian at p_u = 0.
inline double potential(const SurfaceModel& m, double u, double p_phi) {
  require_surface(m, "potential");
  return energy(m, {u, 0, 0, p_phi});
}

inline double radial_momentum_squared(const SurfaceModel& m, double u, double E, double p_phi) {
  return (E - potential(m, u, p_phi)) / kinetic_coefficient(m, u);
}

/// d(p_u^2)/dE and d(p_u^2)/dp_phi at fixed u.
inline std::pair<double, double> radial_momentum_squared_derivatives(const SurfaceModel& m, double u, double p_phi) {
  const double K = kinetic_coefficient(m, u);
  const double dU = gradients(m, {u, 0, 0, p_phi}).d_pphi;
  return {1 / K, -dU / K};
}

struct PotentialMinimum {
  double u;
  double value;
};

/// Global minimum of the effective potential over the chart (grid scan, then golden section).
inline PotentialMinimum potential_minimum(const SurfaceModel& m, double p_phi) {
  require_surface(m, "potential_minimum");
  constexpr int n = 4000;
  auto map = [&](double t) {
    if (m.is_ellipsoid()) return -1 + 2 * t;
    const double base = m.is_hyperboloid() ? 1.0 : 0.0;
    return base + t / (1 - t);
  };
  const double t_lo = 1e-7, t_hi = m.is_ellipsoid() ? 1 - 1e-7 : 0.9999;
  double best = std::numeric_limits<double>::infinity();
  int best_i = 0;
  for (int i = 0; i <= n; ++i) {
    const double t = t_lo + (t_hi - t_lo) * i / n;
    const double val = potential(m, map(t), p_phi);
    if (val < best) {
      best = val;
      best_i = i;
    }
  }
  double lo = t_lo + (t_hi - t_lo) * std::max(best_i - 1, 0) / n;
  double hi = t_lo + (t_hi - t_lo) * std::min(best_i + 1, n) / n;
  const double gr = (std::sqrt(5.0) - 1) / 2;
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  double fc = potential(m, map(c), p_phi), fd = potential(m, map(d), p_phi);
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = potential(m, map(c), p_phi);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + gr * (hi - lo);
      fd = potential(m, map(d), p_phi);
    }
  }
  double u = map((lo + hi) / 2);
  double val = potential(m, u, p_phi);
  if (best < val) {
    u = map(t_lo + (t_hi - t_lo) * best_i / n);
    val = best;
  }
  return {u, val};
}

/// Classically allowed interval containing a seed point.
struct Band {
  double lower;
  double upper;
  bool lower_turning;  ///< false when the band runs into the chart edge
  bool upper_turning;
  bool bounded() const { return lower_turning && upper_turning; }
};

namespace detail {

/// Bisects a sign change of f between an allowed point and a forbidden point to machine precision;
/// returns the last allowed abscissa.
template <class F>
double bisect_edge(F&& f, double allowed, double forbidden) {
  for (int it = 0; it < 2000; ++it) {
    const double mid = allowed + (forbidden - allowed) / 2;
    if (mid == allowed || mid == forbidden) break;
    if (f(mid) >= 0)
      allowed = mid;
    else
      forbidden = mid;
  }
  return allowed;
}

}  // namespace detail

inline Band allowed_band(const SurfaceModel& m, double E, double p_phi, std::optional<double> seed = std::nullopt) {
  require_surface(m, "allowed_band");
  const double u0 = seed ? *seed : potential_minimum(m, p_phi).u;
  auto R = [&](double u) { return radial_momentum_squared(m, u, E, p_phi); };
  if (!(R(u0) >= 0)) throw Error(ErrorKind::NoBoundMotion, "energy lies below the effective potential at the seed");
  const double lo_edge = m.u_min() + Tolerances::guard_band;
  const double hi_edge = std::isfinite(m.u_max()) ? m.u_max() - Tolerances::guard_band : 1e12;
  const double width = std::isfinite(m.u_max()) ? (hi_edge - lo_edge) : std::max(1.0, std::abs(u0));

  Band band{};
  // march upward
  {
    double x = u0, step = std::max(1e-3 * (std::isfinite(m.u_max()) ? hi_edge - u0 : width), 1e-12);
    for (;;) {
      const double nx = std::min(x + step, hi_edge);
      if (R(nx) < 0) {
        band.upper = detail::bisect_edge(R, x, nx);
        band.upper_turning = true;
        break;
      }
      if (nx >= hi_edge) {
        band.upper = hi_edge;
        band.upper_turning = false;
        break;
      }
      x = nx;
      step *= 1.5;
    }
  }
  // march downward
  {
    double x = u0, step = std::max(1e-3 * (u0 - lo_edge), 1e-12);
    for (;;) {
      const double nx = std::max(x - step, lo_edge);
      if (R(nx) < 0) {
        band.lower = detail::bisect_edge(R, x, nx);
        band.lower_turning = true;
        break;
      }
      if (nx <= lo_edge) {
        band.lower = lo_edge;
        band.lower_turning = false;
        break;
      }
      x = nx;
      step *= 1.5;
    }
  }
  return band;
}

}  // namespace qlandau
