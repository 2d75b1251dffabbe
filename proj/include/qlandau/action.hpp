/**
 * \file action.hpp
 * \brief Action variables of bound motion on the ellipsoid.
 */
#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "qlandau/hjq.hpp"
#include "qlandau/special.hpp"

namespace qlandau::action {

enum class Method { Quadrature, Appell };

inline std::string to_string(Method m) { return m == Method::Quadrature ? "quadrature" : "appell"; }

struct ActionResult {
  double I1 = 0;
  double I2 = 0;
  Method method = Method::Quadrature;
  double radial_frequency = 0;  ///< 1 / radial period, 0 when not computed
};

inline double action_I2(double p_phi) { return p_phi; }

namespace detail {

inline void require_bound_surface(const SurfaceModel& m) {
  require_surface(m, "action variables");
  if (!m.is_ellipsoid()) throw Error(ErrorKind::NoBoundMotion, "motion on this surface is not finite");
}

/// (1/pi) * integral of |p_u| over the allowed band, u = c - h cos(theta).
inline double band_action(const SurfaceModel& m, double E, double p_phi) {
  const auto pm = potential_minimum(m, p_phi);
  if (E < pm.value) throw Error(ErrorKind::NoBoundMotion, "energy lies below the potential minimum");
  if (E == pm.value) return 0;
  Band band;
  try {
    band = allowed_band(m, E, p_phi, pm.u);
  } catch (const Error&) {
    return 0;  // band narrower than the representable spacing around the minimum
  }
  if (!band.bounded()) throw Error(ErrorKind::NoBoundMotion, "the allowed band is not bounded by two turning points");
  const double c = (band.lower + band.upper) / 2, h = (band.upper - band.lower) / 2;
  if (h == 0) return 0;
  hjq::detail::BandIntegrand bi{m, E, p_phi, band};
  auto f = [&](double th) {
    const double s = h * std::sin(th);
    return s * s * std::sqrt(bi.q_of(th));
  };
  // rounding in E - U limits the attainable relative accuracy of narrow bands
  const double Uc = potential(m, c, p_phi);
  const double nu = 4 * std::numeric_limits<double>::epsilon() * (std::abs(E) + std::abs(Uc)) / std::abs(E - Uc);
  const double rough = std::numbers::pi / 2 * h * h * std::sqrt(bi.q_of(std::numbers::pi / 2));
  const double tol = 1e-14;
  return quadrature::adaptive(f, 0.0, std::numbers::pi, tol, nu * rough / tol).value / std::numbers::pi;
}

}  // namespace detail

/// Central difference of I1 in E, Richardson-extrapolated over steps h and h/2.
inline double action_energy_derivative(const SurfaceModel& m, double E, double p_phi, double rel_step = 1e-5) {
  const double h = rel_step * std::abs(E);
  auto d = [&](double s) {
    return (detail::band_action(m, E + s, p_phi) - detail::band_action(m, E - s, p_phi)) / (2 * s);
  };
  const double d1 = d(h), d2 = d(h / 2);
  return (4 * d2 - d1) / 3;
}

inline ActionResult action_I1_quadrature(const SurfaceModel& m, double E, double p_phi, bool with_frequency = true) {
  detail::require_bound_surface(m);
  ActionResult r;
  r.method = Method::Quadrature;
  r.I1 = detail::band_action(m, E, p_phi);
  r.I2 = action_I2(p_phi);
  if (with_frequency && r.I1 > 0) r.radial_frequency = 1 / (2 * std::numbers::pi * action_energy_derivative(m, E, p_phi));
  return r;
}

/// One evaluation of the printed closed form a a_- sqrt(a_+ E / 2) F1(1/2, 1, -1/2, 2, a_-, a_-/a_+).
struct AppellReading {
  std::string name;
  std::string turning_points;  ///< "oracle" or "closed form"
  double a_minus = 0, a_plus = 0;
  double I1 = 0;
  double relative_difference = 0;  ///< against the quadrature I1
  bool matches = false;
};

struct AppellReport {
  double I1_quadrature = 0;
  std::vector<AppellReading> readings;
  double intermediate_ratio = 0;  ///< printed (a/pi) sqrt(E/2) int_0^{a_-} ... over the quadrature I1
  std::string matching_reading;   ///< empty when no reading matches
  ActionResult result;            ///< I1 from the matching reading (quadrature value when none matches)
};

namespace detail {

/// Standard arguments (a_-, a_-/a_+) of the printed F1.
inline double appell_standard(double am, double ap) {
  special::AppellParams p;
  p.u = am;
  p.v = am / ap;
  p.a_limit = 1;
  return special::appell_f1(p).value;
}

/// Integral limit a = a_- inside the arguments: u = 1, v = 1 / a_+.
inline double appell_limit_inside(double am, double ap) {
  special::AppellParams p;
  p.u = 1;
  p.v = 1 / ap;
  p.a_limit = am;
  return special::appell_f1(p).value;
}

inline double printed_intermediate(double a, double E, double am, double ap) {
  // int_0^{a_-} sqrt((x - a_+)(x - a_-) / (x (1 - x)^2)) dx with x = a_- sin^2(t)
  auto f = [&](double t) {
    const double s = std::sin(t), c = std::cos(t);
    const double x = am * s * s;
    const double num = (ap - x) * am * c * c;
    return std::sqrt(num / x) / (1 - x) * 2 * am * s * c;
  };
  const double integral = quadrature::adaptive(f, 0.0, std::numbers::pi / 2, 1e-14).value;
  return a / std::numbers::pi * std::sqrt(E / 2) * integral;
}

}  // namespace detail

inline AppellReport action_I1_appell(const SurfaceModel& m, double E, double p_phi, double match_tol = 1e-6) {
  detail::require_bound_surface(m);
  AppellReport rep;
  rep.I1_quadrature = detail::band_action(m, E, p_phi);
  const double a = m.a();
  auto add = [&](const std::string& name, const std::string& tp, double am, double ap, double f1) {
    AppellReading rd{name, tp, am, ap, a * am * std::sqrt(ap * E / 2) * f1, 0, false};
    rd.relative_difference = std::abs(rd.I1 - rep.I1_quadrature) / std::abs(rep.I1_quadrature);
    rd.matches = rd.relative_difference < match_tol;
    rep.readings.push_back(rd);
  };
  const auto orc = hjq::turning_points_oracle(m, E, p_phi);
  add("standard arguments (a_-, a_-/a_+)", "oracle", orc.a_minus, orc.a_plus,
      detail::appell_standard(orc.a_minus, orc.a_plus));
  add("limit a = a_- inside the arguments (u = 1, v = 1/a_+)", "oracle", orc.a_minus, orc.a_plus,
      detail::appell_limit_inside(orc.a_minus, orc.a_plus));
  if (classify_reducible(m).reducible) {
    try {
      const auto tp = hjq::turning_points_closed(hjq::b_constants(m, E, p_phi));
      if (tp.a_minus > 0 && tp.a_minus < 1 && tp.a_plus > 1) {
        add("standard arguments (a_-, a_-/a_+)", "closed form", tp.a_minus, tp.a_plus,
            detail::appell_standard(tp.a_minus, tp.a_plus));
      }
    } catch (const Error&) {
    }
  }
  rep.intermediate_ratio = detail::printed_intermediate(a, E, orc.a_minus, orc.a_plus) / rep.I1_quadrature;
  rep.result.method = Method::Appell;
  rep.result.I2 = action_I2(p_phi);
  rep.result.I1 = rep.I1_quadrature;
  for (const auto& rd : rep.readings)
    if (rd.matches) {
      rep.matching_reading = rd.name + " with " + rd.turning_points + " turning points";
      rep.result.I1 = rd.I1;
      break;
    }
  return rep;
}

inline nlohmann::json to_json(const ActionResult& r) {
  return {{"I1", r.I1}, {"I2", r.I2}, {"method", to_string(r.method)}, {"radial_frequency", r.radial_frequency}};
}

inline nlohmann::json to_json(const AppellReport& r) {
  nlohmann::json j;
  j["I1_quadrature"] = r.I1_quadrature;
  j["intermediate_ratio"] = r.intermediate_ratio;
  j["matching_reading"] = r.matching_reading.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.matching_reading);
  j["readings"] = nlohmann::json::array();
  for (const auto& rd : r.readings)
    j["readings"].push_back({{"reading", rd.name},
                             {"turning_points", rd.turning_points},
                             {"a_minus", rd.a_minus},
                             {"a_plus", rd.a_plus},
                             {"I1", rd.I1},
                             {"relative_difference", rd.relative_difference},
                             {"matches", rd.matches}});
  j["result"] = to_json(r.result);
  return j;
}

}  // namespace qlandau::action
