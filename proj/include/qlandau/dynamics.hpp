/**
 * \file dynamics.hpp
 * \brief Integration of Hamilton's equations, conservation monitoring and
 *        radial-period measurement.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qlandau/model.hpp"
#include "qlandau/ode.hpp"

namespace qlandau {

struct IntegratorSettings {
  double tol = 1e-10;
  double t_end = 0;
  /// 0: one sample per accepted step; otherwise this many uniformly spaced samples on [0, t_end].
  int uniform_samples = 0;
};

struct Sample {
  double t;
  PhasePoint state;  ///< phi is unwrapped
  double H;
};

struct Trajectory {
  std::vector<Sample> samples;
  std::string model_id;
  PhasePoint initial;
  IntegratorSettings settings;
  long accepted_steps = 0;
};

struct ConservationReport {
  double max_energy_drift = 0;  ///< relative (absolute when H(0) = 0)
  double max_pphi_drift = 0;
  long steps = 0;
};

/// Raised when the integration cannot continue; carries everything computed so far.
class IntegrationError : public Error {
 public:
  IntegrationError(ErrorKind kind, const std::string& msg, Trajectory partial)
      : Error(kind, msg), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

namespace detail {

inline std::size_t state_size(const SurfaceModel& m) { return m.is_ambient() ? 5 : 3; }

inline std::vector<double> pack(const SurfaceModel& m, const PhasePoint& s) {
  if (m.is_ambient()) return {s.u, s.p_u, s.phi, s.v, s.p_v};
  return {s.u, s.p_u, s.phi};
}

inline PhasePoint unpack(const SurfaceModel& m, const std::vector<double>& y, double p_phi) {
  PhasePoint s;
  s.u = y[0];
  s.p_u = y[1];
  s.phi = y[2];
  s.p_phi = p_phi;
  if (m.is_ambient()) {
    s.v = y[3];
    s.p_v = y[4];
  }
  return s;
}

inline ode::Rhs hamilton_rhs(const SurfaceModel& m, double p_phi) {
  return [&m, p_phi](double, const std::vector<double>& y, std::vector<double>& dy) {
    const PhasePoint s = unpack(m, y, p_phi);
    if (!in_domain(m, s)) return false;
    const Gradient g = gradients(m, s);
    dy[0] = g.d_pu;
    dy[1] = -g.d_u;
    dy[2] = g.d_pphi;
    if (m.is_ambient()) {
      dy[3] = g.d_pv;
      dy[4] = -g.d_v;
    }
    return std::isfinite(dy[0]) && std::isfinite(dy[1]);
  };
}

/// Distance to the chart edge below which an accepted state counts as having reached the singularity.
constexpr double kSingularMargin = 1e-8;

inline bool near_singularity(const SurfaceModel& m, const std::vector<double>& y) {
  auto close = [](double x, double edge) { return std::abs(x - edge) < kSingularMargin * std::max(1.0, std::abs(edge)); };
  switch (m.kind()) {
    case ModelKind::FreeEllipsoid:
    case ModelKind::LandauEllipsoid: return close(std::abs(y[0]), 1);
    case ModelKind::FreeHyperboloid:
    case ModelKind::LandauHyperboloid: return close(y[0], 1);
    case ModelKind::FreeParaboloid:
    case ModelKind::LandauParaboloid: return y[0] < kSingularMargin;
    case ModelKind::TwoCenter3D: return close(y[0], 1) || close(std::abs(y[3]), 1);
    case ModelKind::Parabolic3D: return y[0] < kSingularMargin || y[3] < kSingularMargin;
  }
  return false;
}

inline ode::Dop853 make_stepper(const SurfaceModel& m, const PhasePoint& s0, double tol) {
  ode::Dop853 st(hamilton_rhs(m, s0.p_phi), state_size(m), tol, tol);
  if (!st.init(0, pack(m, s0))) throw Error(ErrorKind::DomainError, "initial state lies outside the chart domain");
  return st;
}

}  // namespace detail

/// Adaptive DOP853 solution of Hamilton's equations on [0, t_end]. p_phi is conserved by construction.
inline Trajectory integrate(const SurfaceModel& m, const PhasePoint& s0, double t_end, double tol,
                            int uniform_samples = 0) {
  if (!(tol >= 1e-14 && tol <= 1e-3)) throw Error(ErrorKind::ConfigError, "tolerance must lie in [1e-14, 1e-3]");
  if (!(t_end >= 0) || !std::isfinite(t_end)) throw Error(ErrorKind::ConfigError, "t_end must be finite and >= 0");
  check_domain(m, s0);

  Trajectory tr;
  tr.model_id = m.id();
  tr.initial = s0;
  tr.settings = {tol, t_end, uniform_samples};
  auto record = [&](double t, const std::vector<double>& y) {
    const PhasePoint s = detail::unpack(m, y, s0.p_phi);
    tr.samples.push_back({t, s, energy(m, s)});
  };

  auto st = detail::make_stepper(m, s0, tol);
  std::size_t next_grid = 0;
  auto grid_time = [&](std::size_t k) {
    return uniform_samples > 1 ? t_end * static_cast<double>(k) / (uniform_samples - 1) : 0.0;
  };
  if (uniform_samples > 0) {
    record(0, st.state());
    next_grid = 1;
  } else {
    record(0, st.state());
  }
  if (uniform_samples == 1) next_grid = 1;

  while (st.time() < t_end) {
    const auto status = st.step(t_end);
    if (status != ode::StepStatus::Accepted) {
      const bool singular = st.last_rejection_was_domain();
      throw IntegrationError(singular ? ErrorKind::SingularityReached : ErrorKind::StepSizeUnderflow,
                             singular ? "trajectory reached the chart singularity guard band"
                                      : "step size fell below the floor",
                             std::move(tr));
    }
    ++tr.accepted_steps;
    if (detail::near_singularity(m, st.state()))
      throw IntegrationError(ErrorKind::SingularityReached, "trajectory reached the chart singularity guard band",
                             std::move(tr));
    if (uniform_samples > 0) {
      while (next_grid < static_cast<std::size_t>(uniform_samples) && grid_time(next_grid) <= st.time()) {
        const double tg = grid_time(next_grid);
        record(tg, next_grid + 1 == static_cast<std::size_t>(uniform_samples) ? st.state() : st.dense(tg));
        ++next_grid;
      }
    } else {
      record(st.time(), st.state());
    }
  }
  return tr;
}

inline ConservationReport conservation_report(const Trajectory& tr) {
  if (tr.samples.empty()) throw Error(ErrorKind::ConfigError, "empty trajectory");
  ConservationReport r;
  r.steps = tr.accepted_steps;
  const double H0 = tr.samples.front().H, pf0 = tr.samples.front().state.p_phi;
  const double scale = H0 != 0 ? std::abs(H0) : 1.0;
  for (const auto& s : tr.samples) {
    r.max_energy_drift = std::max(r.max_energy_drift, std::abs(s.H - H0) / scale);
    r.max_pphi_drift = std::max(r.max_pphi_drift, std::abs(s.state.p_phi - pf0));
  }
  return r;
}

struct RadialPeriod {
  double period = 0;
  double phi_advance = 0;  ///< mean advance of phi per radial period
  double u_max = 0;        ///< turning values observed on the orbit
  double u_min = 0;
  int oscillations = 0;
  std::vector<double> maxima_times;
};

/// Time between successive maxima of u averaged over `oscillations` periods.
inline RadialPeriod measure_radial_period(const SurfaceModel& m, const PhasePoint& s0, double tol = 1e-12,
                                          int oscillations = 10, long max_steps = 2000000) {
  require_surface(m, "measure_radial_period");
  const double E = energy(m, s0);
  const Band band = allowed_band(m, E, s0.p_phi, s0.u);
  if (!band.bounded()) throw Error(ErrorKind::UnboundMotion, "the allowed band is not bounded by two turning points");

  auto st = detail::make_stepper(m, s0, tol);
  RadialPeriod out;
  std::vector<double> phi_at_max;
  double umin_sum = 0, umax_sum = 0;
  int nmin = 0;
  // root of p_u on the last step via the dense polynomial
  auto refine = [&]() {
    double lo = st.prev_time(), hi = st.time();
    const double plo = st.prev_state()[1];
    for (int it = 0; it < 200; ++it) {
      const double mid = lo + (hi - lo) / 2;
      if (mid == lo || mid == hi) break;
      const double pm = st.dense(mid)[1];
      if ((pm > 0) == (plo > 0))
        lo = mid;
      else
        hi = mid;
    }
    return lo + (hi - lo) / 2;
  };
  const double horizon = std::numeric_limits<double>::max();
  long steps = 0;
  while (static_cast<int>(out.maxima_times.size()) < oscillations + 1) {
    if (++steps > max_steps) throw Error(ErrorKind::UnboundMotion, "no sign change of p_u within the step horizon");
    const auto status = st.step(horizon);
    if (status != ode::StepStatus::Accepted)
      throw Error(st.last_rejection_was_domain() ? ErrorKind::SingularityReached : ErrorKind::StepSizeUnderflow,
                  "integration failed while measuring the radial period");
    if (detail::near_singularity(m, st.state()))
      throw Error(ErrorKind::SingularityReached, "trajectory reached the chart singularity guard band");
    const double p0 = st.prev_state()[1], p1 = st.state()[1];
    if (p0 > 0 && p1 <= 0) {
      const double tm = refine();
      const auto y = st.dense(tm);
      out.maxima_times.push_back(tm);
      phi_at_max.push_back(y[2]);
      umax_sum += y[0];
    } else if (p0 < 0 && p1 >= 0) {
      const double tm = refine();
      umin_sum += st.dense(tm)[0];
      ++nmin;
    }
  }
  out.oscillations = oscillations;
  out.period = (out.maxima_times.back() - out.maxima_times.front()) / oscillations;
  out.phi_advance = (phi_at_max.back() - phi_at_max.front()) / oscillations;
  out.u_max = umax_sum / static_cast<double>(out.maxima_times.size());
  out.u_min = nmin ? umin_sum / nmin : band.lower;
  return out;
}

/// Same surface with every magnetic source reversed (time reversal partner).
inline SurfaceModel magnetically_reversed(const SurfaceModel& m) {
  Background b = m.background();
  if (auto* d = std::get_if<DyonPair>(&b)) {
    d->g1 = -d->g1;
    d->g2 = -d->g2;
  } else if (auto* p = std::get_if<ParabolicBackground>(&b)) {
    p->g = -p->g;
    p->bfield = -p->bfield;
  }
  return make_model(m.surface(), b, m.dimensionality());
}

}  // namespace qlandau
