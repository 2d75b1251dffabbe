// Shared samplers and test-side oracles.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "qlandau/model.hpp"

namespace qltest {

using namespace qlandau;

inline std::vector<SurfaceModel> surface_variants() {
  return {
      make_model(Ellipsoid{1, 0.5}, FreeBackground{}, Dimensionality::Surface2D),
      make_model(Hyperboloid{1.3, 1.8}, FreeBackground{}, Dimensionality::Surface2D),
      make_model(Paraboloid{1.2}, FreeBackground{}, Dimensionality::Surface2D),
      make_model(Ellipsoid{1, 0.5}, DyonPair{1, 0.4, 0.7, -0.2}, Dimensionality::Surface2D),
      make_model(Ellipsoid{1.5, 0.7}, DyonPair{0.3, 0.3, 0.6, -0.6}, Dimensionality::Surface2D),
      make_model(Hyperboloid{1.3, 1.8}, DyonPair{0.5, -0.2, 0.4, 0.9}, Dimensionality::Surface2D),
      make_model(Hyperboloid{1.3, 1.8}, DyonPair{0.5, -0.5, 0.4, 0.4}, Dimensionality::Surface2D),
      make_model(Paraboloid{1.2}, ParabolicBackground{0.4, 0.3, 0.2, 0.5}, Dimensionality::Surface2D),
      make_model(Paraboloid{1.2}, ParabolicBackground{0.4, 0.3, 0, 0}, Dimensionality::Surface2D),
      make_model(Ellipsoid{1, 0.5}, DyonPair{1, 0.4, 0.7, -0.2}, Dimensionality::Ambient3D),
      make_model(Paraboloid{1.2}, ParabolicBackground{0.4, 0.3, 0.2, 0.5}, Dimensionality::Ambient3D),
  };
}

/// Uniform phase point inside the chart, away from the coordinate singularities.
inline PhasePoint random_point(const SurfaceModel& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mom(-2, 2), unit(0, 1);
  PhasePoint s;
  s.p_u = mom(rng);
  s.phi = 6 * unit(rng);
  s.p_phi = mom(rng);
  switch (m.kind()) {
    case ModelKind::FreeEllipsoid:
    case ModelKind::LandauEllipsoid: s.u = -0.98 + 1.96 * unit(rng); break;
    case ModelKind::FreeHyperboloid:
    case ModelKind::LandauHyperboloid: s.u = 1.02 + 3 * unit(rng); break;
    case ModelKind::FreeParaboloid:
    case ModelKind::LandauParaboloid: s.u = 0.05 + 4 * unit(rng); break;
    case ModelKind::TwoCenter3D:
      s.u = 1.02 + 3 * unit(rng);
      s.v = -0.98 + 1.96 * unit(rng);
      s.p_v = mom(rng);
      break;
    case ModelKind::Parabolic3D:
      s.u = 0.05 + 4 * unit(rng);
      s.v = 0.05 + 4 * unit(rng);
      s.p_v = mom(rng);
      break;
  }
  return s;
}

/// Largest relative deviation between closed-form gradients and a five-point central difference
/// (h = 1e-4 max(1, |x|)). Components are compared relative to max(|analytic|, 1e-6 (1 + |H|)), the
/// rounding floor of the difference quotient.
inline double gradient_fd_error(const SurfaceModel& m, const PhasePoint& s) {
  const Gradient g = gradients(m, s);
  const double H = energy(m, s);
  auto fd = [&](double PhasePoint::*field) {
    const double h = 1e-4 * std::max(1.0, std::abs(s.*field));
    auto at = [&](double k) {
      PhasePoint q = s;
      q.*field += k * h;
      return energy(m, q);
    };
    return (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h);
  };
  auto rel = [&](double an, double num) { return std::abs(an - num) / std::max(std::abs(an), 1e-6 * (1 + std::abs(H))); };
  double worst = std::max({rel(g.d_u, fd(&PhasePoint::u)), rel(g.d_pu, fd(&PhasePoint::p_u)),
                           rel(g.d_pphi, fd(&PhasePoint::p_phi))});
  if (g.d_phi != 0) worst = std::max(worst, 1.0);
  if (m.is_ambient())
    worst = std::max({worst, rel(g.d_v, fd(&PhasePoint::v)), rel(g.d_pv, fd(&PhasePoint::p_v))});
  return worst;
}

/// Independent evaluation of the two-center Hamiltonian in elliptic coordinates.
inline double two_center_reference(double a, double q1, double q2, double g1, double g2, double xi, double pxi,
                                   double eta, double peta, double pphi) {
  const double qp = q1 + q2, qm = q1 - q2, gp = g1 + g2, gm = g1 - g2;
  const double kinetic = (xi * xi - 1) * pxi * pxi + (1 - eta * eta) * peta * peta +
                         (1 / (xi * xi - 1) + 1 / (1 - eta * eta)) * pphi * pphi;
  const double V = (gp * gp - 2 * pphi * gm * xi) / (xi * xi - 1) + 2 * a * qp * xi;
  const double W = (gm * gm - 2 * pphi * gp * eta) / (1 - eta * eta) + 2 * a * qm * eta;
  return (kinetic + V + W) / (2 * a * a * (xi * xi - eta * eta));
}

}  // namespace qltest
