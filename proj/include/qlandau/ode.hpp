/**
 * \file ode.hpp
 * \brief Dormand-Prince 8(5,3) explicit Runge-Kutta stepper with dense output.
 *
 * Coefficients and step-size control follow Hairer's DOP853; the dense output
 * is the 6th-order variant that needs no extra stages.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace qlandau::ode {

/// Right-hand side. Returns false when y lies outside the admissible domain.
using Rhs = std::function<bool(double t, const std::vector<double>& y, std::vector<double>& dydt)>;

enum class StepStatus { Accepted, DomainRejected, Underflow };

class Dop853 {
 public:
  Dop853(Rhs rhs, std::size_t n, double rtol, double atol) : rhs_(std::move(rhs)), n_(n), rtol_(rtol), atol_(atol) {
    for (auto* v : {&y_, &yprev_, &ytmp_, &k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &k8_, &k9_, &k10_, &r1_, &r2_, &r3_,
                    &r4_, &r5_, &r6_, &r7_, &r8_})
      v->assign(n, 0.0);
  }

  /// Returns false if the initial state is outside the domain.
  bool init(double t0, const std::vector<double>& y0, double h0 = 0) {
    t_ = tprev_ = t0;
    y_ = yprev_ = y0;
    if (!rhs_(t_, y_, k1_)) return false;
    h_ = h0 > 0 ? h0 : initial_step();
    return true;
  }

  double time() const { return t_; }
  double prev_time() const { return tprev_; }
  double step_size() const { return h_; }
  const std::vector<double>& state() const { return y_; }
  const std::vector<double>& prev_state() const { return yprev_; }
  /// True when the last rejection was caused by leaving the domain.
  bool last_rejection_was_domain() const { return domain_rejection_; }

  /// Takes one accepted step, never past t_max. Halves the step when a stage leaves the domain.
  StepStatus step(double t_max) {
    constexpr double c2 = 0.05260015195876773187856, c3 = 0.07890022793815159781784,
                     c4 = 0.11835034190722739672676, c5 = 0.28164965809277260327324,
                     c6 = 0.33333333333333333333333, c7 = 0.25000000000000000000000,
                     c8 = 0.30769230769230769230769, c9 = 0.65128205128205128205128,
                     c10 = 0.60000000000000000000000, c11 = 0.85714285714285714285714;
    constexpr double b1 = 0.05429373411656876223805, b6 = 4.45031289275240888144114, b7 = 1.89151789931450038304282,
                     b8 = -5.80120396001058478146721, b9 = 0.31116436695781989440892,
                     b10 = -0.15216094966251607855618, b11 = 0.20136540080403034837478,
                     b12 = 0.04471061572777259051769;
    constexpr double bhh1 = 0.24409448818897637795276, bhh2 = 0.73384668828161185734136,
                     bhh3 = 0.02205882352941176470588;
    constexpr double er1 = 0.01312004499419488073250, er6 = -1.22515644637620444072057,
                     er7 = -0.49575894965725019152141, er8 = 1.66437718245498653696153,
                     er9 = -0.35032884874997368168865, er10 = 0.33417911871301747902973,
                     er11 = 0.08192320648511571246571, er12 = -0.02235530786388629525884;
    constexpr double a21 = 0.05260015195876773187856, a31 = 0.01972505698453789945446,
                     a32 = 0.05917517095361369836338, a41 = 0.02958758547680684918169,
                     a43 = 0.08876275643042054754507, a51 = 0.24136513415926668550237,
                     a53 = -0.88454947932828608534486, a54 = 0.92483400326179200311574,
                     a61 = 0.03703703703703703703704, a64 = 0.17082860872947387127960,
                     a65 = 0.12546768756682242501669, a71 = 0.03710937500000000000000,
                     a74 = 0.17025221101954403931498, a75 = 0.06021653898045596068502,
                     a76 = -0.01757812500000000000000, a81 = 0.03709200011850479271088,
                     a84 = 0.17038392571223999381021, a85 = 0.10726203044637328465181,
                     a86 = -0.01531943774862440175279, a87 = 0.00827378916381402288758,
                     a91 = 0.62411095871607571711443, a94 = -3.36089262944694129406857,
                     a95 = -0.86821934684172600681819, a96 = 27.5920996994467083049416,
                     a97 = 20.1540675504778934086187, a98 = -43.4898841810699588477366,
                     a101 = 0.47766253643826436589043, a104 = -2.48811461997166764192642,
                     a105 = -0.59029082683684299637145, a106 = 21.2300514481811942347289,
                     a107 = 15.2792336328824235832597, a108 = -33.2882109689848629194453,
                     a109 = -0.02033120170850862613582, a111 = -0.93714243008598732571704,
                     a114 = 5.18637242884406370830024, a115 = 1.09143734899672957818500,
                     a116 = -8.14978701074692612513997, a117 = -18.5200656599969598641566,
                     a118 = 22.7394870993505042818970, a119 = 2.49360555267965238987089,
                     a1110 = -3.04676447189821950038237, a121 = 2.27331014751653820792360,
                     a124 = -10.5344954667372501984067, a125 = -2.00087205822486249909676,
                     a126 = -17.9589318631187989172766, a127 = 27.9488845294199600508500,
                     a128 = -2.85899827713502369474066, a129 = -8.87285693353062954433549,
                     a1210 = 12.3605671757943030647266, a1211 = 0.64339274601576353035597;
    constexpr double d41 = -5.40685903845352664250302, d46 = 367.268892700041893590281,
                     d47 = 154.609958204083905482676, d48 = -505.920283865412564024766,
                     d49 = 15.5975154819608130688200, d410 = -26.1936204184402805956691,
                     d411 = -0.74003512364122230844721, d412 = 1.11776539319431476294221,
                     d413 = -0.33333333333333333333333, d51 = 6.51987095363079615048119,
                     d56 = -1066.34956011730205278592, d57 = -351.864047514639508625601,
                     d58 = 1363.51955696662884408368, d59 = -112.727669432657582669864,
                     d510 = 159.796191868560289612921, d511 = -2.13865100308788816220259,
                     d512 = -3.75569172113289760348584, d513 = 7.00000000000000000000000,
                     d61 = 10.4698004763293477204238, d66 = -1380.01473607038123167155,
                     d67 = -531.219827862514074379012, d68 = 1866.98964341870892451324,
                     d69 = -53.3302605020547902574560, d610 = 82.4147560258671369782481,
                     d611 = 7.38443654502992069572676, d612 = 0.41729908012587751149843,
                     d613 = -3.11111111111111111111111, d71 = -16.6338582677165354330709,
                     d76 = 4516.16568914956011730205, d77 = 1393.85185384057776465219,
                     d78 = -5687.52042419481539670071, d79 = 473.965563750151263163661,
                     d710 = -661.810776942355889724311, d711 = -18.0180473354013232598119;
    constexpr double safe = 0.9, fac1 = 0.333, fac2 = 6.0;

    const std::size_t n = n_;
    domain_rejection_ = false;
    for (;;) {
      double h = std::min(h_, t_max - t_);
      const bool clipped = h < h_;
      if (!std::isfinite(h_) || h_ < 1e-14 * std::max(1.0, std::abs(t_))) return StepStatus::Underflow;

      auto stage = [&](double c, std::vector<double>& out, auto&& combine) {
        for (std::size_t i = 0; i < n; ++i) ytmp_[i] = y_[i] + h * combine(i);
        return rhs_(t_ + c * h, ytmp_, out);
      };
      bool ok = stage(c2, k2_, [&](std::size_t i) { return a21 * k1_[i]; }) &&
                stage(c3, k3_, [&](std::size_t i) { return a31 * k1_[i] + a32 * k2_[i]; }) &&
                stage(c4, k4_, [&](std::size_t i) { return a41 * k1_[i] + a43 * k3_[i]; }) &&
                stage(c5, k5_, [&](std::size_t i) { return a51 * k1_[i] + a53 * k3_[i] + a54 * k4_[i]; }) &&
                stage(c6, k6_, [&](std::size_t i) { return a61 * k1_[i] + a64 * k4_[i] + a65 * k5_[i]; }) &&
                stage(c7, k7_,
                      [&](std::size_t i) { return a71 * k1_[i] + a74 * k4_[i] + a75 * k5_[i] + a76 * k6_[i]; }) &&
                stage(c8, k8_,
                      [&](std::size_t i) {
                        return a81 * k1_[i] + a84 * k4_[i] + a85 * k5_[i] + a86 * k6_[i] + a87 * k7_[i];
                      }) &&
                stage(c9, k9_,
                      [&](std::size_t i) {
                        return a91 * k1_[i] + a94 * k4_[i] + a95 * k5_[i] + a96 * k6_[i] + a97 * k7_[i] + a98 * k8_[i];
                      }) &&
                stage(c10, k10_,
                      [&](std::size_t i) {
                        return a101 * k1_[i] + a104 * k4_[i] + a105 * k5_[i] + a106 * k6_[i] + a107 * k7_[i] +
                               a108 * k8_[i] + a109 * k9_[i];
                      }) &&
                stage(c11, k2_,
                      [&](std::size_t i) {
                        return a111 * k1_[i] + a114 * k4_[i] + a115 * k5_[i] + a116 * k6_[i] + a117 * k7_[i] +
                               a118 * k8_[i] + a119 * k9_[i] + a1110 * k10_[i];
                      }) &&
                stage(1.0, k3_, [&](std::size_t i) {
                  return a121 * k1_[i] + a124 * k4_[i] + a125 * k5_[i] + a126 * k6_[i] + a127 * k7_[i] +
                         a128 * k8_[i] + a129 * k9_[i] + a1210 * k10_[i] + a1211 * k2_[i];
                });
      if (!ok) {
        domain_rejection_ = true;
        h_ = h / 2;
        continue;
      }
      for (std::size_t i = 0; i < n; ++i) {
        k4_[i] = b1 * k1_[i] + b6 * k6_[i] + b7 * k7_[i] + b8 * k8_[i] + b9 * k9_[i] + b10 * k10_[i] + b11 * k2_[i] +
                 b12 * k3_[i];
        k5_[i] = y_[i] + h * k4_[i];
      }
      double err = 0, err2 = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double sk = atol_ + rtol_ * std::max(std::abs(y_[i]), std::abs(k5_[i]));
        if (sk == 0) continue;
        double e = (k4_[i] - bhh1 * k1_[i] - bhh2 * k9_[i] - bhh3 * k3_[i]) / sk;
        err2 += e * e;
        e = (er1 * k1_[i] + er6 * k6_[i] + er7 * k7_[i] + er8 * k8_[i] + er9 * k9_[i] + er10 * k10_[i] +
             er11 * k2_[i] + er12 * k3_[i]) /
            sk;
        err += e * e;
      }
      double deno = err + 0.01 * err2;
      if (deno <= 0) deno = 1;
      err = h * err / std::sqrt(deno * static_cast<double>(n));
      double fac = std::pow(err, 1.0 / 8);
      fac = std::max(1 / fac2, std::min(1 / fac1, fac / safe));
      if (!std::isfinite(err)) {
        h_ = h / 2;
        continue;
      }
      if (err <= 1) {
        std::vector<double>& knew = k4_;
        if (!rhs_(t_ + h, k5_, knew)) {
          domain_rejection_ = true;
          h_ = h / 2;
          continue;
        }
        for (std::size_t i = 0; i < n; ++i) {
          r1_[i] = y_[i];
          const double ydiff = k5_[i] - y_[i];
          r2_[i] = ydiff;
          const double bspl = h * k1_[i] - ydiff;
          r3_[i] = bspl;
          r4_[i] = ydiff - h * knew[i] - bspl;
          r5_[i] = h * (d41 * k1_[i] + d46 * k6_[i] + d47 * k7_[i] + d48 * k8_[i] + d49 * k9_[i] + d410 * k10_[i] +
                        d411 * k2_[i] + d412 * k3_[i] + d413 * knew[i]);
          r6_[i] = h * (d51 * k1_[i] + d56 * k6_[i] + d57 * k7_[i] + d58 * k8_[i] + d59 * k9_[i] + d510 * k10_[i] +
                        d511 * k2_[i] + d512 * k3_[i] + d513 * knew[i]);
          r7_[i] = h * (d61 * k1_[i] + d66 * k6_[i] + d67 * k7_[i] + d68 * k8_[i] + d69 * k9_[i] + d610 * k10_[i] +
                        d611 * k2_[i] + d612 * k3_[i] + d613 * knew[i]);
          r8_[i] = h * (d71 * k1_[i] + d76 * k6_[i] + d77 * k7_[i] + d78 * k8_[i] + d79 * k9_[i] + d710 * k10_[i] +
                        d711 * k2_[i]);
        }
        k1_ = knew;
        yprev_ = y_;
        y_ = k5_;
        tprev_ = t_;
        t_ = (h == t_max - t_) ? t_max : t_ + h;
        if (!clipped) h_ = h / fac;
        return StepStatus::Accepted;
      }
      h_ = h / std::min(1 / fac1, fac / safe);
    }
  }

  /// Dense output on [prev_time, time].
  std::vector<double> dense(double t) const {
    std::vector<double> x(n_);
    if (t == t_) return y_;
    if (t == tprev_) return yprev_;
    const double s = (t - tprev_) / (t_ - tprev_), s1 = 1 - s;
    for (std::size_t i = 0; i < n_; ++i)
      x[i] = r1_[i] + s * (r2_[i] + s1 * (r3_[i] + s * (r4_[i] + s1 * (r5_[i] + s * (r6_[i] + s1 * (r7_[i] + s * r8_[i]))))));
    return x;
  }

 private:
  double initial_step() {
    double dnf = 0, dny = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double sk = atol_ + rtol_ * std::abs(y_[i]);
      if (sk == 0) continue;
      dnf += (k1_[i] / sk) * (k1_[i] / sk);
      dny += (y_[i] / sk) * (y_[i] / sk);
    }
    double h = std::sqrt(dny / dnf) * 0.01;
    if (!std::isfinite(dnf + dny) || dnf <= 1e-15 || dny <= 1e-15) h = 1e-6;
    for (std::size_t i = 0; i < n_; ++i) ytmp_[i] = y_[i] + h * k1_[i];
    if (!rhs_(t_ + h, ytmp_, k2_)) return h * 1e-3;
    double der2 = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double sk = atol_ + rtol_ * std::abs(y_[i]);
      if (sk == 0) continue;
      der2 += ((k2_[i] - k1_[i]) / sk) * ((k2_[i] - k1_[i]) / sk);
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 > 1e-15 ? std::pow(0.01 / der12, 1.0 / 8) : std::max(1e-6, h * 1e-3);
    return std::min(100 * h, h1);
  }

  Rhs rhs_;
  std::size_t n_;
  double rtol_, atol_;
  double t_ = 0, tprev_ = 0, h_ = 0;
  bool domain_rejection_ = false;
  std::vector<double> y_, yprev_, ytmp_, k1_, k2_, k3_, k4_, k5_, k6_, k7_, k8_, k9_, k10_;
  std::vector<double> r1_, r2_, r3_, r4_, r5_, r6_, r7_, r8_;
};

}  // namespace qlandau::ode
