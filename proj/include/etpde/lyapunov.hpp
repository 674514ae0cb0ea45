#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "etpde/certificates.hpp"
#include "etpde/simulator.hpp"
#include "etpde/types.hpp"

namespace etpde {

/// V(x) = sup_{t >= 0} e^{zeta t} ||e^{A_cl t} x|| with the linear comparison
/// functions psi_1(s) = s, psi_2(s) = N s, alpha(s) = ell s, gamma(s) = N s.
template <typename Scalar>
struct LyapunovOracle {
  Scalar zeta = 0;
  Scalar ell = 0;             // zeta - theta_f beta / M
  Scalar closed_gain = 1;     // N
  Scalar closed_rate = 0;     // xi
  Scalar sector_shift = 0;    // theta_f beta / M
  ExponentialSupNorm<Scalar> norm;

  Scalar operator()(const Vec<Scalar>& x) const { return norm(x); }

  Scalar psi1(Scalar s) const { return s; }
  Scalar psi2(Scalar s) const { return closed_gain * s; }
  Scalar alpha(Scalar s) const { return ell * s; }
  Scalar gamma(Scalar s) const { return closed_gain * s; }
  Scalar horizon() const { return norm.horizon(); }
};

template <typename Scalar>
LyapunovOracle<Scalar> build_oracle(const SemigroupCertificate<Scalar>& cert, const Mat<Scalar>& a_cl,
                                    Scalar theta, Scalar zeta_fraction = Scalar(0.5),
                                    const SupNormOptions& opt = {}) {
  if (!(zeta_fraction > 0 && zeta_fraction < 1))
    throw ValidationError("certificate.zeta_fraction must lie in (0, 1)");
  if (!(theta >= 0)) throw ValidationError("sector bound must be nonnegative");
  LyapunovOracle<Scalar> o;
  o.closed_gain = cert.closed_gain;
  o.closed_rate = cert.closed_rate;
  o.sector_shift = cert.open_gain > 0 ? theta * cert.beta / cert.open_gain : Scalar(0);
  if (!(o.sector_shift < cert.closed_rate))
    throw CertificationError("sector bound too large for this certificate: theta_f beta / M = " +
                             std::to_string(double(o.sector_shift)) + " >= xi = " +
                             std::to_string(double(cert.closed_rate)));
  o.zeta = o.sector_shift + zeta_fraction * (cert.closed_rate - o.sector_shift);
  o.ell = o.zeta - o.sector_shift;
  o.norm = ExponentialSupNorm<Scalar>(a_cl, o.zeta, cert.closed_gain, cert.closed_rate, opt);
  return o;
}

template <typename Scalar>
Scalar eval_V(const LyapunovOracle<Scalar>& oracle, const Vec<Scalar>& x) {
  return oracle(x);
}

// ---------------------------------------------------------------------------

template <typename Scalar>
struct DissipationSample {
  Scalar t = 0;
  Scalar V = 0;
  Scalar dini = 0;       // (V(x(t+h)) - V(x(t))) / h
  Scalar rhs_bound = 0;  // -ell V + N ||d(t)||
  Scalar residual = 0;   // dini - rhs_bound
  Scalar tolerance = 0;  // 1e-3 (ell V + N ||d|| + 1)
  Scalar integral_bound = 0;  // e^{-ell t} V(x0) + N int_0^t e^{-ell (t-s)} ||d(s)|| ds
};

template <typename Scalar>
struct DissipationReport {
  std::vector<DissipationSample<Scalar>> samples;
  Scalar max_residual = -std::numeric_limits<Scalar>::infinity();  // max(residual - tolerance)
  Scalar max_integral_excess = 0;  // max(V / integral_bound - 1)
  bool pass = true;
  bool integral_pass = true;
  Scalar witness_t = std::numeric_limits<Scalar>::quiet_NaN();
  Vec<Scalar> witness_x;
  Vec<Scalar> witness_d;
};

struct DissipationOptions {
  double output_step = 0.05;
  double difference_step = 0;  // 0: 1e-4 / xi
  double integral_tolerance = 1e-6;
};

/// Checks the Dini-derivative bound D+V <= -ell V + N ||d|| along a disturbed
/// continuous-feedback run, and its integrated comparison form.
template <typename Scalar>
DissipationReport<Scalar> check_dissipation(const LyapunovOracle<Scalar>& oracle, const ModalModel<Scalar>& model,
                                            const FeedbackGain<Scalar>& gain, const SectorNonlinearity<Scalar>& f,
                                            const Disturbance<Scalar>& d, const Vec<Scalar>& x0, Scalar t_end,
                                            const DissipationOptions& opt = {}) {
  const Scalar h = opt.difference_step > 0 ? Scalar(opt.difference_step) : Scalar(1e-4) / oracle.closed_rate;
  const auto rec = simulate_disturbed<Scalar>(model, gain, f, d, x0, t_end, Scalar(opt.output_step));
  DisturbedIntegrator<Scalar> integrator(model, gain, f, d);
  const Scalar n = oracle.closed_gain, ell = oracle.ell;

  DissipationReport<Scalar> report;
  const Scalar v0 = oracle(x0);
  Scalar forced = 0;  // int_0^t e^{-ell (t-s)} ||d(s)|| ds
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const Scalar t = rec.times[i];
    const Vec<Scalar>& x = rec.states[i];
    if (i > 0) {
      const Scalar t0 = rec.times[i - 1], dt = t - t0, tm = t0 + dt / 2;
      forced = std::exp(-ell * dt) * forced +
               dt / Scalar(6) *
                   (std::exp(-ell * dt) * d.norm(t0) + Scalar(4) * std::exp(-ell * dt / 2) * d.norm(tm) + d.norm(t));
    }
    DissipationSample<Scalar> s;
    s.t = t;
    s.V = oracle(x);
    const Vec<Scalar> ahead = integrator.advance(x, t, h);
    s.dini = (oracle(ahead) - s.V) / h;
    const Scalar dn = d.norm(t);
    s.rhs_bound = -ell * s.V + n * dn;
    s.residual = s.dini - s.rhs_bound;
    s.tolerance = Scalar(1e-3) * (ell * s.V + n * dn + Scalar(1));
    s.integral_bound = std::exp(-ell * t) * v0 + n * forced;
    report.max_residual = std::max(report.max_residual, s.residual - s.tolerance);
    if (s.residual > s.tolerance && report.pass) {
      report.pass = false;
      report.witness_t = t;
      report.witness_x = x;
      report.witness_d = d(t);
    }
    if (s.integral_bound > 0) {
      const Scalar excess = s.V / s.integral_bound - Scalar(1);
      report.max_integral_excess = std::max(report.max_integral_excess, excess);
      if (excess > Scalar(opt.integral_tolerance)) report.integral_pass = false;
    } else if (s.V > 0) {
      report.integral_pass = false;
      report.max_integral_excess = std::numeric_limits<Scalar>::infinity();
    }
    report.samples.push_back(s);
  }
  return report;
}

}  // namespace etpde
