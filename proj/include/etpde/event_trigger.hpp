#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "etpde/certificates.hpp"
#include "etpde/lyapunov.hpp"
#include "etpde/simulator.hpp"
#include "etpde/types.hpp"

namespace etpde {

/// Switching-based event trigger: after each update the input is held for the
/// dwell time tau without testing; afterwards the trigger is tested every
/// `test_step` until
///   N ||B (f(F x(t_k)) - f(F x(t)))|| >= sigma ell V(x(t)).
template <typename Scalar>
struct TriggerConfig {
  Scalar tau = 0;
  Scalar sigma = Scalar(0.5);
  Scalar test_step = 0;  // 0: tau / 50
  // constants of the sampled-data envelope G e^{-chi t}, for diagnostics
  Scalar envelope_gain = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar envelope_rate = std::numeric_limits<Scalar>::quiet_NaN();

  Scalar stride() const { return test_step > 0 ? test_step : tau / Scalar(50); }

  void validate() const {
    if (!(tau > 0)) throw ValidationError("trigger.tau must be positive");
    if (!(sigma > 0 && sigma < 1)) throw ValidationError("trigger.sigma must lie in (0, 1)");
    if (!(test_step >= 0)) throw ValidationError("trigger.test_step must be nonnegative");
  }
};

template <typename Scalar>
struct TriggerTest {
  Scalar lhs = 0;
  Scalar rhs = 0;
  bool fired = false;
};

/// `held` is f(F x(t_k)). Fires iff lhs >= rhs with lhs > 0, so a state that
/// has not drifted from the last update never fires.
template <typename Scalar>
TriggerTest<Scalar> trigger_test(const TriggerConfig<Scalar>& cfg, const LyapunovOracle<Scalar>& oracle,
                                 const ModalModel<Scalar>& model, const FeedbackGain<Scalar>& gain,
                                 const SectorNonlinearity<Scalar>& f, const Vec<Scalar>& held,
                                 const Vec<Scalar>& x_now) {
  TriggerTest<Scalar> out;
  const Vec<Scalar> drift = model.input * (held - f.apply(gain.lifted * x_now));
  out.lhs = oracle.gamma(drift.norm());
  out.rhs = cfg.sigma * oracle.alpha(oracle(x_now));
  out.fired = out.lhs > 0 && out.lhs >= out.rhs;
  return out;
}

template <typename Scalar>
struct TestPoint {
  Scalar t = 0;
  Scalar lhs = 0;
  Scalar rhs = 0;
  bool fired = false;
};

template <typename Scalar>
struct TriggeredRun {
  SimulationRecord<Scalar> record;
  std::vector<TestPoint<Scalar>> tests;  // every evaluated trigger test
};

struct TriggeredOptions {
  double output_step = 0;  // 0: tau / 5
  bool keep_tests = true;
};

/// Event-triggered closed loop on [0, t_end]. Inter-event times are exactly
/// tau + i * test_step, i >= 0; event times are their running sums, rounded
/// up where needed so that consecutive differences never fall below tau.
template <typename Scalar>
TriggeredRun<Scalar> simulate_et(const ModalModel<Scalar>& model, const FeedbackGain<Scalar>& gain,
                                 const SectorNonlinearity<Scalar>& f, const TriggerConfig<Scalar>& cfg,
                                 const LyapunovOracle<Scalar>& oracle, const Vec<Scalar>& x0, Scalar t_end,
                                 const TriggeredOptions& opt = {}) {
  cfg.validate();
  if (x0.size() != model.dim()) throw ValidationError("initial state has the wrong dimension");
  if (!x0.allFinite()) throw ValidationError("initial state is not finite");
  if (!(t_end > 0)) throw ValidationError("simulation.t_end must be positive");
  const Scalar h_test = cfg.stride();
  const Scalar out_step = opt.output_step > 0 ? Scalar(opt.output_step) : cfg.tau / Scalar(5);
  const std::vector<Scalar> grid = detail::output_times<Scalar>(t_end, out_step);
  const bool with_envelope = std::isfinite(cfg.envelope_gain) && std::isfinite(cfg.envelope_rate);
  const Scalar leg = oracle.closed_gain * cfg.envelope_gain * std::exp(-cfg.envelope_rate * cfg.tau);

  TriggeredRun<Scalar> run;
  auto& rec = run.record;
  Vec<Scalar> x_k = x0;
  Scalar t_k = 0;
  Scalar gap_in = 0;
  std::size_t next_out = 0;
  for (Index k = 0;; ++k) {
    const Vec<Scalar> u = gain.lifted * x_k;
    const Vec<Scalar> held = f.apply(u);
    const Vec<Scalar> forcing = model.input * held;
    const Scalar norm_k = x_k.norm();
    rec.events.push_back({k, t_k, gap_in, k == 0 ? "initial" : "triggered", norm_k});

    // first test time that fires
    Scalar gap = std::numeric_limits<Scalar>::infinity();
    Vec<Scalar> x_next;
    for (long long i = 0;; ++i) {
      const Scalar s = cfg.tau + Scalar(i) * h_test;
      if (t_k + s > t_end) break;
      const Vec<Scalar> x = step_exact<Scalar>(model.eigenvalues, x_k, forcing, s);
      detail::guard_blowup(x, t_k + s);
      const auto test = trigger_test(cfg, oracle, model, gain, f, held, x);
      if (opt.keep_tests) run.tests.push_back({t_k + s, test.lhs, test.rhs, test.fired});
      if (test.fired) {
        gap = s;
        x_next = x;
        break;
      }
    }
    Scalar t_next = t_k + gap;
    if (std::isfinite(gap) && t_next - t_k < gap)
      t_next = std::nextafter(t_next, std::numeric_limits<Scalar>::infinity());

    while (next_out < grid.size() && grid[next_out] < t_next) {
      const Scalar s = grid[next_out] - t_k;
      const Vec<Scalar> x = s == 0 ? x_k : step_exact<Scalar>(model.eigenvalues, x_k, forcing, s);
      const auto test = trigger_test(cfg, oracle, model, gain, f, held, x);
      rec.push(grid[next_out], x, u);
      rec.lyapunov.back() = oracle(x);
      rec.trigger_lhs.back() = test.lhs;
      rec.trigger_rhs.back() = test.rhs;
      if (with_envelope)
        rec.envelope.back() = s <= cfg.tau
                                  ? cfg.envelope_gain * std::exp(-cfg.envelope_rate * s) * norm_k
                                  : leg * std::exp(-(Scalar(1) - cfg.sigma) * oracle.ell * (s - cfg.tau)) * norm_k;
      ++next_out;
    }
    if (!std::isfinite(gap)) break;
    x_k = x_next;
    t_k = t_next;
    gap_in = gap;
  }
  return run;
}

// ---------------------------------------------------------------------------
// Iterate bounds
// ---------------------------------------------------------------------------

/// Constants of the exponential case: psi_1(s) = s, psi_2(s) = N s,
/// alpha(s) = ell s, p = 1. The decay exponent of the sampled-data envelope
/// (chi) is used in vartheta.
template <typename Scalar>
struct IterateReport {
  Scalar G = 1;
  Scalar chi = 0;
  Scalar ell = 0;
  Scalar N = 1;
  Scalar sigma = 0;
  Scalar tau = 0;
  Scalar a1 = 1, a2 = 1, a3 = 0, p = 1;
  Scalar vartheta = 0;
  Scalar iota = 0;  // 0 when vartheta >= 1
  std::string envelope_source;

  bool certified() const { return vartheta < 1; }

  /// One-interval map rho(m, n) = N G e^{-chi tau} e^{-(1 - sigma) ell n} m.
  Scalar rho(Scalar m, Scalar n) const {
    return N * G * std::exp(-chi * tau) * std::exp(-(Scalar(1) - sigma) * ell * n) * m;
  }
};

template <typename Scalar>
IterateReport<Scalar> make_iterate_report(Scalar G, Scalar chi, Scalar ell, Scalar N, Scalar sigma, Scalar tau,
                                          std::string source = "sampled-data") {
  if (!(G >= 1 && chi > 0)) throw ValidationError("iterate report needs G >= 1 and chi > 0");
  if (!(ell > 0 && N >= 1)) throw ValidationError("iterate report needs ell > 0 and N >= 1");
  if (!(sigma > 0 && sigma < 1 && tau > 0)) throw ValidationError("iterate report needs 0 < sigma < 1, tau > 0");
  IterateReport<Scalar> r;
  r.G = G;
  r.chi = chi;
  r.ell = ell;
  r.N = N;
  r.sigma = sigma;
  r.tau = tau;
  r.a1 = 1;
  r.a2 = N;
  r.a3 = ell;
  r.p = 1;
  r.vartheta = std::pow(r.a2 / r.a1, Scalar(1) / r.p) * G * std::exp(-chi * tau);
  r.iota = r.vartheta < 1 ? std::min((Scalar(1) - sigma) * r.a3 / r.p, -std::log(r.vartheta) / tau) : Scalar(0);
  r.envelope_source = std::move(source);
  return r;
}

/// R^(K)(m, {n_1..n_K}) by K-fold composition of rho.
template <typename Scalar>
Scalar iterate_bound(const IterateReport<Scalar>& report, Scalar m, const std::vector<Scalar>& gaps) {
  Scalar r = m;
  for (const Scalar n : gaps) r = report.rho(r, n);
  return r;
}

/// Checks R^(K)(m, {n_j}) <= mu(omega(K) m, max_j n_j) for user-supplied
/// comparison functions.
template <typename Scalar, typename Mu, typename Omega>
bool satisfies_iterate_condition(const IterateReport<Scalar>& report, Mu&& mu, Omega&& omega, Scalar m,
                                 const std::vector<Scalar>& gaps) {
  const Scalar longest = gaps.empty() ? Scalar(0) : *std::max_element(gaps.begin(), gaps.end());
  return iterate_bound(report, m, gaps) <= mu(omega(static_cast<Scalar>(gaps.size())) * m, longest);
}

enum class Verdict { Pass, Fail, Inconclusive };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

template <typename Scalar>
struct CorollaryCheck {
  Verdict verdict = Verdict::Inconclusive;
  bool iterate_chain = true;   // ||x(t_k)|| <= R^(k)(||x0||, {J_j})
  bool exponential = true;     // ||x(t_k)|| <= e^{-iota t_k} ||x0||
  Scalar max_chain_ratio = 0;  // max ||x(t_k)|| / R^(k)
  Scalar max_exp_ratio = 0;    // max ||x(t_k)|| / (e^{-iota t_k} ||x0||)
  Scalar measured_rate = std::numeric_limits<Scalar>::infinity();  // min_k -ln(||x(t_k)|| / ||x0||) / t_k
  std::size_t events = 0;
  std::string note;
};

template <typename Scalar>
CorollaryCheck<Scalar> check_corollary(const IterateReport<Scalar>& report, const std::vector<Event<Scalar>>& events,
                                       Scalar tolerance = Scalar(1e-6)) {
  CorollaryCheck<Scalar> c;
  c.events = events.size();
  if (events.empty()) throw ValidationError("check_corollary: empty event log");
  const Scalar x0 = events.front().state_norm;
  std::vector<Scalar> gaps;
  for (std::size_t k = 1; k < events.size(); ++k) {
    gaps.push_back(events[k].gap - report.tau);
    const Scalar norm = events[k].state_norm;
    const Scalar chain = iterate_bound(report, x0, gaps);
    const Scalar expo = std::exp(-report.iota * events[k].time) * x0;
    if (x0 == 0) continue;
    c.max_chain_ratio = std::max(c.max_chain_ratio, norm / chain);
    if (norm > chain * (Scalar(1) + tolerance)) c.iterate_chain = false;
    if (report.certified()) {
      c.max_exp_ratio = std::max(c.max_exp_ratio, norm / expo);
      if (norm > expo * (Scalar(1) + tolerance)) c.exponential = false;
    }
    if (events[k].time > 0)
      c.measured_rate = std::min(c.measured_rate, -std::log(norm / x0) / events[k].time);
  }
  if (!report.certified()) {
    c.verdict = Verdict::Inconclusive;
    c.note = "vartheta >= 1: the sufficient condition does not hold";
  } else {
    c.verdict = (c.iterate_chain && c.exponential) ? Verdict::Pass : Verdict::Fail;
  }
  return c;
}

template <typename Scalar>
struct UpdateCounts {
  long long sampled = 0;
  long long triggered = 0;
  Scalar savings = 0;  // 1 - triggered / sampled
};

template <typename Scalar>
UpdateCounts<Scalar> compare_update_counts(Scalar tau, Scalar t_end, std::size_t et_events) {
  UpdateCounts<Scalar> c;
  c.sampled = static_cast<long long>(std::ceil(t_end / tau - Scalar(1e-12)));
  c.triggered = static_cast<long long>(et_events);
  c.savings = c.sampled > 0 ? Scalar(1) - Scalar(c.triggered) / Scalar(c.sampled) : Scalar(0);
  return c;
}

/// Runs the event-triggered loop and reports its update count against
/// tau-periodic sampling over the same horizon.
template <typename Scalar>
UpdateCounts<Scalar> compare_update_counts(const ModalModel<Scalar>& model, const FeedbackGain<Scalar>& gain,
                                           const SectorNonlinearity<Scalar>& f, const TriggerConfig<Scalar>& cfg,
                                           const LyapunovOracle<Scalar>& oracle, const Vec<Scalar>& x0,
                                           Scalar t_end) {
  TriggeredOptions opt;
  opt.keep_tests = false;
  opt.output_step = double(t_end);
  const auto run = simulate_et(model, gain, f, cfg, oracle, x0, t_end, opt);
  return compare_update_counts<Scalar>(cfg.tau, t_end, run.record.events.size());
}

/// Uniform attractivity constants for the exponential case, with
/// mu(r, s) = r e^{-iota s} and omega(K) = vartheta^K: states starting in the
/// eta-ball stay in the epsilon-ball after T = (N' - 2)(J' + tau).
template <typename Scalar>
struct UgasWitness {
  long long n_prime = 0;
  Scalar j_prime = 0;
  Scalar horizon = 0;
};

template <typename Scalar>
UgasWitness<Scalar> ugas_witness(const IterateReport<Scalar>& report, Scalar eta, Scalar epsilon) {
  if (!report.certified()) throw CertificationError("UGAS witness needs vartheta < 1");
  if (!(eta > 0 && epsilon > 0)) throw ValidationError("UGAS witness needs eta, epsilon > 0");
  const Scalar lead = std::max(report.G, report.vartheta) * eta;
  UgasWitness<Scalar> w;
  const Scalar ratio = std::log(epsilon / lead);  // <= 0 when eta is large
  w.n_prime = ratio >= 0 ? 0 : static_cast<long long>(std::ceil(ratio / std::log(report.vartheta)));
  w.n_prime = std::max<long long>(w.n_prime, 2);
  w.j_prime = ratio >= 0 ? Scalar(0) : -ratio / report.iota;
  w.horizon = Scalar(w.n_prime - 2) * (w.j_prime + report.tau);
  return w;
}

}  // namespace etpde
