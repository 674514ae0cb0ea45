#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "etpde/feedback_design.hpp"
#include "etpde/linalg.hpp"
#include "etpde/nonlinearity.hpp"
#include "etpde/spectral_model.hpp"
#include "etpde/types.hpp"

namespace etpde {

inline constexpr double kBlowupThreshold = 1e12;

/// Exact step of w' = diag(lambda) w + B v over [0, h] with v held constant:
/// w_j <- e^{lambda_j h} w_j + phi_1(lambda_j h) h (B v)_j.
template <typename Scalar>
Vec<Scalar> step_exact(const Vec<Scalar>& eigenvalues, const Vec<Scalar>& w, const Vec<Scalar>& forcing,
                       Scalar h) {
  if (!(h >= 0)) throw ValidationError("step_exact: step must be nonnegative");
  Vec<Scalar> out(w.size());
  for (Index j = 0; j < w.size(); ++j)
    out(j) = std::exp(eigenvalues(j) * h) * w(j) + exp_integral(eigenvalues(j), h) * forcing(j);
  return out;
}

/// Held actuator value u, applied through f and the input matrix.
template <typename Scalar>
Vec<Scalar> step_exact(const ModalModel<Scalar>& model, const Vec<Scalar>& w, const Vec<Scalar>& u_held,
                       const SectorNonlinearity<Scalar>& f, Scalar h) {
  if (!(h > 0)) throw ValidationError("step_exact: step must be positive");
  return step_exact<Scalar>(model.eigenvalues, w, Vec<Scalar>(model.input * f.apply(u_held)), h);
}

// ---------------------------------------------------------------------------

enum class DisturbanceKind { Zero, Sinusoid, DecayingBurst, MismatchInduced };

inline std::string_view to_string(DisturbanceKind kind) {
  switch (kind) {
    case DisturbanceKind::Zero: return "zero";
    case DisturbanceKind::Sinusoid: return "sinusoid";
    case DisturbanceKind::DecayingBurst: return "decaying-burst";
    case DisturbanceKind::MismatchInduced: return "mismatch-induced";
  }
  return "unknown";
}

inline DisturbanceKind parse_disturbance_kind(std::string_view name) {
  if (name == "zero") return DisturbanceKind::Zero;
  if (name == "sinusoid") return DisturbanceKind::Sinusoid;
  if (name == "decaying-burst") return DisturbanceKind::DecayingBurst;
  if (name == "mismatch-induced") return DisturbanceKind::MismatchInduced;
  throw ValidationError("disturbance.kind: unknown kind '" + std::string(name) + "'");
}

/// d(t) = s(t) * direction, with
///   zero              s = 0
///   sinusoid          s = a sin(omega t + phase)
///   decaying-burst    s = a exp(-((t - center) / width)^2)
///   mismatch-induced  s = a exp(-rate t) cos(omega t + phase)
template <typename Scalar>
struct Disturbance {
  DisturbanceKind kind = DisturbanceKind::Zero;
  Scalar amplitude = 0;
  Scalar omega = 1;
  Scalar phase = 0;
  Scalar center = 0;
  Scalar width = 1;
  Scalar rate = 0;
  Vec<Scalar> direction;

  static Disturbance zero(Index dim) {
    Disturbance d;
    d.direction = Vec<Scalar>::Zero(dim);
    return d;
  }

  void validate(Index dim) const {
    if (direction.size() != dim) throw ValidationError("disturbance.direction has the wrong length");
    if (!direction.allFinite() || !std::isfinite(amplitude) || !std::isfinite(omega) ||
        !std::isfinite(phase) || !std::isfinite(center) || !std::isfinite(rate))
      throw ValidationError("disturbance parameters must be finite");
    if (kind == DisturbanceKind::DecayingBurst && !(width > 0))
      throw ValidationError("disturbance.width must be positive");
  }

  Scalar profile(Scalar t) const {
    switch (kind) {
      case DisturbanceKind::Zero: return 0;
      case DisturbanceKind::Sinusoid: return amplitude * std::sin(omega * t + phase);
      case DisturbanceKind::DecayingBurst: {
        const Scalar r = (t - center) / width;
        return amplitude * std::exp(-r * r);
      }
      case DisturbanceKind::MismatchInduced:
        return amplitude * std::exp(-rate * t) * std::cos(omega * t + phase);
    }
    return 0;
  }

  Vec<Scalar> operator()(Scalar t) const { return profile(t) * direction; }
  Scalar norm(Scalar t) const { return std::abs(profile(t)) * direction.norm(); }
  bool is_zero() const { return kind == DisturbanceKind::Zero || amplitude == 0 || direction.isZero(0); }
};

// ---------------------------------------------------------------------------

template <typename Scalar>
struct Event {
  Index k = 0;
  Scalar time = 0;
  Scalar gap = 0;  // t_k - t_{k-1}; 0 for the first event
  std::string reason;
  Scalar state_norm = 0;
};

/// Output of one closed-loop run. Diagnostic columns hold NaN when they were
/// not computed.
template <typename Scalar>
struct SimulationRecord {
  std::vector<Scalar> times;
  std::vector<Vec<Scalar>> states;
  std::vector<Vec<Scalar>> inputs;  // held actuator value u (before f)
  std::vector<Scalar> lyapunov;
  std::vector<Scalar> trigger_lhs;
  std::vector<Scalar> trigger_rhs;
  std::vector<Scalar> envelope;
  std::vector<Event<Scalar>> events;

  std::size_t size() const { return times.size(); }

  void push(Scalar t, Vec<Scalar> w, Vec<Scalar> u) {
    const Scalar nan = std::numeric_limits<Scalar>::quiet_NaN();
    times.push_back(t);
    states.push_back(std::move(w));
    inputs.push_back(std::move(u));
    lyapunov.push_back(nan);
    trigger_lhs.push_back(nan);
    trigger_rhs.push_back(nan);
    envelope.push_back(nan);
  }

  std::vector<Scalar> event_times() const {
    std::vector<Scalar> out;
    out.reserve(events.size());
    for (const auto& e : events) out.push_back(e.time);
    return out;
  }
};

namespace detail {

template <typename Scalar>
void guard_blowup(const Vec<Scalar>& w, Scalar t) {
  const Scalar n = w.norm();
  if (!(n <= Scalar(kBlowupThreshold)))
    throw SimulationError("state norm " + std::to_string(double(n)) + " exceeded the blow-up threshold at t = " +
                          std::to_string(double(t)));
}

template <typename Scalar>
std::vector<Scalar> output_times(Scalar t_end, Scalar step) {
  std::vector<Scalar> out;
  const auto count = static_cast<long long>(std::floor(t_end / step * (1 + 1e-12)));
  for (long long i = 0; i <= count; ++i) out.push_back(std::min(step * Scalar(i), t_end));
  if (out.back() < t_end) out.push_back(t_end);
  return out;
}

}  // namespace detail

struct SampledOptions {
  double output_step = 0;  // 0: record the sampling instants only
};

/// Zero-order-hold law u = F x(k tau) on [k tau, (k+1) tau), stepped exactly.
/// Sample times are k * tau (not accumulated). Recorded events are the
/// sampling instants.
template <typename Scalar>
SimulationRecord<Scalar> simulate_sampled(const ModalModel<Scalar>& model, const FeedbackGain<Scalar>& gain,
                                          const SectorNonlinearity<Scalar>& f, Scalar tau,
                                          const Vec<Scalar>& x0, Scalar t_end, const SampledOptions& opt = {}) {
  if (!(tau > 0)) throw ValidationError("simulation.tau must be positive");
  if (!(t_end >= tau)) throw ValidationError("simulation.t_end must be at least tau");
  if (x0.size() != model.dim()) throw ValidationError("initial state has the wrong dimension");
  if (!x0.allFinite()) throw ValidationError("initial state is not finite");

  const Scalar out_step = opt.output_step > 0 ? Scalar(opt.output_step) : tau;
  const std::vector<Scalar> grid = detail::output_times<Scalar>(t_end, out_step);
  SimulationRecord<Scalar> rec;
  Vec<Scalar> x = x0;
  std::size_t next_out = 0;
  for (Index k = 0;; ++k) {
    const Scalar t_k = tau * Scalar(k);
    if (t_k > t_end) break;
    const Vec<Scalar> u = gain.lifted * x;
    const Vec<Scalar> forcing = model.input * f.apply(u);
    rec.events.push_back({k, t_k, k == 0 ? Scalar(0) : tau, k == 0 ? "initial" : "sampled", x.norm()});
    const Scalar t_next = tau * Scalar(k + 1);
    while (next_out < grid.size() && grid[next_out] < t_next) {
      const Scalar s = grid[next_out] - t_k;
      rec.push(grid[next_out], s == 0 ? x : step_exact<Scalar>(model.eigenvalues, x, forcing, s), u);
      ++next_out;
    }
    if (next_out >= grid.size()) break;
    x = step_exact<Scalar>(model.eigenvalues, x, forcing, t_next - t_k);
    detail::guard_blowup(x, t_next);
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Continuous feedback with an additive disturbance (ETDRK4)
// ---------------------------------------------------------------------------

/// Exponential time differencing RK4 (Cox-Matthews) for
///   x' = diag(lambda) x + B f(F x) + d(t),
/// with phi-function coefficients evaluated by contour averaging so that they
/// stay accurate for small |lambda h|.
template <typename Scalar>
class DisturbedIntegrator {
 public:
  struct Options {
    double tolerance = 1e-9;  // relative local error per step
    double initial_step = 0;  // 0: chosen from the spectrum
    double max_step = 0.05;
    double min_step = 1e-13;
  };

  DisturbedIntegrator(const ModalModel<Scalar>& model, const FeedbackGain<Scalar>& gain,
                      const SectorNonlinearity<Scalar>& f, const Disturbance<Scalar>& d, Options opt)
      : lambda_(model.eigenvalues), input_(model.input), feedback_(gain.lifted), f_(f), d_(d), opt_(opt) {
    d_.validate(model.dim());
    if (feedback_.cols() != model.dim() || feedback_.rows() != model.input_count())
      throw ValidationError("gain dimensions do not match the modal model");
    const Scalar scale = std::max(Scalar(1), (input_ * feedback_).norm());
    h_ = opt_.initial_step > 0 ? Scalar(opt_.initial_step) : std::min(Scalar(opt_.max_step), Scalar(0.1) / scale);
  }

  DisturbedIntegrator(const ModalModel<Scalar>& model, const FeedbackGain<Scalar>& gain,
                      const SectorNonlinearity<Scalar>& f, const Disturbance<Scalar>& d)
      : DisturbedIntegrator(model, gain, f, d, Options{}) {}

  Vec<Scalar> rhs(const Vec<Scalar>& x, Scalar t) const {
    Vec<Scalar> out = input_ * f_.apply(feedback_ * x);
    if (!d_.is_zero()) out += d_(t);
    return out;
  }

  /// Integrates from (t, x) to t + span with adaptive steps that land on t + span.
  Vec<Scalar> advance(Vec<Scalar> x, Scalar t, Scalar span) {
    const Scalar t_end = t + span;
    while (t < t_end) {
      Scalar h = std::min(h_, t_end - t);
      if (h <= Scalar(opt_.min_step) * std::max(Scalar(1), std::abs(t))) {
        // rounding remainder of the span
        x = step(x, t, t_end - t);
        break;
      }
      for (;;) {
        const bool last = h >= t_end - t;
        if (h < Scalar(opt_.min_step) * std::max(Scalar(1), std::abs(t)))
          throw SimulationError("step size underflow at t = " + std::to_string(double(t)));
        const Vec<Scalar> full = step(x, t, h);
        const Vec<Scalar> half = step(step(x, t, h / 2), t + h / 2, h / 2);
        const Scalar err = (half - full).norm() / Scalar(15);
        const Scalar scale = std::max(half.norm(), x.norm());
        const Scalar tol = Scalar(opt_.tolerance) * scale;
        if (!half.allFinite()) {
          h /= 4;
          continue;
        }
        if (err <= tol || scale == 0) {
          x = half + (half - full) / Scalar(15);
          t = last ? t_end : t + h;
          const Scalar grow = err > 0 ? Scalar(0.9) * std::pow(tol / err, Scalar(0.2)) : Scalar(2);
          const Scalar proposal = std::min(Scalar(opt_.max_step), h * std::clamp(grow, Scalar(0.2), Scalar(2)));
          if (!last || proposal < h_) h_ = proposal;
          detail::guard_blowup(x, t);
          break;
        }
        h *= std::clamp(Scalar(0.9) * std::pow(tol / err, Scalar(0.2)), Scalar(0.1), Scalar(0.5));
      }
    }
    return x;
  }

 private:
  struct Coefficients {
    Vec<Scalar> e, e2, q, f1, f2, f3;
  };

  const Coefficients& coefficients(Scalar h) {
    if (auto it = cache_.find(h); it != cache_.end()) return it->second;
    if (cache_.size() > 16) cache_.clear();
    const Index n = lambda_.size();
    constexpr int kPoints = 32;
    Coefficients c;
    c.e.resize(n);
    c.e2.resize(n);
    c.q.resize(n);
    c.f1.resize(n);
    c.f2.resize(n);
    c.f3.resize(n);
    using C = std::complex<Scalar>;
    const Scalar pi = std::acos(Scalar(-1));
    for (Index j = 0; j < n; ++j) {
      const Scalar z = lambda_(j) * h;
      c.e(j) = std::exp(z);
      c.e2(j) = std::exp(z / 2);
      C q = 0, f1 = 0, f2 = 0, f3 = 0;
      for (int k = 0; k < kPoints; ++k) {
        const C r = z + std::polar(Scalar(1), pi * (Scalar(k) + Scalar(0.5)) / Scalar(kPoints));
        const C er = std::exp(r), er2 = std::exp(r / Scalar(2));
        const C r3 = r * r * r;
        q += (er2 - Scalar(1)) / r;
        f1 += (Scalar(-4) - r + er * (Scalar(4) - Scalar(3) * r + r * r)) / r3;
        f2 += (Scalar(2) + r + er * (r - Scalar(2))) / r3;
        f3 += (Scalar(-4) - Scalar(3) * r - r * r + er * (Scalar(4) - r)) / r3;
      }
      c.q(j) = h * q.real() / Scalar(kPoints);
      c.f1(j) = h * f1.real() / Scalar(kPoints);
      c.f2(j) = h * f2.real() / Scalar(kPoints);
      c.f3(j) = h * f3.real() / Scalar(kPoints);
    }
    return cache_.emplace(h, std::move(c)).first->second;
  }

  Vec<Scalar> step(const Vec<Scalar>& x, Scalar t, Scalar h) {
    const Coefficients& c = coefficients(h);
    const Vec<Scalar> nx = rhs(x, t);
    const Vec<Scalar> a = c.e2.cwiseProduct(x) + c.q.cwiseProduct(nx);
    const Vec<Scalar> na = rhs(a, t + h / 2);
    const Vec<Scalar> b = c.e2.cwiseProduct(x) + c.q.cwiseProduct(na);
    const Vec<Scalar> nb = rhs(b, t + h / 2);
    const Vec<Scalar> cc = c.e2.cwiseProduct(a) + c.q.cwiseProduct(Scalar(2) * nb - nx);
    const Vec<Scalar> nc = rhs(cc, t + h);
    return c.e.cwiseProduct(x) + c.f1.cwiseProduct(nx) + Scalar(2) * c.f2.cwiseProduct(na + nb) +
           c.f3.cwiseProduct(nc);
  }

  Vec<Scalar> lambda_;
  Mat<Scalar> input_;
  Mat<Scalar> feedback_;
  SectorNonlinearity<Scalar> f_;
  Disturbance<Scalar> d_;
  Options opt_;
  Scalar h_ = 0;
  std::map<Scalar, Coefficients> cache_;
};

/// Continuous feedback u = F x(t) under the disturbance d, recorded every
/// `output_step`.
template <typename Scalar>
SimulationRecord<Scalar> simulate_disturbed(const ModalModel<Scalar>& model, const FeedbackGain<Scalar>& gain,
                                            const SectorNonlinearity<Scalar>& f, const Disturbance<Scalar>& d,
                                            const Vec<Scalar>& x0, Scalar t_end, Scalar output_step) {
  if (!(t_end > 0)) throw ValidationError("simulation.t_end must be positive");
  if (!(output_step > 0)) throw ValidationError("simulation.output_step must be positive");
  if (x0.size() != model.dim()) throw ValidationError("initial state has the wrong dimension");
  DisturbedIntegrator<Scalar> integrator(model, gain, f, d);
  const std::vector<Scalar> grid = detail::output_times<Scalar>(t_end, output_step);
  SimulationRecord<Scalar> rec;
  Vec<Scalar> x = x0;
  rec.push(grid[0], x, gain.lifted * x);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    x = integrator.advance(x, grid[i - 1], grid[i] - grid[i - 1]);
    rec.push(grid[i], x, gain.lifted * x);
  }
  return rec;
}

}  // namespace etpde
