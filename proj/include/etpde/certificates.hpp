#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "etpde/feedback_design.hpp"
#include "etpde/linalg.hpp"
#include "etpde/nonlinearity.hpp"
#include "etpde/spectral_model.hpp"
#include "etpde/types.hpp"

namespace etpde {

// ---------------------------------------------------------------------------
// Semigroup bounds ||e^{At}|| <= gain * e^{-shift t}
// ---------------------------------------------------------------------------

struct EnvelopeOptions {
  double step_factor = 0.01;  // base step = step_factor / max(1, ||A||)
  double max_step = 0.05;
  int steps_per_block = 64;
  double max_horizon = 1e4;
  double settle_tolerance = 1e-12;
};

template <typename Scalar>
struct ExponentialBound {
  Scalar gain = 1;      // sup_t ||e^{At}|| e^{shift t}
  Scalar rate = 0;      // decay rate (xi) or growth rate (nu)
  Scalar horizon = 0;   // first grid time with envelope <= 1
  Scalar base_step = 0;
  Scalar argmax = 0;
  std::size_t grid_points = 0;
};

/// sup over t >= 0 of g(t) = ||e^{At}|| e^{shift t}. The scan stops at the
/// first grid time T > 0 with g(T) <= 1: by submultiplicativity
/// g(kT + r) <= g(T)^k g(r), so the supremum is attained on [0, T].
template <typename Scalar>
ExponentialBound<Scalar> envelope_supremum(const Mat<Scalar>& a, Scalar shift,
                                           const EnvelopeOptions& opt = {}) {
  const Index n = a.rows();
  ExponentialBound<Scalar> out;
  if (n == 0) return out;
  const Scalar a_norm = spectral_norm(a);
  out.base_step = Scalar(opt.step_factor) / std::max(Scalar(1), a_norm);
  const Scalar settle = Scalar(1) + Scalar(opt.settle_tolerance);

  Mat<Scalar> e = Mat<Scalar>::Identity(n, n);
  std::vector<Scalar> times{Scalar(0)};
  std::vector<Scalar> values{Scalar(1)};
  Scalar t = 0;
  Scalar h = out.base_step;
  Mat<Scalar> step_prop = expm(Mat<Scalar>(a * h));
  int in_block = 0;
  bool settled = false;
  while (t < Scalar(opt.max_horizon)) {
    e = step_prop * e;
    t += h;
    const Scalar g = spectral_norm(e) * std::exp(shift * t);
    if (!std::isfinite(g)) break;
    times.push_back(t);
    values.push_back(g);
    if (g <= settle) {
      settled = true;
      break;
    }
    if (++in_block == opt.steps_per_block) {
      in_block = 0;
      const Scalar next = std::min(h * Scalar(2), Scalar(opt.max_step));
      if (next != h) {
        h = next;
        step_prop = expm(Mat<Scalar>(a * h));
      }
    }
  }
  if (!settled)
    throw CertificationError("semigroup envelope did not settle below 1 before t = " +
                             std::to_string(double(t)) + "; the requested rate is not attainable");

  const auto best = std::max_element(values.begin(), values.end()) - values.begin();
  out.gain = values[best];
  out.argmax = times[best];
  out.horizon = t;
  out.grid_points = times.size();
  if (best > 0 && best + 1 < static_cast<std::ptrdiff_t>(times.size())) {
    const Propagator<Scalar> prop(a);
    auto g = [&](Scalar s) { return spectral_norm(prop.matrix(s)) * std::exp(shift * s); };
    const Scalar lo = times[best - 1], hi = times[best + 1];
    const auto [arg, val] = golden_maximize<Scalar>(g, lo, hi, (hi - lo) * Scalar(1e-7));
    if (val > out.gain) {
      out.gain = val;
      out.argmax = arg;
    }
  }
  out.gain = std::max(out.gain, Scalar(1));
  return out;
}

/// Decay case: xi = fraction * (-abscissa(A)), N = sup ||e^{At}|| e^{xi t}.
template <typename Scalar>
ExponentialBound<Scalar> estimate_decay_bound(const Mat<Scalar>& a, Scalar xi_fraction,
                                              const EnvelopeOptions& opt = {}) {
  if (!(xi_fraction > 0 && xi_fraction < 1))
    throw ValidationError("certificate.xi_fraction must lie in (0, 1)");
  const Scalar abscissa = spectral_abscissa(a);
  if (!(abscissa < 0))
    throw CertificationError("decay bound requested for a non-Hurwitz matrix (abscissa " +
                             std::to_string(double(abscissa)) + ")");
  const Scalar xi = -xi_fraction * abscissa;
  auto b = envelope_supremum<Scalar>(a, xi, opt);
  b.rate = xi;
  return b;
}

/// Growth case: nu = max(abscissa(A), floor), M = sup ||e^{At}|| e^{-nu t}.
template <typename Scalar>
ExponentialBound<Scalar> estimate_growth_bound(const Mat<Scalar>& a, Scalar floor = Scalar(1e-6),
                                               const EnvelopeOptions& opt = {}) {
  const Scalar nu = std::max(spectral_abscissa(a), floor);
  auto b = envelope_supremum<Scalar>(a, -nu, opt);
  b.rate = nu;
  return b;
}

template <typename Scalar>
struct SemigroupCertificate {
  Scalar open_gain = 1;    // M
  Scalar open_rate = 0;    // nu
  Scalar closed_gain = 1;  // N
  Scalar closed_rate = 0;  // xi
  Scalar input_norm = 0;   // ||B||
  Scalar beta = 0;         // M N ||B||
  Scalar closed_abscissa = 0;
  Scalar open_horizon = 0;
  Scalar closed_horizon = 0;
  Scalar closed_step = 0;
};

template <typename Scalar>
SemigroupCertificate<Scalar> certify_semigroups(const ModalModel<Scalar>& model,
                                                const FeedbackGain<Scalar>& gain,
                                                Scalar xi_fraction = Scalar(0.9),
                                                const EnvelopeOptions& opt = {}) {
  const Mat<Scalar> a_cl = closed_loop_matrix(model, gain);
  const auto open = estimate_growth_bound<Scalar>(model.generator(), Scalar(1e-6), opt);
  const auto closed = estimate_decay_bound<Scalar>(a_cl, xi_fraction, opt);
  SemigroupCertificate<Scalar> c;
  c.open_gain = open.gain;
  c.open_rate = open.rate;
  c.closed_gain = closed.gain;
  c.closed_rate = closed.rate;
  c.input_norm = spectral_norm(model.input);
  c.beta = c.open_gain * c.closed_gain * c.input_norm;
  c.closed_abscissa = spectral_abscissa(a_cl);
  c.open_horizon = open.horizon;
  c.closed_horizon = closed.horizon;
  c.closed_step = closed.base_step;
  return c;
}

// ---------------------------------------------------------------------------
// sup_{t >= 0} e^{rate t} ||e^{At} x||
// ---------------------------------------------------------------------------

struct SupNormOptions {
  double step_factor = 0.005;  // base step = step_factor / max(1, ||A||)
  double max_step = 0.05;
  int steps_per_block = 16;
};

/// Weighted supremum norm [[x]] = sup_t e^{rate t} ||e^{At} x||. Propagators
/// are stored on a graded grid over [0, T*], T* = ln(gain) / (decay - rate),
/// beyond which the weighted envelope stays below ||x||. The grid maximum is
/// refined by golden section on the neighbouring cells.
template <typename Scalar>
class ExponentialSupNorm {
 public:
  ExponentialSupNorm() = default;

  /// `gain`, `decay` certify ||e^{At}|| <= gain e^{-decay t} with decay > rate.
  ExponentialSupNorm(const Mat<Scalar>& a, Scalar rate, Scalar gain, Scalar decay,
                     const SupNormOptions& opt = {})
      : rate_(rate), dim_(a.rows()) {
    if (!(rate < decay))
      throw CertificationError("weighted norm rate " + std::to_string(double(rate)) +
                               " must be below the certified decay rate " +
                               std::to_string(double(decay)));
    horizon_ = std::max(Scalar(0), std::log(std::max(gain, Scalar(1)))) / (decay - rate);
    build(a, opt);
  }

  /// Certifies an auxiliary decay rate halfway between `rate` and -abscissa.
  ExponentialSupNorm(const Mat<Scalar>& a, Scalar rate, const SupNormOptions& opt = {})
      : rate_(rate), dim_(a.rows()) {
    const Scalar abscissa = spectral_abscissa(a);
    if (!(rate < -abscissa))
      throw CertificationError("weighted norm rate must be below -abscissa(A)");
    const Scalar decay = (rate - abscissa) / Scalar(2);
    const auto bound = envelope_supremum<Scalar>(a, decay);
    horizon_ = std::max(Scalar(0), std::log(bound.gain)) / (decay - rate);
    build(a, opt);
  }

  Scalar rate() const { return rate_; }
  Scalar horizon() const { return horizon_; }
  std::size_t grid_points() const { return times_.size(); }
  const std::vector<Scalar>& times() const { return times_; }

  Scalar operator()(const Vec<Scalar>& x) const { return evaluate(x).value; }

  struct Evaluation {
    Scalar value = 0;
    Scalar argmax = 0;
  };

  Evaluation evaluate(const Vec<Scalar>& x) const {
    if (x.size() != dim_) throw ValidationError("weighted norm: dimension mismatch");
    Evaluation out;
    const Index g = static_cast<Index>(times_.size());
    if (g == 1) {
      out.value = x.norm();
      return out;
    }
    const Vec<Scalar> y = stacked_ * x;
    Vec<Scalar> norms(g);
    for (Index i = 0; i < g; ++i) norms(i) = y.segment(i * dim_, dim_).norm();
    Index best = 0;
    out.value = norms.maxCoeff(&best);
    out.argmax = times_[best];
    if (out.value == Scalar(0)) return out;

    // refine the global maximum and the strongest other local maximum
    Index second = -1;
    Scalar second_value = -1;
    for (Index i = 1; i + 1 < g; ++i) {
      if (std::abs(i - best) <= 1) continue;
      if (norms(i) >= norms(i - 1) && norms(i) >= norms(i + 1) && norms(i) > second_value) {
        second = i;
        second_value = norms(i);
      }
    }
    const CVec<Scalar> coords = propagator_.coordinates(x);
    auto weighted = [&](Scalar t) {
      return std::exp(rate_ * t) * propagator_.apply_modal(t, coords).norm();
    };
    for (const Index i : {best, second}) {
      if (i < 0) continue;
      const Scalar lo = times_[std::max<Index>(i - 1, 0)];
      const Scalar hi = times_[std::min<Index>(i + 1, g - 1)];
      const auto [arg, val] = golden_maximize<Scalar>(weighted, lo, hi, (hi - lo) * Scalar(1e-7));
      if (val > out.value) {
        out.value = val;
        out.argmax = arg;
      }
    }
    return out;
  }

 private:
  void build(const Mat<Scalar>& a, const SupNormOptions& opt) {
    propagator_ = Propagator<Scalar>(a);
    const Scalar base = Scalar(opt.step_factor) / std::max(Scalar(1), spectral_norm(a));
    const auto grid = graded_grid<Scalar>(horizon_, base, Scalar(opt.max_step), opt.steps_per_block);
    times_ = grid.times;
    const Index g = static_cast<Index>(times_.size());
    stacked_.resize(g * dim_, dim_);
    Mat<Scalar> e = Mat<Scalar>::Identity(dim_, dim_);
    stacked_.topRows(dim_) = e;
    std::map<Scalar, Mat<Scalar>> cache;
    for (Index i = 1; i < g; ++i) {
      const Scalar h = grid.steps[i];
      auto it = cache.find(h);
      if (it == cache.end()) it = cache.emplace(h, expm(Mat<Scalar>(a * h))).first;
      e = it->second * e;
      stacked_.middleRows(i * dim_, dim_) = std::exp(rate_ * times_[i]) * e;
    }
  }

  Scalar rate_ = 0;
  Index dim_ = 0;
  Scalar horizon_ = 0;
  std::vector<Scalar> times_{Scalar(0)};
  Mat<Scalar> stacked_;
  Propagator<Scalar> propagator_;
};

/// [[x]] for a prebuilt weighted norm.
template <typename Scalar>
Scalar equivalent_norm(const ExponentialSupNorm<Scalar>& norm, const Vec<Scalar>& x) {
  return norm(x);
}

// ---------------------------------------------------------------------------
// Sampled map Psi_tau = Delta_tau + Phi_tau
// ---------------------------------------------------------------------------

/// One zero-order-hold period of length tau on the diagonal modal model:
///   Delta(x) = e^{L tau} x + I(tau) B F x
///   Phi(x)   = I(tau) B (f(Fx) - Fx)
/// with I(tau) = diag((e^{lambda_j tau} - 1) / lambda_j) computed per mode.
template <typename Scalar>
class SampledMap {
 public:
  SampledMap(const ModalModel<Scalar>& model, const FeedbackGain<Scalar>& gain,
             const SectorNonlinearity<Scalar>& f, Scalar tau)
      : input_(model.input), feedback_(gain.lifted), f_(f), tau_(tau) {
    if (!(tau >= 0)) throw ValidationError("sampling period must be nonnegative");
    if (feedback_.cols() != model.dim() || feedback_.rows() != model.input_count())
      throw ValidationError("gain dimensions do not match the modal model");
    decay_.resize(model.dim());
    integral_.resize(model.dim());
    for (Index j = 0; j < model.dim(); ++j) {
      decay_(j) = std::exp(model.eigenvalues(j) * tau);
      integral_(j) = exp_integral(model.eigenvalues(j), tau);
    }
  }

  Scalar tau() const { return tau_; }

  Vec<Scalar> delta(const Vec<Scalar>& x) const {
    return decay_.cwiseProduct(x) + integral_.cwiseProduct(input_ * (feedback_ * x));
  }

  Vec<Scalar> phi(const Vec<Scalar>& x) const {
    const Vec<Scalar> u = feedback_ * x;
    return integral_.cwiseProduct(input_ * (f_.apply(u) - u));
  }

  Vec<Scalar> operator()(const Vec<Scalar>& x) const {
    return decay_.cwiseProduct(x) + integral_.cwiseProduct(input_ * f_.apply(feedback_ * x));
  }

  /// Delta_tau as a J x J matrix.
  Mat<Scalar> delta_matrix() const {
    Mat<Scalar> m = integral_.asDiagonal() * input_ * feedback_;
    m.diagonal() += decay_;
    return m;
  }

  /// Jacobian of Psi_tau at the origin.
  Mat<Scalar> linearization() const {
    Mat<Scalar> m = f_.slope_at_zero() * (integral_.asDiagonal() * input_ * feedback_);
    m.diagonal() += decay_;
    return m;
  }

  /// ||I(tau) B||: Phi_tau(x) is bounded by this times theta_f ||x||.
  Scalar input_integral_norm() const {
    return spectral_norm(Mat<Scalar>(integral_.asDiagonal() * input_));
  }

 private:
  Mat<Scalar> input_;
  Mat<Scalar> feedback_;
  SectorNonlinearity<Scalar> f_;
  Scalar tau_;
  Vec<Scalar> decay_;
  Vec<Scalar> integral_;
};

template <typename Scalar>
struct PsiParts {
  Vec<Scalar> psi;
  Vec<Scalar> delta;
  Vec<Scalar> phi;
};

template <typename Scalar>
PsiParts<Scalar> psi_map(const ModalModel<Scalar>& model, const FeedbackGain<Scalar>& gain,
                         const SectorNonlinearity<Scalar>& f, Scalar tau, const Vec<Scalar>& x) {
  if (!(tau > 0)) throw ValidationError("sampling period must be positive");
  if (!x.allFinite()) throw ValidationError("psi_map: non-finite state");
  const SampledMap<Scalar> map(model, gain, f, tau);
  return {map(x), map.delta(x), map.phi(x)};
}

template <typename Scalar>
struct NormContraction {
  Scalar linear = 0;     // bound on the operator norm of Delta_tau in [[.]]
  Scalar nonlinear = 0;  // bound on [[Phi_tau(x)]] / [[x]]
  Scalar q = 0;
};

/// One-step factor q with [[Psi_tau(x)]] <= q [[x]] in the weighted norm of
/// rate xi. Two bounds on the linear part are combined:
///   [[Delta x]] <= (e^{-xi tau} + N ||Delta - e^{A_cl tau}||) [[x]]
///   [[Delta x]] <= sup_t e^{xi t} ||e^{A_cl t} Delta|| [[x]]
/// and [[Phi(x)]] <= N theta_f ||I(tau) B|| [[x]].
template <typename Scalar>
NormContraction<Scalar> equivalent_norm_contraction(const ModalModel<Scalar>& model,
                                                    const FeedbackGain<Scalar>& gain,
                                                    const SemigroupCertificate<Scalar>& cert,
                                                    Scalar theta, Scalar tau,
                                                    const EnvelopeOptions& opt = {}) {
  const Mat<Scalar> a_cl = closed_loop_matrix(model, gain);
  const SampledMap<Scalar> map(model, gain, SectorNonlinearity<Scalar>::identity(), tau);
  const Mat<Scalar> delta = map.delta_matrix();
  const Scalar n = cert.closed_gain, xi = cert.closed_rate;
  const Scalar perturbation =
      std::exp(-xi * tau) + n * spectral_norm(Mat<Scalar>(delta - expm(Mat<Scalar>(a_cl * tau))));

  // sup_t e^{xi t} ||e^{A t} Delta||. With N2 certifying decay at xi2 > xi,
  // the weighted norm stays below ||Delta|| beyond ln(N2) / (xi2 - xi).
  const Scalar xi2 = (xi - spectral_abscissa(a_cl)) / Scalar(2);
  const Scalar n2 = envelope_supremum<Scalar>(a_cl, xi2, opt).gain;
  const Scalar horizon = std::log(n2) / (xi2 - xi);
  const Scalar base = Scalar(opt.step_factor) / std::max(Scalar(1), spectral_norm(a_cl));
  const auto grid = graded_grid<Scalar>(horizon, base, Scalar(opt.max_step), opt.steps_per_block);
  Mat<Scalar> e = delta;
  Scalar best = spectral_norm(delta);
  std::size_t best_i = 0;
  std::map<Scalar, Mat<Scalar>> cache;
  for (std::size_t i = 1; i < grid.times.size(); ++i) {
    auto it = cache.find(grid.steps[i]);
    if (it == cache.end()) it = cache.emplace(grid.steps[i], expm(Mat<Scalar>(a_cl * grid.steps[i]))).first;
    e = it->second * e;
    const Scalar value = std::exp(xi * grid.times[i]) * spectral_norm(e);
    if (value > best) {
      best = value;
      best_i = i;
    }
  }
  if (best_i > 0) {
    const Propagator<Scalar> prop(a_cl);
    auto fn = [&](Scalar s) {
      return std::exp(xi * s) * spectral_norm(Mat<Scalar>(prop.matrix(s) * delta));
    };
    const Scalar lo = grid.times[best_i - 1];
    const Scalar hi = grid.times[std::min(best_i + 1, grid.times.size() - 1)];
    best = std::max(best, golden_maximize<Scalar>(fn, lo, hi, (hi - lo) * Scalar(1e-7)).second);
  }

  NormContraction<Scalar> out;
  out.linear = std::min(perturbation, best);
  out.nonlinear = n * theta * map.input_integral_norm();
  out.q = out.linear + out.nonlinear;
  return out;
}

// ---------------------------------------------------------------------------
// Power stability
// ---------------------------------------------------------------------------

/// Deterministic seed for a named stage, derived from one root seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (const char c : stage) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  std::uint64_t out[1];
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  out[0] = (std::uint64_t(words[0]) << 32) | words[1];
  return out[0];
}

template <typename Scalar>
Vec<Scalar> random_unit_vector(Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec<Scalar> v(dim);
  do {
    for (Index i = 0; i < dim; ++i) v(i) = Scalar(normal(rng));
  } while (v.norm() == Scalar(0));
  return v / v.norm();
}

struct PowerStabilityOptions {
  int trials = 100;
  int steps = 200;
  std::uint64_t seed = 1;
  double blowup = 1e12;
};

template <typename Scalar>
struct PowerStabilityResult {
  bool pass = false;
  Scalar q = 0;                 // fitted contraction factor
  Scalar prefactor = 1;         // L
  Scalar linear_radius = 0;     // spectral radius of the linearization at 0
  int witness_trial = -1;       // diverging trajectory, if any
  std::vector<Scalar> witness;  // its norm ratios ||x_k|| / ||x_0||
  std::string message;
};

namespace detail {

template <typename Scalar>
Scalar fit_log_slope(const std::vector<Scalar>& ratios) {
  // least-squares slope of log ratio over the second half of the run
  std::size_t usable = ratios.size();
  for (std::size_t k = 0; k < ratios.size(); ++k) {
    if (!(ratios[k] > Scalar(1e-250))) {
      usable = k;
      break;
    }
  }
  if (usable < ratios.size() && usable <= 1) return -std::numeric_limits<Scalar>::infinity();
  if (usable < 4) {
    const std::size_t last = usable - 1;
    if (usable < ratios.size()) return std::log(ratios[last]) / Scalar(last + 1) - Scalar(1);
    return std::log(ratios[last]) / Scalar(last);
  }
  const std::size_t first = usable / 2;
  Scalar sx = 0, sy = 0, sxx = 0, sxy = 0;
  const Scalar count = Scalar(usable - first);
  for (std::size_t k = first; k < usable; ++k) {
    const Scalar x = Scalar(k), y = std::log(ratios[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

template <typename Scalar>
Scalar spectral_radius(const Mat<Scalar>& m) {
  if (m.rows() == 0) return 0;
  Eigen::EigenSolver<Mat<Scalar>> solver(m, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Iterates x_{k+1} = Psi_tau(x_k) from random unit states and fits
/// ||x_k|| <= L q^k ||x_0||. q is the largest fitted per-trial rate (and at
/// least the spectral radius of the linearization); L covers every sampled
/// trajectory and the worst direction of the linearization, ||D^k|| / q^k.
template <typename Scalar>
PowerStabilityResult<Scalar> verify_power_stability(const ModalModel<Scalar>& model,
                                                    const FeedbackGain<Scalar>& gain,
                                                    const SectorNonlinearity<Scalar>& f,
                                                    Scalar tau,
                                                    const PowerStabilityOptions& opt = {}) {
  const SampledMap<Scalar> map(model, gain, f, tau);
  const Index dim = model.dim();
  std::mt19937_64 rng(opt.seed);
  PowerStabilityResult<Scalar> out;
  const Mat<Scalar> lin = map.linearization();
  out.linear_radius = detail::spectral_radius(lin);

  std::vector<std::vector<Scalar>> runs;
  runs.reserve(opt.trials);
  Scalar q = out.linear_radius;
  for (int trial = 0; trial < opt.trials; ++trial) {
    Vec<Scalar> x = random_unit_vector<Scalar>(dim, rng);
    std::vector<Scalar> ratios{Scalar(1)};
    bool blew_up = false;
    for (int k = 0; k < opt.steps; ++k) {
      x = map(x);
      const Scalar r = x.norm();
      ratios.push_back(r);
      if (!(r <= Scalar(opt.blowup))) {
        blew_up = true;
        break;
      }
      if (r < Scalar(1e-250)) break;
    }
    const Scalar slope = detail::fit_log_slope(ratios);
    if (blew_up || !(slope < 0)) {
      out.pass = false;
      out.q = std::exp(slope);
      out.witness_trial = trial;
      out.witness = ratios;
      out.message = blew_up ? "trajectory exceeded the blow-up threshold"
                            : "trajectory norms grow over the fitting window";
      return out;
    }
    q = std::max(q, std::exp(slope));
    runs.push_back(std::move(ratios));
  }
  out.q = q;
  if (!(q < 1)) {
    out.message = "linearization at the origin is not a contraction (spectral radius >= 1)";
    return out;
  }

  Scalar prefactor = 1;
  for (const auto& ratios : runs) {
    Scalar qk = 1;
    for (std::size_t k = 0; k < ratios.size(); ++k, qk *= q) {
      if (qk < Scalar(1e-280)) break;
      prefactor = std::max(prefactor, ratios[k] / qk);
    }
  }
  Mat<Scalar> power = Mat<Scalar>::Identity(dim, dim);
  Scalar qk = 1;
  for (int k = 1; k <= opt.steps; ++k) {
    power = lin * power;
    qk *= q;
    if (qk < Scalar(1e-280)) break;
    const Scalar norm = spectral_norm(power);
    prefactor = std::max(prefactor, norm / qk);
    if (norm < Scalar(1e-200)) break;
  }
  out.prefactor = prefactor;
  out.pass = true;
  return out;
}

struct TauSearchOptions {
  double tolerance = 1e-3;
  double floor = 1e-4;
  PowerStabilityOptions stability;
};

template <typename Scalar>
struct TauSearch {
  Scalar tau_star = 0;
  bool clamped = false;  // tau_max itself passed
  int evaluations = 0;
};

/// Largest passing tau in (0, tau_max] by bisection on the power-stability
/// predicate, assuming the predicate is monotone in tau.
template <typename Scalar>
TauSearch<Scalar> find_tau_star(const ModalModel<Scalar>& model, const FeedbackGain<Scalar>& gain,
                                const SectorNonlinearity<Scalar>& f, Scalar tau_max,
                                const TauSearchOptions& opt = {}) {
  if (!(tau_max > 0)) throw ValidationError("tau_max must be positive");
  TauSearch<Scalar> out;
  auto passes = [&](Scalar tau) {
    ++out.evaluations;
    return verify_power_stability(model, gain, f, tau, opt.stability).pass;
  };
  if (passes(tau_max)) {
    out.tau_star = tau_max;
    out.clamped = true;
    return out;
  }
  Scalar hi = tau_max, lo = tau_max / 2;
  while (!passes(lo)) {
    hi = lo;
    lo /= 2;
    if (lo < Scalar(opt.floor))
      throw CertificationError("no power-stable sampling period found down to tau = " +
                               std::to_string(opt.floor));
  }
  while (hi - lo > Scalar(opt.tolerance)) {
    const Scalar mid = (lo + hi) / 2;
    (passes(mid) ? lo : hi) = mid;
  }
  out.tau_star = lo;
  return out;
}

// ---------------------------------------------------------------------------
// Continuous-time decay of the sampled-data loop
// ---------------------------------------------------------------------------

/// c(l) = ||Delta_l|| + theta_f ||I(l) B||, so ||x(k tau + l)|| <= c(l) ||x(k tau)||.
template <typename Scalar>
Scalar intersample_gain(const ModalModel<Scalar>& model, const FeedbackGain<Scalar>& gain,
                        Scalar theta, Scalar elapsed) {
  const SampledMap<Scalar> map(model, gain, SectorNonlinearity<Scalar>::identity(), elapsed);
  return spectral_norm(map.delta_matrix()) + theta * map.input_integral_norm();
}

template <typename Scalar>
struct SampledDataCertificate {
  Scalar tau = 0;
  Scalar q = 0;
  Scalar prefactor = 1;  // L
  Scalar a_hat = 0;      // max_l c(l) - 1
  Scalar gain = 1;       // G
  Scalar rate = 0;       // chi
};

/// chi = -ln(q) / tau, G = (A_hat + 1) L e^{-ln q}, where A_hat + 1 bounds the
/// intersample growth c(l) on [0, tau].
template <typename Scalar>
SampledDataCertificate<Scalar> sampled_decay_constants(Scalar q, Scalar prefactor, Scalar tau,
                                                       const ModalModel<Scalar>& model,
                                                       const FeedbackGain<Scalar>& gain,
                                                       Scalar theta, int grid = 256) {
  if (!(q < 1 && q > 0)) throw CertificationError("sampled decay constants need 0 < q < 1");
  SampledDataCertificate<Scalar> c;
  c.tau = tau;
  c.q = q;
  c.prefactor = prefactor;
  Scalar worst = 1;
  for (int i = 0; i <= grid; ++i)
    worst = std::max(worst, intersample_gain(model, gain, theta, tau * Scalar(i) / Scalar(grid)));
  c.a_hat = worst - 1;
  c.rate = -std::log(q) / tau;
  c.gain = worst * prefactor * std::exp(-std::log(q));
  return c;
}

template <typename Scalar>
struct ContractionEnvelope {
  bool valid = false;
  Scalar one_step = 0;  // c(tau)
  Scalar gain = 1;      // G
  Scalar rate = 0;      // chi
};

/// Envelope from the one-step norm bound c(tau) < 1: with
/// chi = -ln c(tau) / tau, ||x(t)|| <= G e^{-chi t} ||x_0|| for
/// G = max_l c(l) e^{chi l}.
template <typename Scalar>
ContractionEnvelope<Scalar> contraction_envelope(const ModalModel<Scalar>& model,
                                                 const FeedbackGain<Scalar>& gain, Scalar theta,
                                                 Scalar tau, int grid = 256) {
  ContractionEnvelope<Scalar> e;
  e.one_step = intersample_gain(model, gain, theta, tau);
  if (!(e.one_step < 1 && e.one_step > 0)) return e;
  e.valid = true;
  e.rate = -std::log(e.one_step) / tau;
  Scalar g = 1;
  for (int i = 0; i <= grid; ++i) {
    const Scalar l = tau * Scalar(i) / Scalar(grid);
    g = std::max(g, intersample_gain(model, gain, theta, l) * std::exp(e.rate * l));
  }
  e.gain = g;
  return e;
}

}  // namespace etpde
