#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include "etpde/types.hpp"

namespace etpde {

enum class NonlinearityKind { Identity, ScaledSaturation, SmoothDeadzone, TanhBlend };

inline std::string_view to_string(NonlinearityKind kind) {
  switch (kind) {
    case NonlinearityKind::Identity: return "identity";
    case NonlinearityKind::ScaledSaturation: return "scaled-saturation";
    case NonlinearityKind::SmoothDeadzone: return "smooth-deadzone-perturbation";
    case NonlinearityKind::TanhBlend: return "tanh-blend";
  }
  return "unknown";
}

inline NonlinearityKind parse_nonlinearity_kind(std::string_view name) {
  if (name == "identity") return NonlinearityKind::Identity;
  if (name == "scaled-saturation") return NonlinearityKind::ScaledSaturation;
  if (name == "smooth-deadzone-perturbation" || name == "smooth-deadzone")
    return NonlinearityKind::SmoothDeadzone;
  if (name == "tanh-blend") return NonlinearityKind::TanhBlend;
  throw ValidationError("nonlinearity.kind: unknown kind '" + std::string(name) + "'");
}

/// Globally Lipschitz scalar map with |f(s) - s| <= delta |s| for all s.
///
///   identity           f(s) = s
///   scaled-saturation  f(s) = (1 - delta) s + delta * clamp(s, -w, w)
///   smooth-deadzone    f(s) = s - delta * s * exp(-(s / w)^2)
///   tanh-blend         f(s) = (1 - delta) s + delta * w * tanh(s / w)
///
/// Each kind has Lipschitz constant <= 1 + delta. `width` (w) is the
/// saturation level / deadzone width / tanh scale.
template <typename Scalar>
struct SectorNonlinearity {
  NonlinearityKind kind = NonlinearityKind::Identity;
  Scalar delta = 0;
  Scalar width = 1;

  SectorNonlinearity() = default;
  SectorNonlinearity(NonlinearityKind k, Scalar d, Scalar w = Scalar(1)) : kind(k), delta(d), width(w) {
    if (kind == NonlinearityKind::Identity) delta = 0;
    if (!(delta >= 0 && delta <= 1)) throw ValidationError("nonlinearity.delta must lie in [0, 1]");
    if (!(width > 0)) throw ValidationError("nonlinearity.width must be positive");
  }

  static SectorNonlinearity identity() { return {}; }

  Scalar operator()(Scalar s) const {
    using std::exp;
    using std::tanh;
    switch (kind) {
      case NonlinearityKind::Identity: return s;
      case NonlinearityKind::ScaledSaturation:
        return (Scalar(1) - delta) * s + delta * std::clamp(s, -width, width);
      case NonlinearityKind::SmoothDeadzone: {
        const Scalar r = s / width;
        return s - delta * s * exp(-r * r);
      }
      case NonlinearityKind::TanhBlend: return (Scalar(1) - delta) * s + delta * width * tanh(s / width);
    }
    return s;
  }

  /// f'(0): slope of the linearization at the origin.
  Scalar slope_at_zero() const {
    return kind == NonlinearityKind::SmoothDeadzone ? Scalar(1) - delta : Scalar(1);
  }

  Scalar lipschitz() const { return Scalar(1) + delta; }

  template <typename Derived>
  Vec<Scalar> apply(const Eigen::MatrixBase<Derived>& u) const {
    Vec<Scalar> out(u.size());
    for (Index i = 0; i < u.size(); ++i) out(i) = (*this)(u(i));
    return out;
  }
};

template <typename Scalar>
struct SectorCertificate {
  Scalar theta = 0;            // delta * ||F||
  Scalar empirical_ratio = 0;  // max |f(s) - s| / |s| over the check grid
  Scalar lipschitz = 1;        // (1 + delta) ||F||, reported only
};

/// theta_f = delta ||F||, cross-checked against a log-spaced grid on
/// +-[1e-6, 1e6].
template <typename Scalar>
SectorCertificate<Scalar> certify_sector(const SectorNonlinearity<Scalar>& f, Scalar feedback_norm,
                                         int grid_points = 100000) {
  if (!(feedback_norm >= 0)) throw ValidationError("feedback norm must be nonnegative");
  SectorCertificate<Scalar> cert;
  const Scalar lo = std::log(Scalar(1e-6)), hi = std::log(Scalar(1e6));
  for (int i = 0; i < grid_points; ++i) {
    const Scalar s = std::exp(lo + (hi - lo) * Scalar(i) / Scalar(grid_points - 1));
    for (const Scalar x : {s, -s})
      cert.empirical_ratio = std::max(cert.empirical_ratio, std::abs(f(x) - x) / std::abs(x));
  }
  if (cert.empirical_ratio > f.delta + Scalar(1e-12))
    throw CertificationError("sector check failed for " + std::string(to_string(f.kind)) +
                             ": empirical ratio " + std::to_string(double(cert.empirical_ratio)) +
                             " exceeds delta " + std::to_string(double(f.delta)));
  cert.theta = f.delta * feedback_norm;
  cert.lipschitz = f.lipschitz() * feedback_norm;
  return cert;
}

template <typename Scalar>
struct SmallGainCheck {
  Scalar beta = 0;   // M N ||B||
  Scalar bound = 0;  // xi / beta
  Scalar margin = 0; // bound - theta
  bool pass = false;
};

/// theta_f < xi / beta with beta = M N ||B||; strict.
template <typename Scalar>
SmallGainCheck<Scalar> check_small_gain(Scalar theta, Scalar open_gain, Scalar closed_gain,
                                        Scalar input_norm, Scalar decay) {
  SmallGainCheck<Scalar> c;
  c.beta = open_gain * closed_gain * input_norm;
  c.bound = c.beta > 0 ? decay / c.beta : std::numeric_limits<Scalar>::infinity();
  c.margin = c.bound - theta;
  c.pass = theta < c.bound;
  return c;
}

}  // namespace etpde
