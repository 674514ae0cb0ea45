#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "etpde/linalg.hpp"
#include "etpde/spectral_model.hpp"
#include "etpde/types.hpp"

namespace etpde {

/// Finite-rank feedback u = K (w_1..w_n), lifted to F = [K 0] on the
/// truncated state.
template <typename Scalar>
struct FeedbackGain {
  Mat<Scalar> block;   // K, m x n
  Mat<Scalar> lifted;  // F, m x J
  Scalar state_weight = 0;  // rho of the Riccati design, 0 if not designed

  Scalar norm() const { return spectral_norm(block); }
  Index unstable() const { return block.cols(); }

  static FeedbackGain lift(Mat<Scalar> block, Index dim) {
    if (block.cols() > dim) throw ValidationError("gain acts on more modes than the state has");
    FeedbackGain g;
    g.lifted = Mat<Scalar>::Zero(block.rows(), dim);
    g.lifted.leftCols(block.cols()) = block;
    g.block = std::move(block);
    return g;
  }
};

/// Stabilizing solution X of A^T X + X A - X B B^T X + Q = 0 via the matrix
/// sign function of the Hamiltonian.
template <typename Scalar>
Mat<Scalar> solve_care(const Mat<Scalar>& a, const Mat<Scalar>& b, const Mat<Scalar>& q) {
  const Index n = a.rows();
  if (n == 0) return Mat<Scalar>(0, 0);
  Mat<Scalar> z(2 * n, 2 * n);
  z << a, -b * b.transpose(), -q, -a.transpose();

  for (int it = 0; it < 100; ++it) {
    Eigen::PartialPivLU<Mat<Scalar>> lu(z);
    const Scalar det = std::abs(lu.determinant());
    const Scalar c = (det > 0 && std::isfinite(det)) ? std::pow(det, Scalar(-1) / Scalar(2 * n))
                                                     : Scalar(1);
    const Mat<Scalar> next = (c * z + lu.inverse() / c) / Scalar(2);
    const Scalar change = (next - z).norm() / std::max(Scalar(1), z.norm());
    z = next;
    if (change < Scalar(1e-13)) break;
  }

  const Mat<Scalar> w11 = z.topLeftCorner(n, n);
  const Mat<Scalar> w12 = z.topRightCorner(n, n);
  const Mat<Scalar> w21 = z.bottomLeftCorner(n, n);
  const Mat<Scalar> w22 = z.bottomRightCorner(n, n);
  Mat<Scalar> lhs(2 * n, n), rhs(2 * n, n);
  lhs << w12, w22 + Mat<Scalar>::Identity(n, n);
  rhs << -(w11 + Mat<Scalar>::Identity(n, n)), -w21;
  Mat<Scalar> x = lhs.colPivHouseholderQr().solve(rhs);
  x = (x + x.transpose()).eval() / Scalar(2);
  if (!x.allFinite()) throw CertificationError("Riccati solver produced a non-finite solution");
  return x;
}

/// PBH rank test. Returns the 0-based index of the first uncontrollable mode
/// of the diagonal block, or -1 if the pair is controllable.
template <typename Scalar>
Index uncontrollable_mode(const Mat<Scalar>& a, const Mat<Scalar>& b) {
  const Index n = a.rows();
  if (n == 0) return -1;
  Mat<Scalar> pbh(n, n + b.cols());
  const Scalar scale = std::max(Scalar(1), std::max(a.cwiseAbs().maxCoeff(),
                                                    b.size() ? b.cwiseAbs().maxCoeff() : Scalar(0)));
  for (Index i = 0; i < n; ++i) {
    pbh << a - a(i, i) * Mat<Scalar>::Identity(n, n), b;
    Eigen::JacobiSVD<Mat<Scalar>> svd(pbh);
    if (svd.singularValues()(n - 1) <= Scalar(1e-10) * scale) return i;
  }
  return -1;
}

struct DesignOptions {
  int max_doublings = 200;
  int bisection_steps = 60;
};

/// Riccati state feedback on (A, B) with Q = rho I, R = I. rho is bisected
/// (in log scale) to the smallest weight whose closed loop satisfies
/// max Re lambda(A + B K) <= -margin.
template <typename Scalar>
FeedbackGain<Scalar> design_gain(const Mat<Scalar>& a, const Mat<Scalar>& b, Scalar margin,
                                 const DesignOptions& options = {}) {
  const Index n = a.rows();
  if (a.cols() != n || b.rows() != n) throw ValidationError("design: inconsistent (A, B) sizes");
  if (!(margin > 0)) throw ValidationError("design.margin must be positive");
  if (n == 0) {
    FeedbackGain<Scalar> g;
    g.block = Mat<Scalar>::Zero(b.cols(), 0);
    return g;
  }
  if (const Index mode = uncontrollable_mode(a, b); mode >= 0)
    throw ValidationError("(A, B) is not controllable: unstable mode " + std::to_string(mode + 1) +
                          " is not reached by any input");

  auto gain_for = [&](Scalar rho) -> Mat<Scalar> {
    const Mat<Scalar> x = solve_care<Scalar>(a, b, rho * Mat<Scalar>::Identity(n, n));
    return -b.transpose() * x;
  };
  auto meets = [&](const Mat<Scalar>& k) {
    return spectral_abscissa(Mat<Scalar>(a + b * k)) <= -margin;
  };

  Scalar lo = 1, hi = 1;
  Mat<Scalar> best = gain_for(hi);
  if (meets(best)) {
    lo = hi / 2;
    for (int i = 0; i < options.max_doublings && meets(gain_for(lo)); ++i) {
      hi = lo;
      lo /= 2;
      if (lo < Scalar(1e-300)) break;
    }
    best = gain_for(hi);
  } else {
    int i = 0;
    for (; i < options.max_doublings; ++i) {
      lo = hi;
      hi *= 2;
      if (meets(gain_for(hi))) break;
    }
    if (i == options.max_doublings)
      throw CertificationError("design: closed-loop margin " + std::to_string(double(margin)) +
                               " not reached within the state-weight budget");
    best = gain_for(hi);
  }
  for (int i = 0; i < options.bisection_steps && hi / lo > Scalar(1) + Scalar(1e-10); ++i) {
    const Scalar mid = std::sqrt(lo * hi);
    const Mat<Scalar> k = gain_for(mid);
    if (meets(k)) {
      hi = mid;
      best = k;
    } else {
      lo = mid;
    }
  }
  FeedbackGain<Scalar> g;
  g.block = best;
  g.state_weight = hi;
  return g;
}

/// Design on the unstable block of a modal model, lifted to the full state.
template <typename Scalar>
FeedbackGain<Scalar> design_gain(const ModalModel<Scalar>& model, Scalar margin,
                                 const DesignOptions& options = {}) {
  auto g = design_gain<Scalar>(model.unstable_block(), model.unstable_input(), margin, options);
  auto lifted = FeedbackGain<Scalar>::lift(g.block, model.dim());
  lifted.state_weight = g.state_weight;
  return lifted;
}

/// A_cl = diag(lambda) + B_full F. Throws when the truncated closed loop is
/// not Hurwitz (spillover or an inadequate design).
template <typename Scalar>
Mat<Scalar> closed_loop_matrix(const ModalModel<Scalar>& model, const FeedbackGain<Scalar>& gain) {
  if (gain.lifted.cols() != model.dim() || gain.lifted.rows() != model.input_count())
    throw ValidationError("gain dimensions do not match the modal model");
  Mat<Scalar> a_cl = model.generator() + model.input * gain.lifted;
  const Scalar abscissa = spectral_abscissa(a_cl);
  if (!(abscissa < 0))
    throw CertificationError("closed loop is not Hurwitz: spectral abscissa " +
                             std::to_string(double(abscissa)));
  return a_cl;
}

}  // namespace etpde
