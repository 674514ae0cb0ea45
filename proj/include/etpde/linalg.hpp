#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "etpde/types.hpp"

namespace etpde {

/// Largest real part over the spectrum of a square matrix.
template <typename Derived>
typename Derived::Scalar spectral_abscissa(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() == 0) return -std::numeric_limits<Scalar>::infinity();
  Eigen::EigenSolver<Mat<Scalar>> solver(a.eval(), false);
  return solver.eigenvalues().real().maxCoeff();
}

/// Spectral (operator 2-) norm. Uses the largest eigenvalue of M^T M, which is
/// cheap and accurate for the largest singular value.
template <typename Derived>
typename Derived::Scalar spectral_norm(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() == 0 || m.cols() == 0) return Scalar(0);
  if (m.cols() == 1) return m.norm();
  if (m.rows() == 1) return m.norm();
  const Mat<Scalar> gram = (m.rows() >= m.cols()) ? Mat<Scalar>(m.transpose() * m)
                                                  : Mat<Scalar>(m * m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> solver(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(Scalar(0), solver.eigenvalues().maxCoeff()));
}

template <typename Derived>
Mat<typename Derived::Scalar> expm(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  const Mat<Scalar> m = a.eval();
  if (m.rows() == 0) return m;
  return m.exp();
}

/// phi_1(z) = (e^z - 1) / z, continuous at z = 0.
template <typename Scalar>
Scalar phi1(Scalar z) {
  using std::abs;
  if (abs(z) < Scalar(1e-8)) return Scalar(1) + z / Scalar(2);
  return std::expm1(z) / z;
}

/// Exact integral of e^{lambda s} over [0, h].
template <typename Scalar>
Scalar exp_integral(Scalar lambda, Scalar h) {
  return phi1(lambda * h) * h;
}

template <typename Scalar>
Scalar trapezoid(const Eigen::Ref<const Vec<Scalar>>& values, Scalar step) {
  const Index n = values.size();
  if (n < 2) return Scalar(0);
  return step * (values.sum() - (values(0) + values(n - 1)) / Scalar(2));
}

template <typename Scalar>
Scalar trapezoid_inner(const Eigen::Ref<const Vec<Scalar>>& f,
                       const Eigen::Ref<const Vec<Scalar>>& g, Scalar step) {
  return trapezoid<Scalar>(f.cwiseProduct(g), step);
}

/// Time grid that starts with `base_step` and doubles the step after every
/// `steps_per_block` steps, capped at `max_step`. Consecutive points in one
/// block share a step, so propagators can be built by repeated products.
template <typename Scalar>
struct GradedGrid {
  std::vector<Scalar> times;
  // step used to reach times[i] from times[i-1]; steps[0] == 0
  std::vector<Scalar> steps;
};

template <typename Scalar>
GradedGrid<Scalar> graded_grid(Scalar horizon, Scalar base_step, Scalar max_step,
                               int steps_per_block) {
  GradedGrid<Scalar> grid;
  grid.times.push_back(Scalar(0));
  grid.steps.push_back(Scalar(0));
  if (!(horizon > Scalar(0))) return grid;
  Scalar h = std::min(base_step, max_step);
  Scalar t = 0;
  int in_block = 0;
  while (t < horizon) {
    const Scalar step = std::min(h, horizon - t);
    t = (step == h) ? t + h : horizon;
    grid.times.push_back(t);
    grid.steps.push_back(step);
    if (++in_block == steps_per_block) {
      in_block = 0;
      h = std::min(h * Scalar(2), max_step);
    }
  }
  return grid;
}

/// Golden-section search for the maximum of a unimodal function on [a, b].
template <typename Scalar, typename Fn>
std::pair<Scalar, Scalar> golden_maximize(Fn&& fn, Scalar a, Scalar b, Scalar tol) {
  const Scalar inv_phi = (std::sqrt(Scalar(5)) - Scalar(1)) / Scalar(2);
  Scalar c = b - inv_phi * (b - a);
  Scalar d = a + inv_phi * (b - a);
  Scalar fc = fn(c);
  Scalar fd = fn(d);
  for (int it = 0; it < 200 && (b - a) > tol; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = fn(d);
    }
  }
  return fc > fd ? std::pair{c, fc} : std::pair{d, fd};
}

/// Evaluates e^{At} and e^{At}x at arbitrary t. Uses an eigendecomposition
/// when it is well conditioned and falls back to scaling-and-squaring.
template <typename Scalar>
class Propagator {
 public:
  using Complex = std::complex<Scalar>;

  Propagator() = default;

  explicit Propagator(Mat<Scalar> a, Scalar max_condition = Scalar(1e8)) : a_(std::move(a)) {
    if (a_.rows() == 0) return;
    Eigen::EigenSolver<Mat<Scalar>> solver(a_, true);
    if (solver.info() != Eigen::Success) return;
    vectors_ = solver.eigenvectors();
    values_ = solver.eigenvalues();
    Eigen::JacobiSVD<CMat<Scalar>> svd(vectors_);
    const auto& sv = svd.singularValues();
    const Scalar smin = sv(sv.size() - 1);
    if (!(smin > Scalar(0)) || sv(0) / smin > max_condition) return;
    inverse_ = vectors_.inverse();
    diagonal_ = true;
  }

  Index dim() const { return a_.rows(); }
  bool diagonalized() const { return diagonal_; }
  const Mat<Scalar>& generator() const { return a_; }

  Mat<Scalar> matrix(Scalar t) const {
    if (!diagonal_) return expm(Mat<Scalar>(a_ * t));
    const CVec<Scalar> e = (values_ * Complex(t)).array().exp().matrix();
    return (vectors_ * e.asDiagonal() * inverse_).real();
  }

  /// Coordinates of x in the eigenbasis; reuse across many `apply_modal` calls.
  CVec<Scalar> coordinates(const Vec<Scalar>& x) const {
    if (!diagonal_) return x.template cast<Complex>();
    return inverse_ * x.template cast<Complex>();
  }

  Vec<Scalar> apply_modal(Scalar t, const CVec<Scalar>& coords) const {
    if (!diagonal_) return expm(Mat<Scalar>(a_ * t)) * coords.real();
    const CVec<Scalar> scaled =
        (values_ * Complex(t)).array().exp().matrix().cwiseProduct(coords);
    return (vectors_ * scaled).real();
  }

  Vec<Scalar> apply(Scalar t, const Vec<Scalar>& x) const {
    return apply_modal(t, coordinates(x));
  }

 private:
  Mat<Scalar> a_;
  CMat<Scalar> vectors_;
  CMat<Scalar> inverse_;
  CVec<Scalar> values_;
  bool diagonal_ = false;
};

}  // namespace etpde
