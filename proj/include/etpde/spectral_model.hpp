#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "etpde/linalg.hpp"
#include "etpde/types.hpp"

namespace etpde {

/// Reaction-diffusion problem w_t = w_xx + c(x) w + sum_k b_k(x) f(u_k) on
/// (0, L) with Dirichlet ends. Coefficients are sampled on a uniform grid that
/// includes both end points.
template <typename Scalar>
struct SpatialProblem {
  Scalar length = 1;
  Vec<Scalar> reaction;  // c on the grid, n_grid values
  Mat<Scalar> inputs;    // n_grid x m, column k is b_k on the grid

  Index grid_size() const { return reaction.size(); }
  Index input_count() const { return inputs.cols(); }
  Scalar step() const { return length / Scalar(grid_size() - 1); }

  Vec<Scalar> grid() const {
    return Vec<Scalar>::LinSpaced(grid_size(), Scalar(0), length);
  }

  void validate() const {
    if (!(length > Scalar(0)) || !std::isfinite(static_cast<double>(length)))
      throw ValidationError("problem.length must be positive and finite");
    if (grid_size() < 16) throw ValidationError("problem.grid_points must be >= 16");
    if (!reaction.allFinite()) throw ValidationError("problem.reaction has non-finite samples");
    if (inputs.rows() != grid_size())
      throw ValidationError("problem.inputs must have one sample per grid point");
    if (!inputs.allFinite()) throw ValidationError("problem.inputs has non-finite samples");
  }

  static SpatialProblem constant(Scalar length, Index grid_points, Scalar c, Index inputs = 0) {
    SpatialProblem p;
    p.length = length;
    p.reaction = Vec<Scalar>::Constant(grid_points, c);
    p.inputs = Mat<Scalar>::Zero(grid_points, inputs);
    return p;
  }
};

/// Leading eigenpairs of d^2/dx^2 + c(x) with Dirichlet conditions.
/// Eigenfunctions are sampled on the full grid (zero at both ends) and are
/// orthonormal in the trapezoid inner product.
template <typename Scalar>
struct EigenSystem {
  Scalar length = 1;
  Vec<Scalar> values;     // decreasing
  Mat<Scalar> functions;  // n_grid x J

  Index count() const { return values.size(); }
  Index grid_size() const { return functions.rows(); }
  Scalar step() const { return length / Scalar(grid_size() - 1); }
  Vec<Scalar> grid() const {
    return Vec<Scalar>::LinSpaced(grid_size(), Scalar(0), length);
  }

  /// max |<e_i, e_j> - delta_ij| under the trapezoid rule.
  Scalar orthonormality_residual() const {
    const Mat<Scalar> gram = step() * functions.transpose() * functions;
    return (gram - Mat<Scalar>::Identity(count(), count())).cwiseAbs().maxCoeff();
  }
};

struct EigenOptions {
  // Adds the exact-minus-discrete eigenvalue difference of the c = 0 problem
  // to every computed eigenvalue. Removes the leading O((j h)^2) error of the
  // three-point stencil, which otherwise grows with the mode index.
  bool asymptotic_correction = true;
};

template <typename Scalar>
EigenSystem<Scalar> solve_eigensystem(const SpatialProblem<Scalar>& problem, Index count,
                                      const EigenOptions& options = {}) {
  problem.validate();
  if (count < 1) throw ValidationError("truncation order must be >= 1");
  const Index n_grid = problem.grid_size();
  if (n_grid < 4 * count)
    throw ValidationError("grid too coarse: grid_points = " + std::to_string(n_grid) +
                          " < 4 * J = " + std::to_string(4 * count));

  const Index interior = n_grid - 2;
  const Scalar h = problem.step();
  const Scalar inv_h2 = Scalar(1) / (h * h);

  Vec<Scalar> diag = problem.reaction.segment(1, interior).array() - Scalar(2) * inv_h2;
  Vec<Scalar> sub = Vec<Scalar>::Constant(interior - 1, inv_h2);
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw Error("tridiagonal eigensolver failed");

  EigenSystem<Scalar> eig;
  eig.length = problem.length;
  eig.values.resize(count);
  eig.functions = Mat<Scalar>::Zero(n_grid, count);
  const Scalar scale = Scalar(1) / std::sqrt(h);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  for (Index j = 0; j < count; ++j) {
    const Index src = interior - 1 - j;  // solver sorts ascending
    Scalar lambda = solver.eigenvalues()(src);
    if (options.asymptotic_correction) {
      const Scalar k = Scalar(j + 1) * pi / problem.length;
      const Scalar s = std::sin(k * h / Scalar(2));
      lambda += Scalar(4) * inv_h2 * s * s - k * k;
    }
    eig.values(j) = lambda;

    Vec<Scalar> v = solver.eigenvectors().col(src);
    const Scalar vmax = v.cwiseAbs().maxCoeff();
    for (Index i = 0; i < interior; ++i) {
      if (std::abs(v(i)) > Scalar(1e-8) * vmax) {
        if (v(i) < 0) v = -v;
        break;
      }
    }
    eig.functions.col(j).segment(1, interior) = scale * v;
  }
  return eig;
}

/// b_jk = <b_k, e_j> by the trapezoid rule; returns a J x m matrix.
template <typename Scalar>
Mat<Scalar> project_inputs(const SpatialProblem<Scalar>& problem, const EigenSystem<Scalar>& eig) {
  if (problem.grid_size() != eig.grid_size() ||
      std::abs(problem.length - eig.length) > Scalar(1e-12) * problem.length)
    throw ValidationError("input shapes and eigenfunctions are sampled on different grids");
  const Scalar h = eig.step();
  Mat<Scalar> b(eig.count(), problem.input_count());
  for (Index k = 0; k < problem.input_count(); ++k)
    for (Index j = 0; j < eig.count(); ++j)
      b(j, k) = trapezoid_inner<Scalar>(problem.inputs.col(k), eig.functions.col(j), h);
  if (!b.allFinite()) throw ValidationError("projected input matrix is not finite");
  return b;
}

/// Projection of an arbitrary sampled profile onto the eigenbasis.
template <typename Scalar>
Vec<Scalar> project_profile(const EigenSystem<Scalar>& eig, const Vec<Scalar>& profile) {
  if (profile.size() != eig.grid_size())
    throw ValidationError("profile must have one sample per grid point");
  Vec<Scalar> w(eig.count());
  for (Index j = 0; j < eig.count(); ++j)
    w(j) = trapezoid_inner<Scalar>(profile, eig.functions.col(j), eig.step());
  return w;
}

template <typename Scalar>
struct UnstableSplit {
  Index unstable = 0;  // n
  Scalar margin = 0;   // eta, with lambda_{n+1} < -eta < 0
  Mat<Scalar> a;       // diag(lambda_1..lambda_n)
  Mat<Scalar> b;       // rows 1..n of the input matrix
};

/// n = #{j : lambda_j >= 0}, eta = eta_fraction * (-lambda_{n+1}).
template <typename Scalar>
UnstableSplit<Scalar> split_unstable(const Vec<Scalar>& eigenvalues, const Mat<Scalar>& input,
                                     Scalar eta_fraction = Scalar(0.5)) {
  const Index count = eigenvalues.size();
  if (count == 0) throw ValidationError("empty spectrum");
  if (input.rows() != count) throw ValidationError("input matrix rows must match eigenvalue count");
  if (!(eta_fraction > 0 && eta_fraction < 1))
    throw ValidationError("eta_fraction must lie in (0, 1)");
  if (!(eigenvalues(count - 1) < 0))
    throw ValidationError("all " + std::to_string(count) +
                          " modes are unstable; increase the truncation order");
  UnstableSplit<Scalar> split;
  while (split.unstable < count && eigenvalues(split.unstable) >= 0) ++split.unstable;
  const Index n = split.unstable;
  split.margin = -eta_fraction * eigenvalues(n);
  split.a = eigenvalues.head(n).asDiagonal();
  split.b = input.topRows(n);
  return split;
}

/// Finite modal realization w_j' = lambda_j w_j + b_j . f(u).
template <typename Scalar>
struct ModalModel {
  Vec<Scalar> eigenvalues;  // J, decreasing
  Mat<Scalar> input;        // J x m
  Index unstable = 0;       // n
  Scalar margin = std::numeric_limits<Scalar>::quiet_NaN();  // eta

  Index dim() const { return eigenvalues.size(); }
  Index input_count() const { return input.cols(); }
  Mat<Scalar> generator() const { return eigenvalues.asDiagonal(); }
  Mat<Scalar> unstable_block() const { return eigenvalues.head(unstable).asDiagonal(); }
  Mat<Scalar> unstable_input() const { return input.topRows(unstable); }

  /// Builds a model from a decreasing spectrum. Models without a stable tail
  /// (e.g. scalar test systems) keep eta = NaN.
  static ModalModel from_diagonal(Vec<Scalar> eigenvalues, Mat<Scalar> input,
                                  Scalar eta_fraction = Scalar(0.5)) {
    if (input.rows() != eigenvalues.size())
      throw ValidationError("input matrix rows must match eigenvalue count");
    for (Index j = 1; j < eigenvalues.size(); ++j)
      if (!(eigenvalues(j) < eigenvalues(j - 1)))
        throw ValidationError("eigenvalues must be strictly decreasing");
    ModalModel m;
    m.eigenvalues = std::move(eigenvalues);
    m.input = std::move(input);
    while (m.unstable < m.dim() && m.eigenvalues(m.unstable) >= 0) ++m.unstable;
    if (m.unstable < m.dim()) m.margin = -eta_fraction * m.eigenvalues(m.unstable);
    return m;
  }
};

/// Truncation checks applied to PDE-derived models: the stable tail must be
/// present, separated by eta, and at least four modes long.
template <typename Scalar>
void validate_truncation(const ModalModel<Scalar>& model) {
  const Index count = model.dim();
  if (model.unstable >= count)
    throw ValidationError("truncation contains no stable mode; increase J");
  if (count - model.unstable < 4)
    throw ValidationError("truncation needs at least 4 stable modes beyond the unstable block (J - n = " +
                          std::to_string(count - model.unstable) + ")");
  if (!(model.margin > 0)) throw ValidationError("spectral margin eta must be positive");
  if (!(model.eigenvalues(model.unstable) < -model.margin) ||
      !(model.eigenvalues(count - 1) < -model.margin))
    throw ValidationError("stable tail must satisfy lambda_j < -eta");
}

template <typename Scalar>
ModalModel<Scalar> build_modal_model(const SpatialProblem<Scalar>& problem,
                                     const EigenSystem<Scalar>& eig,
                                     Scalar eta_fraction = Scalar(0.5)) {
  Mat<Scalar> input = project_inputs(problem, eig);
  auto split = split_unstable<Scalar>(eig.values, input, eta_fraction);
  ModalModel<Scalar> model;
  model.eigenvalues = eig.values;
  model.input = std::move(input);
  model.unstable = split.unstable;
  model.margin = split.margin;
  validate_truncation(model);
  return model;
}

/// w(x) = sum_j w_j e_j(x) on the eigenfunction grid.
template <typename Scalar>
Vec<Scalar> evaluate_state(const EigenSystem<Scalar>& eig, const Vec<Scalar>& w) {
  if (w.size() != eig.count()) throw ValidationError("modal state has wrong dimension");
  return eig.functions * w;
}

/// Same, at arbitrary points in [0, L] by linear interpolation of each mode.
template <typename Scalar>
Vec<Scalar> evaluate_state(const EigenSystem<Scalar>& eig, const Vec<Scalar>& w,
                           const Vec<Scalar>& points) {
  const Vec<Scalar> on_grid = evaluate_state(eig, w);
  const Scalar h = eig.step();
  const Index last = eig.grid_size() - 1;
  Vec<Scalar> out(points.size());
  for (Index i = 0; i < points.size(); ++i) {
    const Scalar x = std::clamp(points(i), Scalar(0), eig.length);
    const Index cell = std::min<Index>(static_cast<Index>(x / h), last - 1);
    const Scalar frac = x / h - Scalar(cell);
    out(i) = (Scalar(1) - frac) * on_grid(cell) + frac * on_grid(cell + 1);
  }
  return out;
}

}  // namespace etpde
