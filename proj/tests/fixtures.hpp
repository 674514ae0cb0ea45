#pragma once

#include <cmath>
#include <random>

#include "etpde/etpde.hpp"

namespace fixtures {

using etpde::Index;
using etpde::Mat;
using etpde::Vec;

inline Mat<double> scalar(double v) { return Mat<double>::Constant(1, 1, v); }
inline Vec<double> one(double v) { return Vec<double>::Constant(1, v); }

/// x' = lambda x + b u with u = k x.
struct Scalar1 {
  etpde::ModalModel<double> model;
  etpde::FeedbackGain<double> gain;
};

inline Scalar1 scalar_loop(double lambda, double b, double k) {
  Scalar1 s;
  s.model = etpde::ModalModel<double>::from_diagonal(Vec<double>::Constant(1, lambda), scalar(b));
  s.gain = etpde::FeedbackGain<double>::lift(scalar(k), 1);
  return s;
}

/// c = 10 on (0, 1), one actuator. `shaped` selects b = e_1 (decoupled
/// closed loop, N = 1); otherwise b = 1, which couples every odd mode.
struct Heat {
  etpde::EigenSystem<double> eig;
  etpde::ModalModel<double> model;
  etpde::FeedbackGain<double> gain;
  Mat<double> a_cl;
  etpde::SemigroupCertificate<double> cert;
};

inline Heat heat(bool shaped, Index modes = 16, double margin = 1.0) {
  Heat h;
  auto p = etpde::SpatialProblem<double>::constant(1.0, 8 * modes, 10.0, 1);
  h.eig = etpde::solve_eigensystem(p, modes);
  if (shaped)
    p.inputs.col(0) = h.eig.functions.col(0);
  else
    p.inputs.col(0).setOnes();
  h.model = etpde::build_modal_model(p, h.eig);
  h.gain = etpde::design_gain(h.model, margin);
  h.a_cl = etpde::closed_loop_matrix(h.model, h.gain);
  h.cert = etpde::certify_semigroups(h.model, h.gain);
  return h;
}

inline Vec<double> random_state(Index dim, std::mt19937_64& rng, double norm = 1.0) {
  return norm * etpde::random_unit_vector<double>(dim, rng);
}

}  // namespace fixtures
