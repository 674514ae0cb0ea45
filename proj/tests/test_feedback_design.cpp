#include <doctest.h>

#include <cmath>

#include "etpde/feedback_design.hpp"

using namespace etpde;

namespace {

Mat<double> scalar(double v) { return Mat<double>::Constant(1, 1, v); }

}  // namespace

TEST_CASE("scalar design meets the requested margin") {
  const auto g = design_gain<double>(scalar(0.1304), scalar(0.9003), 1.0);
  REQUIRE(g.block.rows() == 1);
  REQUIRE(g.block.cols() == 1);
  CHECK(0.1304 + 0.9003 * g.block(0, 0) <= -1.0);
  CHECK(g.norm() == doctest::Approx(std::abs(g.block(0, 0))));
  // the bisection keeps the weight near the smallest admissible one
  CHECK(0.1304 + 0.9003 * g.block(0, 0) >= -1.0 - 1e-6);
}

TEST_CASE("no unstable modes gives an empty gain") {
  const auto g = design_gain<double>(Mat<double>(0, 0), Mat<double>(0, 2), 1.0);
  CHECK(g.block.rows() == 2);
  CHECK(g.block.cols() == 0);
  CHECK(g.norm() == 0.0);
  const auto lifted = FeedbackGain<double>::lift(g.block, 5);
  CHECK(lifted.lifted.isZero());
  CHECK(lifted.lifted.cols() == 5);
}

TEST_CASE("uncontrollable pairs are rejected") {
  CHECK_THROWS_AS(design_gain<double>(scalar(0.5), scalar(0.0), 1.0), ValidationError);
  Mat<double> a(2, 2);
  a << 2, 0, 0, 1;
  Mat<double> b(2, 1);
  b << 1, 0;
  CHECK(uncontrollable_mode<double>(a, b) == 1);
  CHECK_THROWS_AS(design_gain<double>(a, b, 1.0), ValidationError);
  b << 1, 1;
  CHECK(uncontrollable_mode<double>(a, b) == -1);
}

TEST_CASE("multi-input design and Riccati residual") {
  Mat<double> a(2, 2);
  a << 3, 0, 0, 0.5;
  Mat<double> b(2, 2);
  b << 1, 0.2, -0.3, 1;
  const auto g = design_gain<double>(a, b, 2.0);
  CHECK(spectral_abscissa(Mat<double>(a + b * g.block)) <= -2.0);
  const Mat<double> q = g.state_weight * Mat<double>::Identity(2, 2);
  const Mat<double> x = solve_care<double>(a, b, q);
  const Mat<double> res = a.transpose() * x + x * a - x * b * b.transpose() * x + q;
  CHECK(res.norm() <= 1e-8 * std::max(1.0, x.norm()));
  Eigen::SelfAdjointEigenSolver<Mat<double>> eig(x);
  CHECK(eig.eigenvalues().minCoeff() > 0);
}

TEST_CASE("closed_loop_matrix examples") {
  Vec<double> lam(2);
  lam << 0.1304, -29.478;
  Mat<double> b(2, 1);
  b << 0.9003, 0;
  const auto model = ModalModel<double>::from_diagonal(lam, b);
  const auto g = FeedbackGain<double>::lift(scalar(-2.0), 2);
  const Mat<double> a_cl = closed_loop_matrix(model, g);
  CHECK(a_cl(0, 0) == doctest::Approx(0.1304 - 1.8006).epsilon(1e-14));
  CHECK(a_cl(0, 1) == 0.0);
  CHECK(a_cl(1, 1) == doctest::Approx(-29.478));
  CHECK(spectral_abscissa(a_cl) == doctest::Approx(-1.6702).epsilon(1e-12));

  SUBCASE("frozen value with b = 2 sqrt(2) / pi") {
    Mat<double> bb(2, 1);
    bb << 0.900316316157106070, 0;
    Vec<double> exact_lam(2);
    exact_lam << 0.130395598910641381, -29.4784176043574345;
    const auto m2 = ModalModel<double>::from_diagonal(exact_lam, bb);
    CHECK(spectral_abscissa(closed_loop_matrix(m2, g)) ==
          doctest::Approx(-1.67023703340357076).epsilon(1e-14));
  }
  SUBCASE("zero gain, stable spectrum") {
    Vec<double> s(2);
    s << -1, -3;
    const auto m3 = ModalModel<double>::from_diagonal(s, b);
    const auto zero = FeedbackGain<double>::lift(Mat<double>(1, 0), 2);
    const Mat<double> a3 = closed_loop_matrix(m3, zero);
    CHECK(a3 == m3.generator());
    CHECK(spectral_abscissa(a3) == doctest::Approx(-1.0));
  }
  SUBCASE("zero gain with an unstable mode") {
    const auto zero = FeedbackGain<double>::lift(scalar(0.0), 2);
    CHECK_THROWS_AS(closed_loop_matrix(model, zero), CertificationError);
  }
  SUBCASE("dimension mismatch") {
    const auto wrong = FeedbackGain<double>::lift(scalar(-2.0), 3);
    CHECK_THROWS_AS(closed_loop_matrix(model, wrong), ValidationError);
  }
}

TEST_CASE("design_gain on a modal model lifts the block") {
  Vec<double> lam(4);
  lam << 2, 0.5, -4, -9;
  Mat<double> b(4, 1);
  b << 1, 0.5, 0.3, 0.1;
  const auto model = ModalModel<double>::from_diagonal(lam, b);
  const auto g = design_gain(model, 1.0);
  CHECK(g.block.cols() == 2);
  CHECK(g.lifted.cols() == 4);
  CHECK(g.lifted.rightCols(2).isZero());
  CHECK(spectral_abscissa(Mat<double>(model.unstable_block() + model.unstable_input() * g.block)) <= -1.0);
  CHECK(g.state_weight > 0);
}
