#include <doctest.h>

#include <cmath>
#include <random>

#include "etpde/linalg.hpp"

using namespace etpde;

TEST_CASE("phi1 and exp_integral") {
  CHECK(phi1(0.0) == 1.0);
  CHECK(phi1(1e-10) == doctest::Approx(1.0 + 5e-11).epsilon(1e-15));
  CHECK(phi1(1.0) == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-15));
  CHECK(phi1(-30.0) == doctest::Approx(1.0 / 30.0).epsilon(1e-12));
  // lambda = 2, h = 0.5: (e - 1) / 2
  CHECK(exp_integral(2.0, 0.5) == doctest::Approx(0.859140914229522618).epsilon(1e-15));
  CHECK(exp_integral(0.0, 0.7) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("spectral abscissa and norm") {
  Mat<double> a(2, 2);
  a << -1, 10, 0, -1.01;
  CHECK(spectral_abscissa(a) == doctest::Approx(-1.0));
  Mat<double> rot(2, 2);
  rot << 0, -1, 1, 0;
  CHECK(spectral_abscissa(rot) == doctest::Approx(0.0).epsilon(1e-14));

  Mat<double> m(2, 3);
  m << 3, 0, 0, 0, 4, 0;
  CHECK(spectral_norm(m) == doctest::Approx(4.0));
  CHECK(spectral_norm(Mat<double>(m.transpose())) == doctest::Approx(4.0));
  CHECK(spectral_norm(Mat<double>(0, 0)) == 0.0);

  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 10; ++trial) {
    Mat<double> r(4, 3);
    for (Index i = 0; i < r.size(); ++i) r.data()[i] = normal(rng);
    Eigen::JacobiSVD<Mat<double>> svd(r);
    CHECK(spectral_norm(r) == doctest::Approx(svd.singularValues()(0)).epsilon(1e-12));
  }
}

TEST_CASE("trapezoid integrates linear functions exactly") {
  const Vec<double> x = Vec<double>::LinSpaced(11, 0.0, 2.0);
  CHECK(trapezoid<double>(x, 0.2) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(trapezoid<double>(Vec<double>::Ones(1), 1.0) == 0.0);
}

TEST_CASE("graded grid doubles its step per block and lands on the horizon") {
  const auto g = graded_grid(10.0, 0.01, 0.08, 4);
  CHECK(g.times.front() == 0.0);
  CHECK(g.times.back() == 10.0);
  for (std::size_t i = 1; i < g.times.size(); ++i) {
    CHECK(g.times[i] > g.times[i - 1]);
    CHECK(g.steps[i] <= 0.08);
  }
  CHECK(g.steps[1] == 0.01);
  CHECK(g.steps[5] == 0.02);
  CHECK(g.steps[9] == 0.04);
  CHECK(graded_grid(0.0, 0.1, 0.1, 4).times.size() == 1);
}

TEST_CASE("golden_maximize finds an interior maximum") {
  const auto [x, fx] = golden_maximize([](double t) { return t * std::exp(-t); }, 0.0, 5.0, 1e-9);
  CHECK(x == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(fx == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("Propagator agrees with expm, including non-diagonalizable input") {
  Mat<double> a(3, 3);
  a << -1, 2, 0, -2, -1, 0.5, 0, 0, -3;
  const Propagator<double> p(a);
  CHECK(p.diagonalized());
  Vec<double> x(3);
  x << 1, -2, 0.5;
  for (double t : {0.0, 0.1, 1.0, 4.0}) {
    const Mat<double> ref = expm(Mat<double>(a * t));
    CHECK((p.matrix(t) - ref).norm() <= 1e-12 * std::max(1.0, ref.norm()));
    CHECK((p.apply(t, x) - ref * x).norm() <= 1e-12 * std::max(1.0, (ref * x).norm()));
  }

  Mat<double> jordan(2, 2);
  jordan << -1, 1, 0, -1;
  const Propagator<double> pj(jordan);
  CHECK_FALSE(pj.diagonalized());
  Mat<double> exact(2, 2);
  exact << std::exp(-2.0), 2 * std::exp(-2.0), 0, std::exp(-2.0);
  CHECK((pj.matrix(2.0) - exact).norm() <= 1e-14);
}

TEST_CASE("expm semigroup property") {
  Mat<double> a(2, 2);
  a << -1, 10, 0, -1.01;
  const Mat<double> lhs = expm(Mat<double>(a * 0.7));
  const Mat<double> rhs = expm(Mat<double>(a * 0.3)) * expm(Mat<double>(a * 0.4));
  CHECK((lhs - rhs).norm() <= 1e-13 * lhs.norm());
}
