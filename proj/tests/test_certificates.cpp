#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"

using namespace etpde;
using fixtures::scalar;

namespace {

Mat<double> nonnormal() {
  Mat<double> a(2, 2);
  a << -1, 10, 0, -1.01;
  return a;
}

// closed form of e^{At} for the upper-triangular matrix above
Mat<double> nonnormal_exp(double t) {
  Mat<double> e(2, 2);
  e << std::exp(-t), 1000 * (std::exp(-t) - std::exp(-1.01 * t)), 0, std::exp(-1.01 * t);
  return e;
}

double norm2x2(const Mat<double>& m) {
  Eigen::JacobiSVD<Mat<double>> svd(m);
  return svd.singularValues()(0);
}

}  // namespace

TEST_CASE("semigroup bounds of normal matrices") {
  const auto b1 = estimate_decay_bound<double>(scalar(-1), 0.9);
  CHECK(b1.rate == doctest::Approx(0.9));
  CHECK(b1.gain == doctest::Approx(1.0).epsilon(1e-12));

  Mat<double> d = Vec<double>((Vec<double>(2) << -1, -2).finished()).asDiagonal();
  const auto b2 = estimate_decay_bound<double>(d, 0.9);
  CHECK(b2.rate == doctest::Approx(0.9));
  CHECK(b2.gain == doctest::Approx(1.0).epsilon(1e-12));

  const auto g = estimate_growth_bound<double>(scalar(0.5));
  CHECK(g.rate == doctest::Approx(0.5));
  CHECK(g.gain == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(estimate_growth_bound<double>(scalar(-3.0)).rate == doctest::Approx(1e-6));

  CHECK_THROWS_AS(estimate_decay_bound<double>(scalar(0.1), 0.9), CertificationError);
}

TEST_CASE("non-normal transient growth matches a dense closed-form sweep") {
  const auto b = estimate_decay_bound<double>(nonnormal(), 0.9);
  CHECK(b.gain > 1);
  double brute = 1;
  for (int i = 0; i <= 200000; ++i) {
    const double t = 1e-3 * i;
    brute = std::max(brute, std::exp(0.9 * t) * norm2x2(nonnormal_exp(t)));
  }
  CHECK(b.gain >= brute * (1 - 1e-12));
  CHECK(b.gain <= brute * (1 + 1e-6));
}

TEST_CASE("certify_semigroups on the decoupled heat example") {
  const auto h = fixtures::heat(true);
  CHECK(h.cert.closed_gain == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(h.cert.open_gain == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(h.cert.closed_rate == doctest::Approx(-0.9 * h.cert.closed_abscissa));
  CHECK(h.cert.beta == doctest::Approx(h.cert.open_gain * h.cert.closed_gain * h.cert.input_norm));
  CHECK(h.cert.input_norm == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("certificate bounds hold along random directions") {
  const auto h = fixtures::heat(false);
  const Propagator<double> cl(h.a_cl), ol(h.model.generator());
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec<double> x = fixtures::random_state(h.model.dim(), rng);
    for (double t : {0.01, 0.3, 1.0, 3.0, 10.0}) {
      CHECK(cl.apply(t, x).norm() <= h.cert.closed_gain * std::exp(-h.cert.closed_rate * t) * (1 + 1e-9));
      CHECK(ol.apply(t, x).norm() <= h.cert.open_gain * std::exp(h.cert.open_rate * t) * (1 + 1e-9));
    }
  }
}

TEST_CASE("weighted supremum norm") {
  SUBCASE("scalar contraction: sup at t = 0") {
    const ExponentialSupNorm<double> w(scalar(-1), 0.5);
    CHECK(w(Vec<double>::Constant(1, 1.0)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(w(Vec<double>::Constant(1, -3.0)) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(w(Vec<double>::Zero(1)) == 0.0);
  }
  SUBCASE("non-normal: ratio within [1, N], dense-grid agreement, refinement") {
    const auto b = estimate_decay_bound<double>(nonnormal(), 0.9);
    const double zeta = 0.45;
    const ExponentialSupNorm<double> w(nonnormal(), zeta, b.gain, b.rate);
    SupNormOptions fine;
    fine.step_factor /= 2;
    fine.steps_per_block *= 2;
    const ExponentialSupNorm<double> w_fine(nonnormal(), zeta, b.gain, b.rate, fine);
    CHECK(w.horizon() == doctest::Approx(std::log(b.gain) / (b.rate - zeta)));
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 25; ++trial) {
      const Vec<double> x = fixtures::random_state(2, rng, 2.0);
      const double v = w(x);
      CHECK(v >= x.norm() * (1 - 1e-15));
      CHECK(v <= b.gain * x.norm() * (1 + 1e-12));
      CHECK(std::abs(w_fine(x) - v) <= 1e-6 * v);
      double brute = 0;
      for (int i = 0; i <= 100000; ++i) {
        const double t = 1e-3 * i;
        brute = std::max(brute, std::exp(zeta * t) * (nonnormal_exp(t) * x).norm());
      }
      CHECK(v >= brute * (1 - 1e-12));
      CHECK(v <= brute * (1 + 1e-6));
    }
  }
  SUBCASE("rate must stay below the decay rate") {
    CHECK_THROWS_AS(ExponentialSupNorm<double>(scalar(-1), 1.0), CertificationError);
    CHECK_THROWS_AS(ExponentialSupNorm<double>(scalar(-1), 0.9, 1.0, 0.9), CertificationError);
  }
}

TEST_CASE("psi_map examples") {
  const auto s = fixtures::scalar_loop(-1, 1, 0);
  const auto p = psi_map(s.model, s.gain, SectorNonlinearity<double>::identity(), 1.0, fixtures::one(1.0));
  CHECK(p.psi(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(p.phi(0) == 0.0);

  const auto h = fixtures::heat(false);
  const SectorNonlinearity<double> blend(NonlinearityKind::TanhBlend, 0.2);
  const Vec<double> zero = Vec<double>::Zero(h.model.dim());
  CHECK(psi_map(h.model, h.gain, blend, 0.1, zero).psi.isZero(0));
  std::mt19937_64 rng(4);
  const Vec<double> x = fixtures::random_state(h.model.dim(), rng, 3.0);
  CHECK(psi_map(h.model, h.gain, SectorNonlinearity<double>::identity(), 0.1, x).phi.isZero(0));
  const auto parts = psi_map(h.model, h.gain, blend, 0.1, x);
  CHECK((parts.psi - parts.delta - parts.phi).norm() <= 1e-14 * parts.psi.norm());

  CHECK_THROWS_AS(psi_map(h.model, h.gain, blend, 0.0, x), ValidationError);
}

TEST_CASE("psi_map matches scalar variation of constants with a nonlinearity") {
  const double lambda = 1.0, b = 1.0, k = -2.0, tau = 0.4;
  const auto s = fixtures::scalar_loop(lambda, b, k);
  const SectorNonlinearity<double> blend(NonlinearityKind::TanhBlend, 0.1);
  for (double x : {-3.0, -0.2, 0.7, 5.0}) {
    const double expected = std::exp(lambda * tau) * x + std::expm1(lambda * tau) / lambda * b * blend(k * x);
    const double got = psi_map(s.model, s.gain, blend, tau, fixtures::one(x)).psi(0);
    CHECK(std::abs(got - expected) <= 1e-14 * std::abs(expected));
  }
}

TEST_CASE("verify_power_stability") {
  SUBCASE("stable linear design, small tau") {
    const auto h = fixtures::heat(true);
    PowerStabilityOptions opt;
    opt.trials = 20;
    const auto r = verify_power_stability(h.model, h.gain, SectorNonlinearity<double>::identity(), 0.05, opt);
    CHECK(r.pass);
    CHECK(r.q < 1);
    CHECK(r.q >= r.linear_radius);
  }
  SUBCASE("contraction factor approaches 1 - xi tau") {
    const auto s = fixtures::scalar_loop(1, 1, -2);
    const double xi = 0.9;
    for (double tau : {0.01, 0.05, 0.1}) {
      const auto r = verify_power_stability(s.model, s.gain, SectorNonlinearity<double>::identity(), tau);
      CHECK(r.pass);
      CHECK(r.q <= 1 - 0.5 * xi * tau);
      CHECK(r.q == doctest::Approx(2 - std::exp(tau)).epsilon(1e-9));
    }
  }
  SUBCASE("open loop unstable without feedback") {
    const auto s = fixtures::scalar_loop(1, 1, 0);
    const auto r = verify_power_stability(s.model, s.gain, SectorNonlinearity<double>::identity(), 0.1);
    CHECK_FALSE(r.pass);
    CHECK(r.witness_trial == 0);
    CHECK(r.witness.size() > 1);
    CHECK(!r.message.empty());
  }
  SUBCASE("trajectories obey the fitted bound") {
    const auto h = fixtures::heat(false);
    const SectorNonlinearity<double> blend(NonlinearityKind::TanhBlend, 0.05);
    PowerStabilityOptions opt;
    opt.trials = 10;
    opt.seed = 99;
    const auto r = verify_power_stability(h.model, h.gain, blend, 0.2, opt);
    REQUIRE(r.pass);
    const SampledMap<double> map(h.model, h.gain, blend, 0.2);
    std::mt19937_64 rng(derive_seed(5, "check"));
    for (int trial = 0; trial < 10; ++trial) {
      Vec<double> x = fixtures::random_state(h.model.dim(), rng);
      // the fitted bound covers the worst linear direction as well
      for (int k = 1; k <= 50; ++k) {
        x = map(x);
        CHECK(x.norm() <= r.prefactor * std::pow(r.q, k) * (1 + 1e-6));
      }
    }
  }
}

TEST_CASE("find_tau_star") {
  const auto s = fixtures::scalar_loop(1, 1, -2);
  const auto id = SectorNonlinearity<double>::identity();
  const auto r = find_tau_star(s.model, s.gain, id, 2.0);
  CHECK(std::abs(r.tau_star - 1.09861228866810969) <= 1e-3);
  CHECK(r.tau_star <= 1.09861228866810969);
  CHECK_FALSE(r.clamped);

  const auto clamped = find_tau_star(s.model, s.gain, id, 0.5);
  CHECK(clamped.clamped);
  CHECK(clamped.tau_star == 0.5);

  const SectorNonlinearity<double> blend(NonlinearityKind::TanhBlend, 0.05);
  const auto rb = find_tau_star(s.model, s.gain, blend, 2.0);
  CHECK(rb.tau_star <= r.tau_star + 1e-3);

  const auto open = fixtures::scalar_loop(1, 1, 0);
  CHECK_THROWS_AS(find_tau_star(open.model, open.gain, id, 1.0), CertificationError);
  CHECK_THROWS_AS(find_tau_star(s.model, s.gain, id, 0.0), ValidationError);
}

TEST_CASE("sampled_decay_constants") {
  const auto s = fixtures::scalar_loop(1, 1, -2);
  const auto c = sampled_decay_constants<double>(std::exp(-1.0), 1.0, 1.0, s.model, s.gain, 0.0);
  CHECK(c.rate == doctest::Approx(1.0).epsilon(1e-15));
  const auto near_one = sampled_decay_constants<double>(1 - 1e-9, 1.0, 1.0, s.model, s.gain, 0.0);
  CHECK(near_one.rate > 0);
  CHECK(near_one.rate < 1e-8);
  CHECK_THROWS_AS(sampled_decay_constants<double>(1.0, 1.0, 1.0, s.model, s.gain, 0.0), CertificationError);

  SUBCASE("envelope dominates a dense simulation at tau = 0.5") {
    const double tau = 0.5;
    const double q = std::abs(2 - std::exp(tau));
    const auto env = sampled_decay_constants<double>(q, 1.0, tau, s.model, s.gain, 0.0);
    SampledOptions opt;
    opt.output_step = 1e-3;
    for (double x0 : {1.0, -2.5}) {
      const auto rec = simulate_sampled(s.model, s.gain, SectorNonlinearity<double>::identity(), tau,
                                        fixtures::one(x0), 10.0, opt);
      for (std::size_t i = 0; i < rec.size(); ++i)
        CHECK(rec.states[i].norm() <= env.gain * std::exp(-env.rate * rec.times[i]) * std::abs(x0) * (1 + 1e-9));
    }
  }
}

TEST_CASE("contraction envelope") {
  const auto h = fixtures::heat(true);
  const auto e = contraction_envelope(h.model, h.gain, 0.05, 0.1);
  REQUIRE(e.valid);
  CHECK(e.one_step < 1);
  CHECK(e.rate == doctest::Approx(-std::log(e.one_step) / 0.1));
  CHECK(e.gain >= 1);
  CHECK_FALSE(contraction_envelope(fixtures::scalar_loop(1, 1, 0).model, fixtures::scalar_loop(1, 1, 0).gain, 0.0, 0.1).valid);
}

TEST_CASE("equivalent-norm one-step contraction") {
  const auto h = fixtures::heat(false);
  const double delta = 0.05, tau = 0.1;
  const SectorNonlinearity<double> blend(NonlinearityKind::TanhBlend, delta);
  const double theta = delta * h.gain.norm();
  const auto c = equivalent_norm_contraction(h.model, h.gain, h.cert, theta, tau);
  CHECK(c.q == doctest::Approx(c.linear + c.nonlinear));
  REQUIRE(c.q < 1);
  const ExponentialSupNorm<double> w(h.a_cl, h.cert.closed_rate);
  const SampledMap<double> map(h.model, h.gain, blend, tau);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec<double> x = fixtures::random_state(h.model.dim(), rng, std::pow(10.0, trial % 5 - 2));
    CHECK(w(map(x)) <= c.q * w(x) * (1 + 1e-9));
  }
}

TEST_CASE("seeds and random directions") {
  CHECK(derive_seed(1, "power") == derive_seed(1, "power"));
  CHECK(derive_seed(1, "power") != derive_seed(1, "initial"));
  CHECK(derive_seed(1, "power") != derive_seed(2, "power"));
  std::mt19937_64 a(3), b(3);
  CHECK(random_unit_vector<double>(5, a) == random_unit_vector<double>(5, b));
  CHECK(random_unit_vector<double>(5, a).norm() == doctest::Approx(1.0).epsilon(1e-15));
}
