#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "addsub/errors.hpp"
#include "addsub/ou_base.hpp"
#include "addsub/statistics.hpp"
#include "doctest.h"

using namespace addsub;
using doctest::Approx;

namespace {

FactorMOUSpec two_factor(double a1, double a2) {
  FactorMOUSpec spec;
  spec.idio = {OUSpec{1.0, 0.0, 1.0, 0.0}, OUSpec{1.0, 0.0, 1.0, 0.0}};
  spec.loadings = {a1, a2};
  spec.validate();
  return spec;
}

Complex gaussian_log_cf(double mean, double var, double xi) { return {-0.5 * var * xi * xi, mean * xi}; }

}  // namespace

TEST_CASE("OU spec validation") {
  CHECK_THROWS_AS((OUSpec{0.0, 0.0, 1.0, 0.0}.validate()), DomainError);
  CHECK_THROWS_AS((OUSpec{1.0, 0.0, -1.0, 0.0}.validate()), DomainError);
  auto f = two_factor(1.0, 1.0);
  f.loadings[0] = -0.1;
  CHECK_THROWS_AS(f.validate(), DomainError);
  f = two_factor(1.0, 1.0);
  f.idio[1].x0 = 0.5;
  CHECK_THROWS_AS(f.validate(), DomainError);
  f = two_factor(1.0, 1.0);
  f.loadings.pop_back();
  CHECK_THROWS_AS(f.validate(), DomainError);
  CHECK_THROWS_AS(ou_transition_moments(OUSpec{}, 0.0, -1.0), DomainError);
}

TEST_CASE("ou_transition_moments") {
  const OUSpec s{1.0, 2.0, 1.0, 0.0};
  auto m = ou_transition_moments(s, 0.7, 0.0);
  CHECK(m.mean == 0.7);
  CHECK(m.var == 0.0);
  m = ou_transition_moments(s, 0.0, std::log(2.0));
  CHECK(m.mean == Approx(1.0).epsilon(1e-15));
  CHECK(m.var == Approx(0.375).epsilon(1e-15));
  m = ou_transition_moments(OUSpec{0.5, -1.0, 2.0, 0.0}, 3.0, INFINITY);
  CHECK(m.mean == -1.0);
  CHECK(m.var == Approx(4.0));

  // Flow property: a Gaussian step composed with a Gaussian step.
  const OUSpec g{1.7, 0.4, 0.9, 0.0};
  for (double x : {-2.0, 0.0, 1.3}) {
    const double dt1 = 0.3, dt2 = 1.1;
    const auto first = ou_transition_moments(g, x, dt1);
    const auto second_mean = ou_transition_moments(g, first.mean, dt2).mean;
    const double decay = std::exp(-g.k * dt2);
    const double second_var = decay * decay * first.var + ou_transition_moments(g, 0.0, dt2).var;
    const auto direct = ou_transition_moments(g, x, dt1 + dt2);
    CHECK(std::abs(second_mean - direct.mean) < 1e-12);
    CHECK(std::abs(second_var - direct.var) < 1e-12);
  }
}

TEST_CASE("matrix_ou_transition_moments") {
  MatrixOUSpec m;
  m.K = Eigen::MatrixXd::Identity(2, 2);
  m.theta = Eigen::VectorXd::Zero(2);
  m.Lambda = Eigen::MatrixXd::Identity(2, 2);
  m.x0 = Eigen::VectorXd::Zero(2);
  m.validate();
  const double t = 0.8;
  const auto r = matrix_ou_transition_moments(m, Eigen::Vector2d(1.0, -1.0), t);
  const double v = (1.0 - std::exp(-2.0 * t)) / 2.0;
  CHECK((r.cov - v * Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
  CHECK((r.mean - std::exp(-t) * Eigen::Vector2d(1.0, -1.0)).norm() < 1e-12);

  const auto zero = matrix_ou_transition_moments(m, Eigen::Vector2d(0.3, 0.4), 0.0);
  CHECK(zero.mean == Eigen::Vector2d(0.3, 0.4));
  CHECK(zero.cov.isZero());

  // Diagonal K reproduces independent scalar processes.
  MatrixOUSpec diag = m;
  diag.K = Eigen::Vector2d(0.5, 3.0).asDiagonal();
  diag.theta = Eigen::Vector2d(1.0, -2.0);
  diag.Lambda = Eigen::Vector2d(0.7, 1.4).asDiagonal();
  const Eigen::Vector2d x(0.2, 0.9);
  const auto rd = matrix_ou_transition_moments(diag, x, 1.3);
  for (int j = 0; j < 2; ++j) {
    const auto s = ou_transition_moments(OUSpec{diag.K(j, j), diag.theta[j], diag.Lambda(j, j), 0.0}, x[j], 1.3);
    CHECK(std::abs(rd.mean[j] - s.mean) < 1e-12);
    CHECK(std::abs(rd.cov(j, j) - s.var) < 1e-12);
  }
  CHECK(std::abs(rd.cov(0, 1)) < 1e-14);

  // Non-normal K against a quadrature of the covariance integral.
  MatrixOUSpec skew = m;
  skew.K << 1.0, 2.0, -0.5, 1.5;
  skew.Lambda << 1.0, 0.0, 0.3, 0.8;
  skew.validate();
  const auto rs = matrix_ou_transition_moments(skew, Eigen::Vector2d::Zero(), 0.9);
  CHECK((rs.cov - rs.cov.transpose()).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rs.cov);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const auto q = integrate(
          [&](double u) {
            const Eigen::MatrixXd e = (-skew.K * u).exp();
            return (e * skew.Sigma() * e.transpose())(i, j);
          },
          0.0, 0.9);
      CHECK(std::abs(q.value - rs.cov(i, j)) < 1e-10);
    }

  MatrixOUSpec unstable = m;
  unstable.K << -1.0, 0.0, 0.0, 1.0;
  CHECK_THROWS_AS(unstable.validate(), DomainError);
}

TEST_CASE("ou_sample_step") {
  const OUSpec s{1.0, 0.0, 1.0, 0.0};
  Philox g(RngStream{3, 0});
  CHECK(ou_sample_step(s, 1.25, 0.0, g) == 1.25);
  const OUSpec quiet{2.0, 1.0, 0.0, 0.0};
  CHECK(ou_sample_step(quiet, 3.0, 0.5, g) == Approx(1.0 + 2.0 * std::exp(-1.0)).epsilon(1e-15));

  const auto est = mc_mean([&](RngStream r) { Philox p(r); return ou_sample_step(s, 1.0, 1.0, p); }, 1000000,
                           RngStream{4, 0});
  CHECK(std::abs(est.mean - std::exp(-1.0)) < 3.0 * est.std_error);
  const auto sq = mc_mean(
      [&](RngStream r) {
        Philox p(r);
        const double v = ou_sample_step(s, 1.0, 1.0, p) - std::exp(-1.0);
        return v * v;
      },
      200000, RngStream{5, 0});
  CHECK(std::abs(sq.mean - (1.0 - std::exp(-2.0)) / 2.0) < 3.0 * sq.std_error);
}

TEST_CASE("ou_char_exponent") {
  const OUSpec s{1.4, 0.6, 0.8, 0.0};
  CHECK(std::abs(ou_char_exponent(s, 2.0, 0.0)) == 0.0);
  const Complex limit(-s.sigma * s.sigma * 1.5 * 1.5 / (4.0 * s.k), s.theta * 1.5);
  CHECK(std::abs(ou_char_exponent(s, INFINITY, 1.5) - limit) < 1e-15);
  for (double t : {0.01, 0.5, 3.0})
    for (double xi = -4.0; xi <= 4.0; xi += 0.25) {
      const auto m = ou_transition_moments(s, 0.0, t);
      CHECK(std::abs(ou_char_exponent(s, t, xi) - gaussian_log_cf(m.mean, m.var, xi)) < 1e-13);
    }
}

TEST_CASE("mou_char_exponent") {
  const double t = 0.7;
  const auto spec = two_factor(1.0, 1.0);
  const double c = (1.0 - std::exp(-2.0 * t)) / 4.0;
  for (double x1 : {-1.0, 0.3, 2.0})
    for (double x2 : {-0.5, 1.1}) {
      const Complex got = mou_char_exponent(spec, Eigen::Vector3d(t, t, t), Eigen::Vector2d(x1, x2));
      const double expected = -c * (x1 * x1 + x2 * x2) - c * (x1 + x2) * (x1 + x2);
      CHECK(std::abs(got - expected) < 1e-14);
    }

  FactorMOUSpec general;
  general.idio = {OUSpec{0.5, 1.0, 0.7, 0.0}, OUSpec{2.0, -0.5, 1.2, 0.0}, OUSpec{1.3, 0.0, 0.4, 0.0}};
  general.loadings = {0.0, 0.0, 0.0};
  const Eigen::Vector4d s(0.3, 1.2, 0.8, 2.0);
  const Eigen::Vector3d xi(0.4, -1.5, 2.2);
  Complex indep = 0.0;
  for (int j = 0; j < 3; ++j) indep += ou_char_exponent(general.idio[j], s[j], xi[j]);
  CHECK(mou_char_exponent(general, s, xi) == indep);

  general.loadings = {0.5, 1.0, 0.2};
  const Eigen::Vector3d e1(1.0, 0.0, 0.0);
  const Complex base = mou_char_exponent(general, s, e1);
  CHECK(mou_char_exponent(general, Eigen::Vector4d(0.3, 9.0, 0.01, 2.0), e1) == base);
  CHECK(mou_char_exponent(general, Eigen::Vector4d(0.3, 1.2, 0.8, 2.5), e1) != base);

  CHECK(std::abs(mou_char_exponent(general, s, Eigen::Vector3d::Zero())) == 0.0);
  for (double k = -3.0; k <= 3.0; k += 0.5) {
    const Eigen::Vector3d v = k * xi;
    const Complex p = mou_char_exponent(general, s, v), n = mou_char_exponent(general, s, -v);
    CHECK(p.real() <= 0.0);
    CHECK(std::abs(p - std::conj(n)) < 1e-15);
  }
}

TEST_CASE("scaled_marginal_params") {
  auto spec = two_factor(0.0, 0.0);
  spec.idio[0] = OUSpec{2.0, 0.5, 1.0, 0.0};
  spec.idio[1] = OUSpec{0.5, -1.0, 3.0, 0.0};
  auto m = scaled_marginal_params(spec);
  Eigen::MatrixXd sig = m.Sigma();
  CHECK(sig(0, 0) == Approx(0.5));
  CHECK(sig(1, 1) == Approx(18.0));
  CHECK(std::abs(sig(0, 1)) < 1e-14);
  CHECK(m.theta == Eigen::Vector2d(0.5, -1.0));
  CHECK(m.K.isIdentity());

  FactorMOUSpec three;
  three.idio.assign(3, OUSpec{1.0, 0.0, 1.0, 0.0});
  three.loadings = {1.0, 1.0, 1.0};
  sig = scaled_marginal_params(three).Sigma();
  for (int j = 0; j < 3; ++j)
    for (int h = 0; h < 3; ++h) CHECK(sig(j, h) == Approx(j == h ? 2.0 : 1.0).epsilon(1e-13));
  CHECK(scaled_marginal_volatility(three, 1) == Approx(std::sqrt(2.0)));

  spec.loadings = {0.4, 1.5};
  CHECK(scaled_marginal_volatility(spec, 1) == Approx(std::sqrt(9.0 / 0.5 + 2.25)));
  CHECK(std::sqrt(scaled_marginal_params(spec).Sigma()(1, 1)) == Approx(scaled_marginal_volatility(spec, 1)));

  spec.common.k = 2.0;
  CHECK_THROWS_AS(scaled_marginal_params(spec), DomainError);
}

TEST_CASE("scaled marginals by simulation through the factor construction") {
  FactorMOUSpec spec;
  spec.idio = {OUSpec{2.0, 0.0, 1.0, 0.0}, OUSpec{0.5, 0.0, 0.8, 0.0}};
  spec.loadings = {0.7, 1.2};
  spec.validate();
  const double t = 0.9;
  const std::size_t n = 100000;
  std::vector<double> v1(n), v2(n);
  const RngStream parent{11, 0};
  for (std::size_t i = 0; i < n; ++i) {
    Philox g(parent.substream(i));
    const double common = ou_sample_step(spec.common, 0.0, t, g);
    v1[i] = ou_sample_step(spec.idio[0], 0.0, t / spec.idio[0].k, g) + spec.loadings[0] * common;
    v2[i] = ou_sample_step(spec.idio[1], 0.0, t / spec.idio[1].k, g) + spec.loadings[1] * common;
  }
  const Eigen::MatrixXd expected = scaled_marginal_params(spec).Sigma() * (1.0 - std::exp(-2.0 * t)) / 2.0;
  const auto c00 = covariance_estimate(v1, v1), c01 = covariance_estimate(v1, v2), c11 = covariance_estimate(v2, v2);
  CHECK(std::abs(c00.value - expected(0, 0)) < 3.0 * c00.std_error);
  CHECK(std::abs(c01.value - expected(0, 1)) < 3.0 * c01.std_error);
  CHECK(std::abs(c11.value - expected(1, 1)) < 3.0 * c11.std_error);
}

TEST_CASE("mbm_char_exponent") {
  MultiparamBMSpec bm;
  bm.blocks.push_back(BrownianBlock{Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)});
  bm.validate();
  const Eigen::Vector2d xi(0.6, -1.3);
  CHECK(std::abs(mbm_char_exponent(bm, Eigen::VectorXd::Zero(1), xi)) == 0.0);
  CHECK(std::abs(mbm_char_exponent(bm, Eigen::VectorXd::Constant(1, 2.5), xi) - (-0.5 * 2.5 * xi.squaredNorm())) < 1e-14);

  Eigen::MatrixXd a2(2, 1);
  a2 << 1.0, 0.5;
  Eigen::MatrixXd s2(1, 1);
  s2 << 0.4;
  bm.blocks.push_back(BrownianBlock{a2, Eigen::VectorXd::Constant(1, 0.3), s2});
  bm.validate();
  const Eigen::Vector2d s(0.7, 1.9);
  const Complex full = mbm_char_exponent(bm, s, xi);
  const Complex b0 = mbm_char_exponent(bm, Eigen::Vector2d(0.7, 0.0), xi);
  const Complex b1 = mbm_char_exponent(bm, Eigen::Vector2d(0.0, 1.9), xi);
  CHECK(std::abs(full - (b0 + b1)) < 1e-14);
  CHECK(std::abs(mbm_char_exponent(bm, Eigen::Vector2d(0.0, 3.8), xi) - 2.0 * b1) < 1e-14);
  const double proj = xi[0] + 0.5 * xi[1];
  CHECK(std::abs(b1 - 1.9 * Complex(-0.5 * 0.4 * proj * proj, 0.3 * proj)) < 1e-14);

  Eigen::MatrixXd bad(1, 1);
  bad << -1.0;
  bm.blocks[1].Sigma = bad;
  CHECK_THROWS_AS(bm.validate(), DomainError);
  CHECK_THROWS_AS(mbm_char_exponent(bm, Eigen::VectorXd::Zero(3), xi), DomainError);
}
