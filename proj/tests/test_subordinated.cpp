#include <cmath>
#include <numbers>

#include "addsub/errors.hpp"
#include "addsub/inversion.hpp"
#include "addsub/statistics.hpp"
#include "addsub/subordinated.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace addsub;
using doctest::Approx;

namespace {

SatoSubordinatorSpec ig_clock(std::size_t n, double rho, double t0 = 0.0, double lam = 1.0, double beta = 1.0) {
  SatoSubordinatorSpec sub;
  sub.components.assign(n, TemperedStableSpec::inverse_gaussian(lam, beta));
  sub.rho = rho;
  sub.t0 = t0;
  return sub;
}

SubordinatedSpec factor_spec(std::vector<OUSpec> idio, std::vector<double> loadings, SatoSubordinatorSpec sub) {
  FactorMOUSpec f;
  f.idio = std::move(idio);
  f.loadings = std::move(loadings);
  SubordinatedSpec spec{f, std::move(sub)};
  spec.validate();
  return spec;
}

SubordinatedSpec standard_bm(std::size_t d, SatoSubordinatorSpec sub) {
  MultiparamBMSpec bm;
  for (std::size_t j = 0; j < d; ++j) {
    const auto dd = static_cast<Eigen::Index>(d);
    bm.blocks.push_back(
        BrownianBlock{Eigen::MatrixXd(Eigen::VectorXd::Unit(dd, static_cast<Eigen::Index>(j))), Eigen::VectorXd::Zero(1),
                      Eigen::MatrixXd::Identity(1, 1)});
  }
  SubordinatedSpec spec{bm, std::move(sub)};
  spec.validate();
  return spec;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

LatentState state(const SubordinatedSpec& spec, std::initializer_list<double> u, double common = 0.0) {
  auto st = initial_state(spec);
  st.u = vec(u);
  st.u_common = common;
  return st;
}

}  // namespace

TEST_CASE("spec validation") {
  FactorMOUSpec f;
  f.idio = {OUSpec{}, OUSpec{}};
  f.loadings = {0.5, 0.5};
  SubordinatedSpec spec{f, ig_clock(2, 1.5)};
  CHECK_THROWS_AS(spec.validate(), DomainError);
  spec.sub = ig_clock(3, 1.5);
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.dim() == 2);
  CHECK(spec.parameter_count() == 3);
  CHECK_FALSE(spec.levy_base());
  const auto bm = standard_bm(2, ig_clock(2, 1.0));
  CHECK(bm.levy_base());
  CHECK(bm.parameter_count() == 2);
  CHECK(initial_state(bm).clock.size() == 2);
}

TEST_CASE("cf_increment basics") {
  const auto spec = factor_spec({OUSpec{1.0, 0.5, 1.0, 0.0}, OUSpec{2.0, -1.0, 0.5, 0.0}}, {0.7, 0.3}, ig_clock(3, 1.5));
  const auto st = state(spec, {0.2, -0.4}, 0.1);
  CHECK(cf_increment(spec, 1.0, 1.0, st, vec({1.0, -2.0})).value == Complex(1.0));
  CHECK(cf_increment(spec, 0.3, 1.7, st, vec({0.0, 0.0})).value == Complex(1.0));
  CHECK_THROWS_AS(cf_increment(spec, 2.0, 1.0, st, vec({1.0, 0.0})), DomainError);
  CHECK_THROWS_AS(cf_increment(spec, 0.0, 1.0, st, vec({1.0, 0.0}), CfMethod::closed_form), DomainError);
  const auto cf = cf_increment(spec, 0.5, 1.5, st, vec({0.8, 1.1}));
  CHECK(std::abs(cf.value) <= 1.0);
  const auto conj = cf_increment(spec, 0.5, 1.5, st, vec({-0.8, -1.1}));
  CHECK(std::abs(conj.value - std::conj(cf.value)) < 1e-9);
}

TEST_CASE("cf_increment: OU mixing integral against a Laplace series") {
  const OUSpec u1{1.0, 0.5, 1.0, 0.0}, u2{2.0, -1.0, 0.5, 0.0}, common{1.0, 0.0, 1.0, 0.0};
  const std::vector<double> a{0.7, 0.3};
  const auto sub = ig_clock(3, 1.5, 0.2, 1.3, 0.8);
  const auto spec = factor_spec({u1, u2}, a, sub);
  const auto st = state(spec, {0.2, -0.4}, 0.1);
  const auto& ts = sub.components[0];
  for (auto [t1, t2] : {std::pair{0.0, 1.0}, std::pair{0.5, 0.6}, std::pair{1.0, 3.0}}) {
    auto lap = [&](double u) {
      return std::exp(oracle::sato_increment_log_laplace(ts.alpha, ts.beta, ts.lam, sub.rho, sub.t0, t1, t2, u));
    };
    for (auto xi : {vec({1.0, 0.0}), vec({-0.5, 2.0}), vec({2.5, 1.5})}) {
      const Complex expected = oracle::ou_mixed_cf(lap, u1.k, u1.sigma, u1.theta, st.u[0], xi[0]) *
                               oracle::ou_mixed_cf(lap, u2.k, u2.sigma, u2.theta, st.u[1], xi[1]) *
                               oracle::ou_mixed_cf(lap, common.k, common.sigma, common.theta, st.u_common,
                                                   a[0] * xi[0] + a[1] * xi[1]);
      const auto got = cf_increment(spec, t1, t2, st, xi);
      CHECK(std::abs(got.value - expected) < 1e-8);
      CHECK(got.error_estimate < 1e-6);
    }
  }
}

TEST_CASE("cf_increment: Brownian base, quadrature against closed form") {
  const auto spec = standard_bm(1, ig_clock(1, 1.5));
  const auto st = initial_state(spec);
  for (double xi : {0.3, 1.0, 2.0, 4.0})
    for (auto [t1, t2] : {std::pair{0.0, 1.0}, std::pair{1.0, 1.01}, std::pair{0.5, 2.0}}) {
      const auto q = cf_increment(spec, t1, t2, st, vec({xi}));
      const auto c = cf_increment(spec, t1, t2, st, vec({xi}), CfMethod::closed_form);
      CHECK(std::abs(q.value - c.value) < 1e-6);
    }
  // Exact evolution identity in closed form.
  MultiparamBMSpec bm;
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 0.3, -0.2, 0.8;
  Eigen::MatrixXd s(2, 2);
  s << 1.0, 0.4, 0.4, 0.5;
  bm.blocks.push_back(BrownianBlock{a, vec({0.1, -0.2}), s});
  bm.blocks.push_back(BrownianBlock{Eigen::MatrixXd(vec({0.5, 1.0})), vec({0.3}), Eigen::MatrixXd::Constant(1, 1, 2.0)});
  SatoSubordinatorSpec sub{{TemperedStableSpec{0.3, 1.0, 1.0}, TemperedStableSpec::inverse_gaussian(1.0, 2.0)}, 0.8, 0.1};
  const SubordinatedSpec two{bm, sub};
  two.validate();
  const auto st2 = initial_state(two);
  for (double x = -3.0; x <= 3.0; x += 0.5) {
    const auto xi = vec({x, 0.7 * x - 0.2});
    const Complex lhs = cf_increment(two, 0.0, 1.0, st2, xi, CfMethod::closed_form).value *
                        cf_increment(two, 1.0, 2.0, st2, xi, CfMethod::closed_form).value;
    CHECK(std::abs(lhs - cf_increment(two, 0.0, 2.0, st2, xi, CfMethod::closed_form).value) < 1e-12);
  }
}

TEST_CASE("symbol: closed form for a Brownian base") {
  const auto spec = standard_bm(1, ig_clock(1, 2.0));
  const auto st = initial_state(spec);
  const auto q = symbol(spec, 1.0, st, vec({1.0}), SymbolMethod::levy_closed_form);
  CHECK(std::abs(q.value - Complex(1.0 / std::sqrt(2.0), 0.0)) < 1e-14);
  for (auto m : {SymbolMethod::levy_closed_form, SymbolMethod::triplet_integral, SymbolMethod::cf_derivative})
    CHECK(symbol(spec, 1.3, st, vec({0.0}), m).value == Complex(0.0));

  // The three routes agree.
  const auto drifted = [] {
    MultiparamBMSpec bm;
    bm.blocks.push_back(BrownianBlock{Eigen::MatrixXd::Constant(1, 1, 1.5), vec({0.4}), Eigen::MatrixXd::Constant(1, 1, 0.6)});
    SubordinatedSpec s{bm, SatoSubordinatorSpec{{TemperedStableSpec{0.3, 2.0, 1.0}}, 0.7, 0.1}};
    s.validate();
    return s;
  }();
  for (double t : {0.2, 1.0, 2.5})
    for (double xi : {-1.5, 0.5, 3.0}) {
      const auto c = symbol(drifted, t, initial_state(drifted), vec({xi}), SymbolMethod::levy_closed_form);
      const auto ti = symbol(drifted, t, initial_state(drifted), vec({xi}), SymbolMethod::triplet_integral);
      const auto fd = symbol(drifted, t, initial_state(drifted), vec({xi}), SymbolMethod::cf_derivative);
      CHECK(std::abs(c.value - ti.value) < 1e-6);
      CHECK(std::abs(c.value - fd.value) < 1e-5);
      CHECK(c.value.real() >= 0.0);
    }

  // d/dt log cf(s, t) = -q(t).
  const auto sub = drifted;
  for (double t : {0.5, 1.5}) {
    const auto d = finite_diff_derivative(
        [&](double tt) {
          return std::log(cf_increment(sub, 0.3, tt, initial_state(sub), vec({1.2}), CfMethod::closed_form).value);
        },
        t, 1e-3);
    CHECK(std::abs(d.value + symbol(sub, t, initial_state(sub), vec({1.2}), SymbolMethod::levy_closed_form).value) <
          1e-8);
  }
}

TEST_CASE("symbol: OU base, cf derivative against the Levy measure integral") {
  const auto spec = factor_spec({OUSpec{1.0, 0.5, 1.0, 0.0}}, {0.6}, ig_clock(2, 1.5));
  CHECK_THROWS_AS(symbol(spec, 1.0, initial_state(spec), vec({1.0}), SymbolMethod::levy_closed_form), DomainError);
  const std::vector<std::tuple<double, double, double>> grid{
      {0.5, 1.0, 0.0}, {1.0, -0.7, 0.3}, {1.5, 2.0, -0.5}, {2.0, 0.4, 1.0}, {0.8, -2.5, 0.2}};
  for (auto [t, xi, x] : grid) {
    const auto st = state(spec, {x}, -0.2);
    const auto a = symbol(spec, t, st, vec({xi}), SymbolMethod::cf_derivative);
    const auto b = symbol(spec, t, st, vec({xi}), SymbolMethod::triplet_integral);
    CHECK(std::abs(a.value - b.value) <= std::max(1e-5, a.error_estimate + b.error_estimate));
  }
}

TEST_CASE("symbol is negative definite in xi") {
  const auto spec = factor_spec({OUSpec{1.0, 0.5, 1.0, 0.0}}, {0.0}, ig_clock(2, 1.5));
  const auto st = state(spec, {0.8});
  const std::vector<double> pts{-1.3, 0.2, 0.9, 2.4};
  auto q = [&](double xi) { return symbol(spec, 1.0, st, vec({xi}), SymbolMethod::triplet_integral).value; };
  Eigen::MatrixXcd m(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m(i, j) = q(pts[i]) + std::conj(q(pts[j])) - q(pts[i] - pts[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()));
  CHECK(es.eigenvalues().minCoeff() > -1e-8);
  CHECK((m - m.adjoint()).norm() < 1e-8);
}

TEST_CASE("triplet") {
  const auto sym = factor_spec({OUSpec{1.0, 0.0, 1.0, 0.0}}, {0.0}, ig_clock(2, 1.5));
  const auto tri = triplet(sym, 1.0, initial_state(sym));
  CHECK(tri.Sigma().isZero(0.0));
  CHECK(tri.gamma().norm() == 0.0);

  const auto spec = factor_spec({OUSpec{1.5, 0.5, 0.8, 0.0}, OUSpec{1.0, 0.0, 1.2, 0.0}}, {0.6, 0.9},
                                SatoSubordinatorSpec{{TemperedStableSpec{0.5, 1.0, 1.0}, TemperedStableSpec{0.5, 1.0, 1.0},
                                                      TemperedStableSpec{0.5, 1.0, 1.0}},
                                                     1.2, 0.0});
  const auto st = state(spec, {-0.4, 0.3}, 0.2);
  const auto t = triplet(spec, 1.0, st);
  CHECK(t.components() == 3);
  CHECK((t.direction(2) - vec({0.6, 0.9})).norm() == 0.0);

  // Infinite activity: the mass beyond a cutoff keeps growing as the cutoff shrinks.
  const double m3 = t.truncated_mass(0, 1e-3), m6 = t.truncated_mass(0, 1e-6), m9 = t.truncated_mass(0, 1e-9);
  CHECK(m6 > 10.0 * m3);
  CHECK(m9 > 10.0 * m6);

  // Nested-quadrature oracles for the compensator and the (1 ^ |y|^2) moment.
  const auto& sub = spec.sub;
  auto inner = [&](std::size_t c, double s, double r, auto&& h) {
    const double xs[] = {st.u[0], st.u[1], st.u_common}, ks[] = {1.5, 1.0, 1.0}, thetas[] = {0.5, 0.0, 0.0},
                 sigmas[] = {0.8, 1.2, 1.0};
    const double x = xs[c], k = ks[c], theta = thetas[c], sigma = sigmas[c];
    const double m = std::expm1(-k * s) * (x - theta), v = sigma * sigma * -std::expm1(-2.0 * k * s) / (2.0 * k);
    const double sd = std::sqrt(v);
    return integrate([&](double z) { return h(m + sd * z) * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); },
                     -INFINITY, INFINITY, QuadratureSpec{QuadratureKind::adaptive_interval, 1e-12, 1e-10, 200000},
                     std::vector<double>{-(r + m) / sd, (r - m) / sd})
        .value;
  };
  auto outer = [&](std::size_t c, double r, auto&& h) {
    return integrate([&](double s) { return inner(c, s, r, h) * levy_density_t(sub, c, 1.0, s); }, 0.0, INFINITY,
                     QuadratureSpec{QuadratureKind::adaptive_interval, 1e-9, 1e-8, 400000},
                     std::vector<double>{1e-8, 1e-6, 1e-4, 1e-2, 1.0})
        .value;
  };
  const double g0 = outer(0, 1.0, [](double z) { return std::abs(z) <= 1.0 ? z : 0.0; });
  const double ra = 1.0 / std::hypot(0.6, 0.9);
  const double gc = outer(2, ra, [&](double z) { return std::abs(z) <= ra ? z : 0.0; });
  CHECK(t.gamma()[0] == Approx(g0 + 0.6 * gc).epsilon(1e-6));
  const double g1 = outer(1, 1.0, [](double z) { return std::abs(z) <= 1.0 ? z : 0.0; });
  CHECK(t.gamma()[1] == Approx(g1 + 0.9 * gc).epsilon(1e-6));
  const double sj0 = outer(0, 1.0, [](double z) { return std::min(1.0, z * z); });
  const auto moment = t.small_jump_moment(0);
  CHECK(std::isfinite(moment.value));
  CHECK(moment.value == Approx(sj0).epsilon(1e-5));

  // The density along the idiosyncratic line integrates to the same moment.
  const auto via_density = integrate([&](double z) { return std::min(1.0, z * z) * t.nu_density(0, z); }, -INFINITY,
                                     INFINITY, QuadratureSpec{QuadratureKind::adaptive_interval, 1e-7, 1e-5, 20000},
                                     std::vector<double>{-1.0, 0.0, 1.0});
  CHECK(via_density.value == Approx(moment.value).epsilon(1e-3));
  CHECK(t.nu_density(0, 0.3) > 0.0);
}

TEST_CASE("generator_apply") {
  const auto spec = factor_spec({OUSpec{1.5, 0.5, 0.8, 0.0}, OUSpec{1.0, 0.0, 1.2, 0.0}}, {0.6, 0.9}, ig_clock(3, 1.2));
  const auto st = state(spec, {-0.4, 0.3}, 0.2);
  const auto one = generator_apply(spec, 1.0, [](const Eigen::VectorXd&) { return 1.0; }, st);
  CHECK(one.value == 0.0);

  // On Fourier modes the generator multiplies by -q.
  const Eigen::VectorXd xi = vec({0.8, -0.5});
  const Eigen::VectorXd y = observed_value(spec, st);
  const Complex q = symbol(spec, 1.0, st, xi, SymbolMethod::triplet_integral).value;
  const Complex expected = -std::exp(Complex(0.0, xi.dot(y))) * q;
  const auto c = generator_apply(spec, 1.0, [&](const Eigen::VectorXd& v) { return std::cos(xi.dot(v)); }, st);
  const auto s = generator_apply(spec, 1.0, [&](const Eigen::VectorXd& v) { return std::sin(xi.dot(v)); }, st);
  CHECK(std::abs(c.value - expected.real()) < 1e-8);
  CHECK(std::abs(s.value - expected.imag()) < 1e-8);

  // Symmetric setting: odd test functions have zero generator at the centre, as does the compensator.
  const auto sym = factor_spec({OUSpec{1.0, 0.0, 1.0, 0.0}}, {0.0}, ig_clock(2, 1.5));
  const auto centre = initial_state(sym);
  CHECK(std::abs(generator_apply(sym, 1.0, [](const Eigen::VectorXd& v) { return std::tanh(v[0]); }, centre).value) <
        1e-12);
  CHECK(triplet(sym, 1.0, centre).gamma().norm() == 0.0);

  MultiparamBMSpec wide;
  wide.blocks.push_back(BrownianBlock{Eigen::MatrixXd::Identity(2, 2), vec({0.0, 0.0}), Eigen::MatrixXd::Identity(2, 2)});
  const SubordinatedSpec w{wide, ig_clock(1, 1.0)};
  CHECK_THROWS_AS(generator_apply(w, 1.0, [](const Eigen::VectorXd&) { return 1.0; }, initial_state(w)), DomainError);
}

TEST_CASE("bv_classify") {
  auto with_alpha = [](double alpha) {
    return standard_bm(1, SatoSubordinatorSpec{{TemperedStableSpec{alpha, 1.0, 1.0}}, 1.0, 0.0});
  };
  const auto low = bv_classify(with_alpha(0.3));
  CHECK(low.kind == Variation::bounded);
  CHECK_FALSE(low.boundary);
  CHECK(low.witness_converged[0]);
  const auto high = bv_classify(with_alpha(0.7));
  CHECK(high.kind == Variation::unbounded);
  CHECK_FALSE(high.witness_converged[0]);
  CHECK(high.witness[0].back() > 10.0 * high.witness[0].front());
  const auto edge = bv_classify(with_alpha(0.5));
  CHECK(edge.kind == Variation::unbounded);
  CHECK(edge.boundary);
  // Divergence rate of the witness: c^{1/2 - alpha} per decade.
  const auto& w = high.witness[0];
  const double ratio = (w[7] - w[6]) / (w[6] - w[5]);
  CHECK(ratio == Approx(std::pow(10.0, 0.2)).epsilon(1e-3));
}

TEST_CASE("sample_paths structure and determinism") {
  const auto spec = factor_spec({OUSpec{1.0, 0.5, 1.0, 0.0}, OUSpec{2.0, -1.0, 0.5, 0.0}}, {0.7, 0.3}, ig_clock(3, 1.5));
  const std::vector<double> grid{0.0, 0.25, 0.5, 1.0, 2.0};
  const auto paths = sample_paths(spec, grid, 10, RngStream{42, 0});
  REQUIRE(paths.size() == 10);
  for (const auto& p : paths) {
    CHECK(p.observed_paths.rows() == 2);
    CHECK(p.observed_paths.cols() == 5);
    CHECK(p.subordinator_paths.rows() == 3);
    CHECK(p.latent_paths.rows() == 3);
    CHECK(p.subordinator_paths.col(0).isZero(0.0));
    for (Eigen::Index i = 1; i < 5; ++i) {
      CHECK((p.subordinator_paths.col(i).array() >= p.subordinator_paths.col(i - 1).array()).all());
      for (Eigen::Index j = 0; j < 2; ++j)
        CHECK(p.observed_paths(j, i) == p.latent_paths(j, i) + (j == 0 ? 0.7 : 0.3) * p.latent_paths(2, i));
    }
  }
  const auto again = sample_paths(spec, grid, 10, RngStream{42, 0});
  for (std::size_t i = 0; i < 10; ++i) CHECK(again[i].observed_paths == paths[i].observed_paths);
  const auto terminal = sample_terminal(spec, grid, 10, RngStream{42, 0});
  for (Eigen::Index i = 0; i < 10; ++i) CHECK(terminal.row(i).transpose() == paths[i].observed_paths.col(4));

  CHECK_THROWS_AS(sample_paths(spec, {0.0, 1.0, 1.0}, 2, RngStream{}), DomainError);
  CHECK_THROWS_AS(sample_paths(spec, {-1.0, 1.0}, 2, RngStream{}), DomainError);
  CHECK_THROWS_AS(sample_paths(spec, grid, 0, RngStream{}), DomainError);

  auto start = initial_state(spec);
  start.u = vec({1.0, -1.0});
  start.clock = vec({0.1, 0.2, 0.3});
  const auto from = sample_paths(spec, {1.0, 1.5}, 3, RngStream{1, 0}, {}, &start);
  CHECK(from[0].observed_paths.col(0) == vec({1.0, -1.0}));
  CHECK(from[0].subordinator_paths.col(0) == start.clock);
}

TEST_CASE("simulation against analytic laws") {
  // Nearly deterministic clocks with E S(t) = t^rho: Y follows the OU mean under the mean clock.
  const double rho = 1.5, lam = 400.0, beta = lam * lam;  // IG with mean 1 and variance 1 / lam^2
  const auto tight = factor_spec({OUSpec{1.0, 1.0, 0.5, 0.0}}, {0.0}, ig_clock(2, rho, 0.0, lam, beta));
  const std::size_t n = 20000;
  const auto y = sample_terminal(tight, {0.0, 0.5, 1.2}, n, RngStream{7, 0});
  std::vector<double> col(y.col(0).data(), y.col(0).data() + n);
  const auto est = summarize<double>(col);
  const double expected = 1.0 - std::exp(-std::pow(1.2, rho));
  CHECK(std::abs(est.mean - expected) < 3.0 * est.std_error + 1e-3);

  // Zero loadings: coordinates are independent.
  const auto indep = factor_spec({OUSpec{1.0, 0.0, 1.0, 0.0}, OUSpec{0.5, 0.3, 2.0, 0.0}}, {0.0, 0.0}, ig_clock(3, 1.5));
  const auto z = sample_terminal(indep, {0.0, 1.0}, 50000, RngStream{8, 0});
  std::vector<double> a(z.col(0).data(), z.col(0).data() + z.rows()), b(z.col(1).data(), z.col(1).data() + z.rows());
  const auto r = correlation_estimate(a, b);
  CHECK(std::abs(r.value) < 3.0 * r.std_error);

  // One step, d = 1, a = 0: Y(t) against the distribution function from CF inversion.
  const auto one = factor_spec({OUSpec{1.0, 0.0, 1.0, 0.0}}, {0.0}, ig_clock(2, 1.5));
  const auto& ts = one.sub.components[0];
  auto lap = [&](double u) {
    return std::exp(oracle::sato_increment_log_laplace(ts.alpha, ts.beta, ts.lam, 1.5, 0.0, 0.0, 1.0, u));
  };
  const CharacteristicFunction phi = [&](double xi) { return oracle::ou_mixed_cf(lap, 1.0, 1.0, 0.0, 0.0, xi); };
  const auto draws = sample_terminal(one, {0.0, 1.0}, 100000, RngStream{9, 0});
  std::vector<double> sorted(draws.col(0).data(), draws.col(0).data() + draws.rows());
  std::sort(sorted.begin(), sorted.end());
  // Y has an atom-free law with no lower bound; shift to apply the one-sided inversion.
  double worst = 0.0;
  const double truncation = default_truncation(phi);
  for (double q = 0.05; q < 1.0; q += 0.05) {
    const double x = sorted[static_cast<std::size_t>(q * sorted.size())];
    const double emp = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) /
                       static_cast<double>(sorted.size());
    worst = std::max(worst, std::abs(emp - invert_cf_to_cdf(phi, x, truncation).value));
  }
  CHECK(worst < ks_critical(sorted.size()));
}

TEST_CASE("term_structure") {
  const auto indep = factor_spec({OUSpec{1.0, 0.0, 1.0, 0.0}, OUSpec{0.5, 0.3, 2.0, 0.0}}, {0.0, 0.0}, ig_clock(3, 1.0));
  const auto rows = term_structure(indep, {0.5, 1.0, 2.0}, 20000, RngStream{12, 0});
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK(std::abs(r.corr(0, 1)) < 3.0 * r.corr_error(0, 1));

  // Long horizon with nearly deterministic clocks: the stationary covariance of the scaled marginals.
  FactorMOUSpec f;
  f.idio = {OUSpec{1.0, 0.0, 1.0, 0.0}, OUSpec{2.0, 1.0, 1.0, 0.0}};
  f.loadings = {1.0, 0.5};
  const SubordinatedSpec tight{f, ig_clock(3, 1.0, 0.0, 400.0, 160000.0)};
  const auto far = term_structure(tight, {8.0}, 40000, RngStream{13, 0});
  const Eigen::MatrixXd stationary = 0.5 * scaled_marginal_params(f).Sigma();
  // Idiosyncratic clocks run at rate 1 here, so the idiosyncratic variance is sigma^2 / (2k).
  Eigen::MatrixXd expected(2, 2);
  expected << 0.5 + 0.5, 0.25, 0.25, 0.25 + 0.125;
  CHECK(stationary(0, 1) == Approx(expected(0, 1)));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(std::abs(far[0].cov(i, j) - expected(i, j)) < 3.0 * far[0].cov_error(i, j) + 1e-3);

  // Larger rho delays the clock before t = 1 and speeds it up after.
  const auto slow = term_structure(factor_spec({OUSpec{1.0, 0.0, 1.0, 0.0}}, {0.0}, ig_clock(2, 1.0)), {0.5, 2.0}, 20000,
                                   RngStream{14, 0});
  const auto fast = term_structure(factor_spec({OUSpec{1.0, 0.0, 1.0, 0.0}}, {0.0}, ig_clock(2, 2.0)), {0.5, 2.0}, 20000,
                                   RngStream{14, 0});
  CHECK(fast[0].cov(0, 0) < slow[0].cov(0, 0));
  CHECK(fast[1].cov(0, 0) > slow[1].cov(0, 0));
  CHECK_THROWS_AS(term_structure(indep, {0.0, 1.0}, 10, RngStream{}), DomainError);
}
