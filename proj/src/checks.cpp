#include "addsub/checks.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "addsub/cli.hpp"
#include "addsub/config.hpp"
#include "addsub/subordinated.hpp"

namespace addsub {

namespace {

struct Outcome {
  bool passed;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::size_t scaled(double n, const CheckOptions& o) {
  return std::max<std::size_t>(1000, static_cast<std::size_t>(std::llround(n * o.scale)));
}

FactorMOUSpec two_factor(bool loaded) {
  FactorMOUSpec f;
  f.idio = {OUSpec{1.0, 0.0, 1.0, 0.0}, OUSpec{2.0, 1.0, 1.0, 0.0}};
  f.loadings = loaded ? std::vector<double>{1.0, 0.5} : std::vector<double>{0.0, 0.0};
  return f;
}

SatoSubordinatorSpec ig_sato(std::size_t m, double rho) {
  SatoSubordinatorSpec s;
  s.components.assign(m, TemperedStableSpec::inverse_gaussian(1.0, 1.0));
  s.rho = rho;
  s.t0 = 0.0;
  return s;
}

Outcome scaled_marginal_moments(const CheckOptions& o) {
  const FactorMOUSpec f = two_factor(true);
  const std::size_t n = scaled(1e5, o);
  const MatrixOUSpec marginal = scaled_marginal_params(f);
  Eigen::Matrix2d sigma_tilde;
  sigma_tilde << 1.0 + 1.0, 0.5, 0.5, 0.5 + 0.25;
  double worst_z = 0.0, worst_formula = 0.0;
  const std::array<double, 3> times{0.5, 1.0, 2.0};
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const double t = times[ti];
    const Eigen::Vector2d mean(0.0, 1.0 - std::exp(-t));
    const Eigen::Matrix2d cov = sigma_tilde * (-std::expm1(-2.0 * t)) / 2.0;
    const auto lib = matrix_ou_transition_moments(marginal, Eigen::VectorXd::Zero(2), t);
    worst_formula = std::max({worst_formula, (lib.mean - mean).cwiseAbs().maxCoeff(), (lib.cov - cov).cwiseAbs().maxCoeff()});

    std::vector<double> y1(n), y2(n);
    const RngStream rng{o.seed, 100 + ti};
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
      for (std::size_t p = begin; p < end; ++p) {
        Philox gen(rng.substream(p));
        const double u1 = ou_sample_step(f.idio[0], 0.0, t / f.idio[0].k, gen);
        const double u2 = ou_sample_step(f.idio[1], 0.0, t / f.idio[1].k, gen);
        const double u = ou_sample_step(f.common, 0.0, t, gen);
        y1[p] = u1 + f.loadings[0] * u;
        y2[p] = u2 + f.loadings[1] * u;
      }
    });
    const std::array<const std::vector<double>*, 2> ys{&y1, &y2};
    for (int j = 0; j < 2; ++j) {
      const auto m = summarize<double>(*ys[j]);
      worst_z = std::max(worst_z, std::abs(m.mean - mean(j)) / m.std_error);
      for (int h = j; h < 2; ++h) {
        const auto c = covariance_estimate(*ys[j], *ys[h]);
        worst_z = std::max(worst_z, std::abs(c.value - cov(j, h)) / c.std_error);
      }
    }
  }
  return {worst_z <= 3.0 && worst_formula <= 1e-12,
          fmt("n=%zu max|z|=%.3f closed-form mismatch=%.2e", n, worst_z, worst_formula)};
}

Outcome self_similarity(const CheckOptions& o) {
  const std::size_t n = scaled(1e5, o);
  const double ks = self_similarity_check(ig_sato(1, 1.5), 0, 2.0, n, RngStream{o.seed, 200});
  const double band = ks_critical(n, n, 0.01);
  return {ks < band, fmt("n=%zu KS=%.5f band=%.5f", n, ks, band)};
}

Outcome cf_composition(const CheckOptions&) {
  SatoSubordinatorSpec sub = ig_sato(1, 1.5);
  sub.components.push_back(TemperedStableSpec{0.3, 2.0, 0.7});
  sub.t0 = 0.1;
  double worst = 0.0;
  for (std::size_t j = 0; j < sub.size(); ++j) {
    const auto a = increment_law(sub, j, 0.0, 1.0), b = increment_law(sub, j, 1.0, 2.0), c = increment_law(sub, j, 0.0, 2.0);
    for (int i = 0; i < 50; ++i) {
      const double xi = -25.0 + 50.0 * i / 49.0;
      worst = std::max(worst, std::abs(a.cf(xi) * b.cf(xi) - c.cf(xi)));
    }
  }
  return {worst <= 1e-12, fmt("max|cf01*cf12-cf02|=%.2e over 50 frequencies", worst)};
}

Outcome cf_cross_validation(const CheckOptions& o) {
  const SubordinatedSpec model{two_factor(true), ig_sato(3, 1.5)};
  const std::size_t n = scaled(1e5, o);
  const LatentState state = initial_state(model);
  const Eigen::MatrixXd y = sample_terminal(model, {0.0, 1.0}, n, RngStream{o.seed, 400}, {}, &state);
  double worst = -1e300, worst_quad = 0.0;
  std::vector<Complex> z(n);
  for (int i = 0; i < 20; ++i) {
    const double r = 0.15 + 0.12 * i, phi = 0.9 * i;
    const Eigen::Vector2d xi(r * std::cos(phi), r * std::sin(phi));
    const CfEval analytic = cf_increment(model, 0.0, 1.0, state, xi);
    for (std::size_t p = 0; p < n; ++p) z[p] = std::exp(Complex(0.0, y.row(static_cast<Eigen::Index>(p)).dot(xi)));
    const auto emp = summarize<Complex>(z);
    worst_quad = std::max(worst_quad, analytic.error_estimate);
    worst = std::max(worst, std::abs(emp.mean - analytic.value) - (3.0 * emp.std_error + 1e-6));
  }
  return {worst <= 0.0 && worst_quad <= 1e-6,
          fmt("n=%zu worst excess over 3se+1e-6: %.2e, quadrature error<=%.1e", n, worst, worst_quad)};
}

Outcome levy_symbol(const CheckOptions&) {
  MultiparamBMSpec bm;
  bm.blocks.push_back(BrownianBlock{Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)});
  const double rho = 2.0;
  const SubordinatedSpec model{bm, ig_sato(1, rho)};
  const TemperedStableSpec ts = model.sub.at(0);
  const LatentState state = initial_state(model);
  double worst = 0.0;
  for (double t : {0.5, 1.0, 1.5, 2.0, 2.5}) {
    for (double x : {0.5, 1.0, 1.5, 2.0, 3.0}) {
      // -log E exp(-u S(t)) = -lam Gamma(-alpha) [(beta + t^rho u)^alpha - beta^alpha], differentiated in t at u = q.
      const double q = 0.5 * x * x, w = std::pow(t, rho) * q;
      const double psi_prime = -ts.lam * std::tgamma(-ts.alpha) * ts.alpha * std::pow(ts.beta + w, ts.alpha - 1.0);
      const double expected = rho * std::pow(t, rho - 1.0) * q * psi_prime;
      const Eigen::VectorXd xi = Eigen::VectorXd::Constant(1, x);
      for (auto m : {SymbolMethod::cf_derivative, SymbolMethod::triplet_integral})
        worst = std::max(worst, std::abs(symbol(model, t, state, xi, m).value - expected));
    }
  }
  return {worst <= 1e-5, fmt("max deviation from closed form %.2e on 5x5 grid", worst)};
}

Outcome generator(const CheckOptions& o) {
  FactorMOUSpec f;
  f.idio = {OUSpec{1.0, 0.0, 1.0, 0.0}};
  f.loadings = {0.0};
  const SubordinatedSpec model{f, ig_sato(2, 1.5)};
  LatentState state = initial_state(model);
  state.u(0) = 0.3;
  const double x = 0.3, t = 1.0;
  const std::size_t n = scaled(1e6, o);
  const auto fn = [](const Eigen::VectorXd& y) { return std::sin(y(0)); };
  const auto analytic = generator_apply(model, t, fn, state);

  const std::array<double, 3> hs{0.02, 0.01, 0.005};
  std::array<double, 3> d{}, se{};
  std::vector<double> v(n);
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double h = hs[i];
    const Eigen::MatrixXd y = sample_terminal(model, {t, t + h}, n, RngStream{o.seed, 600 + i}, {}, &state);
    for (std::size_t p = 0; p < n; ++p) v[p] = std::sin(y(static_cast<Eigen::Index>(p), 0)) - std::sin(x);
    const auto m = summarize<double>(v);
    d[i] = m.mean / h;
    se[i] = m.std_error / h;
  }
  const double richardson = (8.0 * d[2] - 6.0 * d[1] + d[0]) / 3.0;
  const double se_r = std::hypot(8.0 * se[2], 6.0 * se[1], se[0]) / 3.0;
  const double gap = std::abs(richardson - analytic.value);
  return {gap <= 3.0 * se_r + 1e-4 + analytic.error,
          fmt("n=%zu generator=%.6f extrapolated=%.6f gap=%.2e 3se=%.2e", n, analytic.value, richardson, gap, 3.0 * se_r)};
}

Outcome levy_density_derivative(const CheckOptions& o) {
  SatoSubordinatorSpec sub = ig_sato(1, 1.5);
  sub.components.push_back(TemperedStableSpec{0.7, 0.5, 2.0});
  sub.t0 = 0.1;
  Philox gen(RngStream{o.seed, 700});
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const std::size_t j = static_cast<std::size_t>(i % 2);
    const double t = 0.2 + 2.8 * gen.uniform();
    const double s = std::pow(10.0, -3.0 + 4.0 * gen.uniform());
    const auto num = finite_diff_derivative([&](double u) { return scaled_levy_density(sub, j, u, s); }, t, 0.0, 6);
    const double exact = levy_density_t(sub, j, t, s);
    worst = std::max(worst, std::abs(num.value - exact) / std::abs(exact));
  }
  return {worst <= 1e-7, fmt("max relative error %.2e at 20 random points", worst)};
}

Outcome bounded_variation(const CheckOptions&) {
  auto spec_for = [](double alpha) {
    FactorMOUSpec f;
    f.idio = {OUSpec{1.0, 0.0, 1.0, 0.0}};
    f.loadings = {0.0};
    SatoSubordinatorSpec sub;
    sub.components.assign(2, TemperedStableSpec{alpha, 1.0, 1.0});
    sub.rho = 1.5;
    return SubordinatedSpec{f, sub};
  };
  const auto low = bv_classify(spec_for(0.3));
  const auto high = bv_classify(spec_for(0.7));
  const bool low_ok = low.kind == Variation::bounded && low.witness_converged[0] && low.witness_converged[1];
  // Growth per decade: ratio of successive increments of the witness under cutoff refinement.
  double min_growth = INFINITY;
  const auto& w = high.witness[0];
  for (std::size_t i = 2; i < w.size(); ++i) min_growth = std::min(min_growth, (w[i] - w[i - 1]) / (w[i - 1] - w[i - 2]));
  const bool high_ok = high.kind == Variation::unbounded && !high.witness_converged[0] && min_growth >= 2.0;
  return {low_ok && high_ok,
          fmt("alpha=0.3: witness %.6f %s; alpha=0.7: witness %.3f at cutoff 1e-8, min growth per decade %.3f "
              "(need >= 2)",
              low.witness[0].back(), low_ok ? "converged" : "not converged", w.back(), min_growth)};
}

Outcome independence(const CheckOptions& o) {
  const SubordinatedSpec model{two_factor(false), ig_sato(3, 1.5)};
  const std::size_t n = scaled(1e5, o);
  const LatentState state = initial_state(model);
  const Eigen::MatrixXd y = sample_terminal(model, {0.0, 1.0}, n, RngStream{o.seed, 900}, {}, &state);
  std::vector<double> y1(n), y2(n);
  for (std::size_t p = 0; p < n; ++p) {
    y1[p] = y(static_cast<Eigen::Index>(p), 0);
    y2[p] = y(static_cast<Eigen::Index>(p), 1);
  }
  const auto r = correlation_estimate(y1, y2);
  double worst_z = std::abs(r.value) / r.std_error;
  const std::array<std::array<double, 2>, 5> grid{{{0.5, 0.5}, {1.0, -1.0}, {1.5, 0.7}, {-0.8, 2.0}, {2.0, 2.0}}};
  std::vector<Complex> z1(n), z2(n), z12(n), infl(n);
  for (const auto& xi : grid) {
    for (std::size_t p = 0; p < n; ++p) {
      z1[p] = std::exp(Complex(0.0, xi[0] * y1[p]));
      z2[p] = std::exp(Complex(0.0, xi[1] * y2[p]));
      z12[p] = z1[p] * z2[p];
    }
    const Complex m1 = summarize<Complex>(z1).mean, m2 = summarize<Complex>(z2).mean, m12 = summarize<Complex>(z12).mean;
    // Influence function of m12 - m1 m2 gives its delta-method standard error.
    for (std::size_t p = 0; p < n; ++p) infl[p] = z12[p] - m2 * z1[p] - m1 * z2[p];
    const double se = summarize<Complex>(infl).std_error;
    worst_z = std::max(worst_z, std::abs(m12 - m1 * m2) / se);
  }
  return {worst_z <= 3.0, fmt("n=%zu correlation=%.4f max|z|=%.3f", n, r.value, worst_z)};
}

Outcome determinism(const CheckOptions& o) {
  RunConfig cfg = demo_config();
  cfg.run.n_paths = 256;
  const auto path = std::filesystem::temp_directory_path() / ("addsub-determinism-" + std::to_string(::getpid()) + ".json");
  {
    std::ofstream f(path);
    f << serialize_config(cfg);
  }
  const char* saved = std::getenv("ADDSUB_THREADS");
  const std::string previous = saved ? saved : "";
  std::vector<std::string> outputs;
  int status = 0;
  for (const char* threads : {"1", "4", "1", "4"}) {
    ::setenv("ADDSUB_THREADS", threads, 1);
    std::ostringstream out, err;
    status |= run_cli({"simulate", "--config", path.string(), "--seed", std::to_string(o.seed)}, out, err);
    outputs.push_back(out.str());
  }
  if (saved) {
    ::setenv("ADDSUB_THREADS", previous.c_str(), 1);
  } else {
    ::unsetenv("ADDSUB_THREADS");
  }
  std::filesystem::remove(path);
  const bool same = std::all_of(outputs.begin(), outputs.end(), [&](const std::string& s) { return s == outputs[0]; });
  return {status == 0 && same && !outputs[0].empty(),
          fmt("%zu runs over 1 and 4 workers, %zu bytes each, %s", outputs.size(), outputs[0].size(),
              same ? "byte-identical" : "outputs differ")};
}

using CheckFn = Outcome (*)(const CheckOptions&);

constexpr std::array<CheckFn, 10> kChecks{scaled_marginal_moments, self_similarity, cf_composition,
                                          cf_cross_validation,     levy_symbol,     generator,
                                          levy_density_derivative, bounded_variation, independence,
                                          determinism};

}  // namespace

const std::vector<CheckInfo>& check_catalog() {
  static const std::vector<CheckInfo> catalog{
      {1, "scaled-marginal-moments", "ou", 30.0},   {2, "self-similarity", "subordinator", 10.0},
      {3, "cf-composition", "subordinator", 1.0},   {4, "cf-cross-validation", "cf", 60.0},
      {5, "levy-symbol", "symbol", 10.0},           {6, "generator", "generator", 120.0},
      {7, "levy-density-derivative", "subordinator", 1.0}, {8, "bounded-variation", "variation", 2.0},
      {9, "independence", "independence", 30.0},    {10, "determinism", "determinism", 10.0}};
  return catalog;
}

CheckResult run_check(int id, const CheckOptions& options) {
  if (id < 1 || id > static_cast<int>(kChecks.size())) throw DomainError("no check numbered " + std::to_string(id));
  if (!(options.scale > 0.0)) throw DomainError("check scale must be positive");
  const CheckInfo& info = check_catalog()[static_cast<std::size_t>(id - 1)];
  CheckResult r;
  r.id = id;
  r.name = info.name;
  r.group = info.group;
  r.budget = info.budget;
  const auto start = std::chrono::steady_clock::now();
  try {
    const Outcome out = kChecks[static_cast<std::size_t>(id - 1)](options);
    r.passed = out.passed;
    r.detail = out.detail;
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (r.seconds > r.budget) {
    r.passed = false;
    r.detail += fmt("; exceeded the %.0f s budget", r.budget);
  }
  return r;
}

std::vector<CheckResult> run_checks(const std::string& filter, const CheckOptions& options) {
  std::vector<CheckResult> out;
  for (const auto& info : check_catalog())
    if (filter.empty() || filter == info.group || filter == info.name || filter == std::to_string(info.id))
      out.push_back(run_check(info.id, options));
  if (out.empty()) throw DomainError("no check matches filter '" + filter + "'");
  return out;
}

}  // namespace addsub
