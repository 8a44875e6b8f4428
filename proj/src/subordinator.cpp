#include "addsub/subordinator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "addsub/errors.hpp"
#include "addsub/inversion.hpp"
#include "addsub/parallel.hpp"
#include "addsub/statistics.hpp"

namespace addsub {

namespace {

double gamma_neg_alpha(double alpha) { return std::tgamma(-alpha); }

}  // namespace

void TemperedStableSpec::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    std::ostringstream msg;
    msg << "tempered stable alpha must lie in (0, 1), got " << alpha;
    throw DomainError(msg.str());
  }
  if (!(beta > 0.0)) throw DomainError("tempered stable beta must be positive");
  if (!(lam > 0.0)) throw DomainError("tempered stable lam must be positive");
}

TemperedStableSpec TemperedStableSpec::inverse_gaussian(double lam, double beta) {
  // -lam [sqrt(beta - 2w) - sqrt(beta)] = -lam sqrt(2) [sqrt(beta/2 - w) - sqrt(beta/2)]
  // and Gamma(-1/2) = -2 sqrt(pi).
  TemperedStableSpec s{0.5, 0.5 * beta, lam / std::sqrt(2.0 * std::numbers::pi)};
  s.validate();
  return s;
}

double TemperedStableSpec::mean() const { return lam * std::tgamma(1.0 - alpha) * std::pow(beta, alpha - 1.0); }

double TemperedStableSpec::variance() const {
  return lam * std::tgamma(2.0 - alpha) * std::pow(beta, alpha - 2.0);
}

void SatoSubordinatorSpec::validate() const {
  if (components.empty()) throw DomainError("subordinator needs at least one component");
  for (const auto& c : components) c.validate();
  if (!(rho > 0.0)) throw DomainError("self-similarity exponent rho must be positive");
  if (!(t0 >= 0.0)) throw DomainError("regularization offset t0 must be non-negative");
  if (rho < 1.0 && !(t0 > 0.0)) throw DomainError("rho < 1 requires a regularization offset t0 > 0");
}

const TemperedStableSpec& SatoSubordinatorSpec::at(std::size_t j) const {
  if (j >= components.size()) throw DomainError("subordinator component index out of range");
  return components[j];
}

double SatoSubordinatorSpec::default_t0(double rho) { return rho < 1.0 ? 0.1 : 0.0; }

Complex etas_exponent(const TemperedStableSpec& spec, Complex w) {
  const double ba = std::pow(spec.beta, spec.alpha);
  return spec.lam * gamma_neg_alpha(spec.alpha) * ba * expm1_c(spec.alpha * log1p_c(-w / spec.beta));
}

Complex etas_exponent_derivative(const TemperedStableSpec& spec, Complex w) {
  return spec.lam * std::tgamma(1.0 - spec.alpha) * std::pow(Complex(spec.beta) - w, spec.alpha - 1.0);
}

Complex etas_log_cf(const TemperedStableSpec& spec, double xi) { return etas_exponent(spec, Complex(0.0, xi)); }

Complex sato_exponent(const SatoSubordinatorSpec& sub, std::size_t j, double t, Complex w) {
  if (t < 0.0) throw DomainError("Sato marginal needs t >= 0");
  const auto& c = sub.at(j);
  const Complex upper = etas_exponent(c, std::pow(t + sub.t0, sub.rho) * w);
  if (sub.t0 == 0.0) return upper;
  return upper - etas_exponent(c, std::pow(sub.t0, sub.rho) * w);
}

Complex sato_exponent_dt(const SatoSubordinatorSpec& sub, std::size_t j, double t, Complex w) {
  const double tt = t + sub.t0;
  if (!(tt > 0.0)) throw DomainError("Sato exponent derivative needs t + t0 > 0");
  return sub.rho * std::pow(tt, sub.rho - 1.0) * w *
         etas_exponent_derivative(sub.at(j), std::pow(tt, sub.rho) * w);
}

Complex sato_marginal_cf(const SatoSubordinatorSpec& sub, std::size_t j, double t, double xi) {
  return std::exp(sato_exponent(sub, j, t, Complex(0.0, xi)));
}

IncrementLaw::IncrementLaw(const SatoSubordinatorSpec& sub, std::size_t j, double t1, double t2)
    : law_(sub.at(j)), component_(j), t1_(t1), t2_(t2) {
  if (t1 < 0.0) throw DomainError("increment law needs t1 >= 0");
  if (t1 > t2) throw DomainError("increment law needs t1 <= t2");
  scale1_ = std::pow(t1 + sub.t0, sub.rho);
  scale2_ = std::pow(t2 + sub.t0, sub.rho);
  if (!degenerate() && std::sqrt(variance()) < 0.25 * mean())
    cf_truncation_ = default_truncation([this](double xi) { return cf(xi); }, 1e-13);
}

Complex IncrementLaw::exponent(Complex w) const {
  if (degenerate()) return 0.0;
  return etas_exponent(law_, scale2_ * w) - etas_exponent(law_, scale1_ * w);
}

Complex IncrementLaw::cf(double xi) const { return std::exp(exponent(Complex(0.0, xi))); }

CharacteristicFunction IncrementLaw::centred_cf() const {
  const double m = mean();
  return [this, m](double xi) { return std::exp(exponent(Complex(0.0, xi)) - Complex(0.0, xi * m)); };
}

Complex IncrementLaw::laplace(Complex u) const { return std::exp(exponent(-u)); }

double IncrementLaw::mean() const { return (scale2_ - scale1_) * law_.mean(); }

double IncrementLaw::variance() const { return (scale2_ * scale2_ - scale1_ * scale1_) * law_.variance(); }

double IncrementLaw::tail_rate() const { return law_.beta / scale2_; }

double IncrementLaw::cdf(double x) const {
  if (x < 0.0) return 0.0;
  if (degenerate()) return 1.0;
  if (x == 0.0) return 0.0;
  if (cf_truncation_ > 0.0)
    return std::clamp(invert_cf_to_cdf(centred_cf(), x - mean(), cf_truncation_).value, 0.0, 1.0);
  return talbot_inversion([this](Complex u) { return laplace(u) / u; }, x);
}

double IncrementLaw::survival(double x) const {
  if (x < 0.0) return 1.0;
  if (degenerate()) return 0.0;
  if (x == 0.0) return 1.0;
  if (cf_truncation_ > 0.0) return 1.0 - cdf(x);
  return talbot_inversion([this](Complex u) { return -expm1_c(exponent(-u)) / u; }, x);
}

double IncrementLaw::density(double x) const {
  if (x <= 0.0 || degenerate()) return 0.0;
  if (cf_truncation_ > 0.0)
    return std::max(invert_cf_to_density(centred_cf(), x - mean(), cf_truncation_).value, 0.0);
  return talbot_inversion([this](Complex u) { return laplace(u); }, x);
}

IncrementLaw increment_law(const SatoSubordinatorSpec& sub, std::size_t j, double t1, double t2) {
  return IncrementLaw(sub, j, t1, t2);
}

double scaled_levy_density(const SatoSubordinatorSpec& sub, std::size_t j, double t, double s) {
  if (!(s > 0.0)) throw DomainError("Levy density needs s > 0");
  const auto& c = sub.at(j);
  const double tt = t + sub.t0;
  return c.lam * std::pow(tt, sub.rho * c.alpha) * std::exp(-c.beta * s * std::pow(tt, -sub.rho)) *
         std::pow(s, -1.0 - c.alpha);
}

double levy_density_t(const SatoSubordinatorSpec& sub, std::size_t j, double t, double s) {
  if (!(s > 0.0)) throw DomainError("Levy density needs s > 0");
  if (t < 0.0) throw DomainError("Levy density needs t >= 0");
  const auto& c = sub.at(j);
  const double tt = t + sub.t0;
  if (!(tt > 0.0)) throw DomainError("Levy density needs t + t0 > 0");
  const double bs = c.beta * s * std::pow(tt, -sub.rho);
  return c.lam * sub.rho * std::pow(tt, c.alpha * sub.rho - 1.0) * (bs + c.alpha) * std::pow(s, -c.alpha - 1.0) *
         std::exp(-bs);
}

double sample_positive_stable(double alpha, Philox& gen) {
  const double u = std::numbers::pi * gen.uniform();
  const double e = gen.exponential();
  return std::sin(alpha * u) / std::pow(std::sin(u), 1.0 / alpha) *
         std::pow(std::sin((1.0 - alpha) * u) / e, (1.0 - alpha) / alpha);
}

double sample_tempered_stable(double alpha, double b, double mass, Philox& gen) {
  // Untempered law: E e^{-uX} = exp(-mass |Gamma(-alpha)| u^alpha).
  const double scale = std::pow(mass * std::tgamma(1.0 - alpha) / alpha, 1.0 / alpha);
  for (;;) {
    const double x = scale * sample_positive_stable(alpha, gen);
    if (gen.uniform() <= std::exp(-b * x)) return x;
  }
}

namespace {

// Grid for the tabulated CDF: geometric over the whole support plus a
// uniform patch around the bulk so that concentrated laws stay resolved.
std::vector<double> quantile_grid(const IncrementLaw& law) {
  const double m = law.mean();
  const double sd = std::sqrt(law.variance());
  // Nearly Gaussian laws carry no mass far below the mean.
  double lo = sd < 0.25 * m && m > 12.0 * sd ? m - 12.0 * sd : std::max(m, sd) * 1e-3;
  for (int i = 0; i < 30 && law.cdf(lo) > 1e-11; ++i) lo *= 0.1;
  double hi = m + 10.0 * sd;
  for (int i = 0; i < 200 && law.survival(hi) > 1e-11; ++i) hi += 5.0 / law.tail_rate() + sd;
  std::vector<double> grid;
  const double ratio = 1.04;
  for (double x = lo; x < hi; x *= ratio) grid.push_back(x);
  grid.push_back(hi);
  const double a = std::max(lo, m - 12.0 * sd), b = std::min(hi, m + 12.0 * sd);
  if (b > a) {
    const int n = 193;
    for (int i = 0; i < n; ++i) grid.push_back(a + (b - a) * i / (n - 1));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [](double p, double q) { return std::abs(p - q) <= 1e-12 * std::abs(q); }),
             grid.end());
  return grid;
}

double hermite(double x0, double x1, double f0, double f1, double d0, double d1, double x) {
  const double h = x1 - x0;
  const double t = (x - x0) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * h * d1;
}

}  // namespace

IncrementSampler::IncrementSampler(const SatoSubordinatorSpec& sub, std::size_t j, double t1, double t2,
                                   SamplerMethod method)
    : sub_(sub), component_(j), t1_(t1), t2_(t2), method_(method) {
  sub_.validate();
  const IncrementLaw law(sub_, j, t1, t2);
  degenerate_ = law.degenerate();
  if (method_.kind == SamplerKind::frozen_levy && method_.substeps < 1)
    throw DomainError("frozen-levy sampler needs at least one substep");
  if (degenerate_ || method_.kind != SamplerKind::inverse_cdf) return;

  x_ = quantile_grid(law);
  const std::size_t n = x_.size();
  cdf_.resize(n);
  slope_.resize(n);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      cdf_[i] = std::clamp(law.cdf(x_[i]), 0.0, 1.0);
      slope_[i] = std::max(law.density(x_[i]), 0.0);
    }
  });
  for (std::size_t i = 1; i < n; ++i) cdf_[i] = std::max(cdf_[i], cdf_[i - 1]);
  // Fritsch-Carlson limiter keeps each Hermite piece monotone.
  for (std::size_t i = 0; i < n; ++i) {
    double limit = std::numeric_limits<double>::infinity();
    if (i > 0) limit = std::min(limit, 3.0 * (cdf_[i] - cdf_[i - 1]) / (x_[i] - x_[i - 1]));
    if (i + 1 < n) limit = std::min(limit, 3.0 * (cdf_[i + 1] - cdf_[i]) / (x_[i + 1] - x_[i]));
    slope_[i] = std::min(slope_[i], limit);
  }
  tail_rate_ = law.tail_rate();
}

double IncrementSampler::quantile(double u) const {
  if (degenerate_) return 0.0;
  if (x_.empty()) throw DomainError("quantile is only available for the inverse-cdf sampler");
  if (u <= cdf_.front()) return cdf_.front() > 0.0 ? x_.front() * u / cdf_.front() : x_.front();
  if (u >= cdf_.back()) {
    const double tail = 1.0 - cdf_.back();
    if (tail <= 0.0 || u >= 1.0) return x_.back();
    return x_.back() + std::log(tail / (1.0 - u)) / tail_rate_;
  }
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const std::size_t i = static_cast<std::size_t>(it - cdf_.begin()) - 1;
  double lo = x_[i], hi = x_[i + 1];
  const double f0 = cdf_[i], f1 = cdf_[i + 1];
  const double d0 = slope_[i], d1 = slope_[i + 1];
  if (f1 <= f0) return lo;
  // Safeguarded Newton on the monotone cubic piece.
  double x = lo + (hi - lo) * (u - f0) / (f1 - f0);
  for (int iter = 0; iter < 60; ++iter) {
    const double v = hermite(x_[i], x_[i + 1], f0, f1, d0, d1, x) - u;
    if (v > 0.0) hi = x; else lo = x;
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double dv = (6 * t * t - 6 * t) * (f0 - f1) / h + (3 * t * t - 4 * t + 1) * d0 + (3 * t * t - 2 * t) * d1;
    double next = dv > 0.0 ? x - v / dv : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-14 * std::max(1.0, std::abs(x))) return next;
    x = next;
  }
  return x;
}

double IncrementSampler::draw_frozen(Philox& gen) const {
  const auto& c = sub_.at(component_);
  const int n = method_.substeps;
  const double dt = (t2_ - t1_) / n;
  const double g1 = std::tgamma(1.0 - c.alpha);
  double total = 0.0;
  for (int h = 0; h < n; ++h) {
    // Levy measure frozen at the left endpoint of the substep; at the very
    // origin of an unregularized clock the measure is degenerate, so the
    // right endpoint is used instead.
    double tau = t1_ + h * dt + sub_.t0;
    if (!(tau > 0.0)) tau = t1_ + (h + 1) * dt + sub_.t0;
    const double b = c.beta * std::pow(tau, -sub_.rho);
    const double front = c.lam * sub_.rho * std::pow(tau, c.alpha * sub_.rho - 1.0) * dt;
    // nu(tau, s) = front [alpha s^{-1-alpha} + b s^{-alpha}] e^{-b s}
    total += sample_tempered_stable(c.alpha, b, c.alpha * front, gen);
    const double rate = front * g1 * std::pow(b, c.alpha);
    std::poisson_distribution<long> count(rate);
    const long jumps = count(gen);
    std::gamma_distribution<double> size(1.0 - c.alpha, 1.0 / b);
    for (long k = 0; k < jumps; ++k) total += size(gen);
  }
  return total;
}

double IncrementSampler::operator()(Philox& gen) const {
  if (degenerate_) return 0.0;
  if (method_.kind == SamplerKind::frozen_levy) return draw_frozen(gen);
  return quantile(gen.uniform());
}

double sample_increment(const SatoSubordinatorSpec& sub, std::size_t j, double t1, double t2, RngStream rng,
                        SamplerMethod method) {
  IncrementSampler sampler(sub, j, t1, t2, method);
  Philox gen(rng);
  return sampler(gen);
}

std::vector<double> sample_increments(const IncrementSampler& sampler, std::size_t n, RngStream parent) {
  std::vector<double> out(n);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      Philox gen(parent.substream(i));
      out[i] = sampler(gen);
    }
  });
  return out;
}

double self_similarity_check(const SatoSubordinatorSpec& sub, std::size_t j, double t, std::size_t n,
                             RngStream rng) {
  sub.validate();
  if (sub.t0 != 0.0) throw DomainError("self-similarity holds only without regularization (t0 = 0)");
  if (!(t > 0.0)) throw DomainError("self_similarity_check needs t > 0");
  if (n < 2) throw DomainError("self_similarity_check needs n >= 2");
  const IncrementSampler at_t(sub, j, 0.0, t);
  const IncrementSampler at_one(sub, j, 0.0, 1.0);
  const std::vector<double> a = sample_increments(at_t, n, rng.substream(0));
  std::vector<double> b = sample_increments(at_one, n, rng.substream(1));
  const double scale = std::pow(t, sub.rho);
  for (double& v : b) v *= scale;
  return ks_two_sample(a, b);
}

}  // namespace addsub
