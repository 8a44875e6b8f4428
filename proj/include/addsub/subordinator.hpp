#pragma once

#include <cstddef>
#include <vector>

#include "addsub/inversion.hpp"
#include "addsub/quadrature.hpp"
#include "addsub/rng.hpp"

namespace addsub {

/// Exponentially tempered alpha-stable law on (0, inf) with Levy density
/// lam * exp(-beta s) * s^{-1-alpha}.
struct TemperedStableSpec {
  double alpha = 0.5;
  double beta = 1.0;
  double lam = 1.0;

  void validate() const;

  /// The inverse Gaussian law with E e^{-uX} = exp{-lam [sqrt(beta + 2u) - sqrt(beta)]},
  /// i.e. alpha = 1/2, beta_ts = beta / 2, lam_ts = lam / sqrt(2 pi).
  static TemperedStableSpec inverse_gaussian(double lam, double beta);

  [[nodiscard]] double mean() const;
  [[nodiscard]] double variance() const;
};

/// Sato subordinator with independent ETaS components, self-similarity
/// exponent rho and regularization offset t0 (the process is
/// S(t + t0) - S(t0)). The drift is identically zero.
struct SatoSubordinatorSpec {
  std::vector<TemperedStableSpec> components;
  double rho = 1.0;
  double t0 = 0.0;

  void validate() const;
  [[nodiscard]] std::size_t size() const { return components.size(); }
  [[nodiscard]] const TemperedStableSpec& at(std::size_t j) const;

  /// 0.1 when rho < 1, else 0.
  static double default_t0(double rho);
};

/// log E[e^{w S}] for S ~ ETaS, i.e. lam Gamma(-alpha) [(beta - w)^alpha - beta^alpha],
/// on the principal branch. Valid for w off the cut [beta, inf).
Complex etas_exponent(const TemperedStableSpec& spec, Complex w);
/// d/dw of etas_exponent.
Complex etas_exponent_derivative(const TemperedStableSpec& spec, Complex w);
/// Unit-time log characteristic function, etas_exponent at w = i xi.
Complex etas_log_cf(const TemperedStableSpec& spec, double xi);

/// log E[e^{w S_j(t)}] of the regularized Sato marginal.
Complex sato_exponent(const SatoSubordinatorSpec& sub, std::size_t j, double t, Complex w);
/// d/dt of sato_exponent: rho (t + t0)^{rho - 1} w Psi_1'((t + t0)^rho w).
Complex sato_exponent_dt(const SatoSubordinatorSpec& sub, std::size_t j, double t, Complex w);
Complex sato_marginal_cf(const SatoSubordinatorSpec& sub, std::size_t j, double t, double xi);

/// Law of S_j(t2) - S_j(t1).
class IncrementLaw {
 public:
  IncrementLaw(const SatoSubordinatorSpec& sub, std::size_t j, double t1, double t2);

  [[nodiscard]] std::size_t component_index() const { return component_; }
  [[nodiscard]] double t1() const { return t1_; }
  [[nodiscard]] double t2() const { return t2_; }
  [[nodiscard]] bool degenerate() const { return scale1_ == scale2_; }

  /// log E[e^{w dS}].
  [[nodiscard]] Complex exponent(Complex w) const;
  [[nodiscard]] Complex cf(double xi) const;
  /// E[e^{-u dS}].
  [[nodiscard]] Complex laplace(Complex u) const;

  [[nodiscard]] double mean() const;
  [[nodiscard]] double variance() const;
  /// Exponential decay rate of the right tail.
  [[nodiscard]] double tail_rate() const;

  /// CDF, survival function and density by Talbot inversion of the Laplace
  /// transform. Laws with coefficient of variation below 1/4 are nearly
  /// Gaussian and defeat the Talbot contour; those use Gil-Pelaez inversion
  /// of the characteristic function instead.
  [[nodiscard]] double cdf(double x) const;
  [[nodiscard]] double survival(double x) const;
  [[nodiscard]] double density(double x) const;

 private:
  TemperedStableSpec law_;
  std::size_t component_;
  double t1_, t2_;
  double scale1_, scale2_;  // (t_i + t0)^rho
  double cf_truncation_ = 0.0;  // > 0 selects the Fourier route

  // CF of dS - mean, which keeps the Fourier integrands slowly oscillating.
  [[nodiscard]] CharacteristicFunction centred_cf() const;
};

IncrementLaw increment_law(const SatoSubordinatorSpec& sub, std::size_t j, double t1, double t2);

/// Density of nu^{(j)}(t, ds): the t-derivative of the Levy density of S_j(t).
double levy_density_t(const SatoSubordinatorSpec& sub, std::size_t j, double t, double s);
/// Levy density of the unregularized scaled marginal, lam (t+t0)^{rho alpha} e^{-beta s (t+t0)^{-rho}} s^{-1-alpha}.
double scaled_levy_density(const SatoSubordinatorSpec& sub, std::size_t j, double t, double s);

enum class SamplerKind { inverse_cdf, frozen_levy };

struct SamplerMethod {
  SamplerKind kind = SamplerKind::inverse_cdf;
  int substeps = 16;  // frozen_levy only
};

/// Draws increments S_j(t2) - S_j(t1). Construction does the expensive
/// setup (a quantile table for inverse_cdf); drawing is cheap and const.
class IncrementSampler {
 public:
  IncrementSampler(const SatoSubordinatorSpec& sub, std::size_t j, double t1, double t2,
                   SamplerMethod method = {});

  double operator()(Philox& gen) const;

  /// Quantile of the tabulated law; only meaningful for inverse_cdf.
  [[nodiscard]] double quantile(double u) const;

 private:
  double draw_frozen(Philox& gen) const;

  SatoSubordinatorSpec sub_;
  std::size_t component_;
  double t1_, t2_;
  SamplerMethod method_;
  bool degenerate_;
  // Monotone cubic Hermite representation of the CDF.
  std::vector<double> x_, cdf_, slope_;
  double tail_rate_ = 1.0;
};

double sample_increment(const SatoSubordinatorSpec& sub, std::size_t j, double t1, double t2, RngStream rng,
                        SamplerMethod method = {});

/// n draws; draw i uses parent.substream(i).
std::vector<double> sample_increments(const IncrementSampler& sampler, std::size_t n, RngStream parent);

/// Positive alpha-stable variate with E e^{-uZ} = e^{-u^alpha} (Kanter's representation).
double sample_positive_stable(double alpha, Philox& gen);
/// Tempered stable variate with Levy density mass * e^{-b s} s^{-1-alpha}, by stable rejection.
double sample_tempered_stable(double alpha, double b, double mass, Philox& gen);

/// Two-sample KS distance between n draws of S_j(t) and t^rho times n draws
/// of S_j(1). Requires t0 = 0.
double self_similarity_check(const SatoSubordinatorSpec& sub, std::size_t j, double t, std::size_t n,
                             RngStream rng);

}  // namespace addsub
