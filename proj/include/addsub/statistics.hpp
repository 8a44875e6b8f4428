#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <type_traits>
#include <vector>

#include "addsub/errors.hpp"
#include "addsub/parallel.hpp"
#include "addsub/rng.hpp"

namespace addsub {

template <class T>
struct MCEstimate {
  T mean{};
  double std_error = 0.0;  // for complex means: sqrt((var re + var im) / n)
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
};

namespace detail {
inline double sq_norm(double v) { return v * v; }
inline double sq_norm(const std::complex<double>& v) { return std::norm(v); }
}  // namespace detail

/// Sample mean and standard error of already-drawn values, summed in index order.
template <class T>
MCEstimate<T> summarize(std::span<const T> values, std::uint64_t seed = 0) {
  const std::size_t n = values.size();
  if (n < 2) throw DomainError("a Monte Carlo estimate needs at least two samples");
  T sum{};
  for (const T& v : values) sum += v;
  const T mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const T& v : values) ss += detail::sq_norm(v - mean);
  MCEstimate<T> est;
  est.mean = mean;
  est.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  est.n_samples = n;
  est.seed = seed;
  return est;
}

/// Mean of sampler(base.substream(i)) over i < n. Draws may run on several
/// threads; the reduction always runs in index order, so the result is
/// bit-identical for any worker count.
template <class Sampler>
auto mc_mean(Sampler&& sampler, std::size_t n, RngStream base) {
  using T = std::decay_t<decltype(sampler(base))>;
  if (n < 2) throw DomainError("mc_mean needs n >= 2");
  std::vector<T> values(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) values[i] = sampler(base.substream(i));
  });
  return summarize<T>(values, base.seed);
}

struct MomentEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Sample covariance with the standard error of the centred-product mean.
MomentEstimate covariance_estimate(std::span<const double> x, std::span<const double> y);
/// Pearson correlation with the delta-method standard error (1 - r^2) / sqrt(n).
MomentEstimate correlation_estimate(std::span<const double> x, std::span<const double> y);

/// sup |F_a - F_b| between two empirical CDFs.
double ks_two_sample(std::span<const double> a, std::span<const double> b);
/// sup |F_n - F| against a reference CDF.
double ks_one_sample(std::span<const double> samples, const std::function<double(double)>& cdf);
/// Asymptotic two-sided KS critical value for sample sizes n and m (m = 0:
/// one-sample). level 0.01 gives the 99% band.
double ks_critical(std::size_t n, std::size_t m = 0, double level = 0.01);

}  // namespace addsub
