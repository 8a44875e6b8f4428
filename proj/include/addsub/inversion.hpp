#pragma once

#include <functional>

#include "addsub/quadrature.hpp"

namespace addsub {

using CharacteristicFunction = std::function<Complex(double)>;
/// u -> E[e^{-uX}], analytically continued to the right of every singularity.
using LaplaceTransform = std::function<Complex(Complex)>;

struct InversionResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;      // quadrature reached its tolerance
  bool truncation_ok = true;  // |phi| fell below the tail tolerance at the cutoff
};

/// Smallest power-of-two cutoff beyond which |phi| stays below tail_tol on a
/// doubling probe, capped at 2^16.
double default_truncation(const CharacteristicFunction& phi, double tail_tol = 1e-10);

/// Gil-Pelaez inversion F(x) = 1/2 - (1/pi) int_0^T Im[e^{-i xi x} phi(xi)] / xi dxi.
/// When |phi(T)| exceeds the tail tolerance the integrand is damped by a
/// Gaussian window reaching 1e-10 at T, which returns the CDF of X plus a
/// narrow independent Gaussian; truncation_ok is cleared in that case.
InversionResult invert_cf_to_cdf(const CharacteristicFunction& phi, double x, double truncation,
                                 const QuadratureSpec& spec = {});

/// Density f(x) = (1/pi) int_0^T Re[e^{-i xi x} phi(xi)] dxi, with the same
/// truncation handling as invert_cf_to_cdf.
InversionResult invert_cf_to_density(const CharacteristicFunction& phi, double x, double truncation,
                                     const QuadratureSpec& spec = {});

/// Solves F(x) = u on [0, inf) for a law with non-negative support.
/// Throws NumericError naming the searched interval when no bracket exists.
double inverse_cdf_sample(const CharacteristicFunction& phi, double u, double truncation,
                          const QuadratureSpec& spec = {}, double x_tol = 1e-6);

/// Fixed-Talbot inversion (Abate-Valko) of a Laplace transform at x > 0.
/// Accurate to roughly 1e-10 in double precision for transforms whose
/// singularities lie on the non-positive real axis.
double talbot_inversion(const LaplaceTransform& transform, double x, int terms = 32);

}  // namespace addsub
