#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <type_traits>
#include <vector>

namespace addsub {

using Complex = std::complex<double>;

enum class QuadratureKind { adaptive_interval, gauss_hermite, gauss_laguerre };

/// log(1 + z) and exp(z) - 1 without cancellation for small |z|.
inline Complex log1p_c(Complex z) {
  const double x = z.real(), y = z.imag();
  return {0.5 * std::log1p(2.0 * x + x * x + y * y), std::atan2(y, 1.0 + x)};
}

inline Complex expm1_c(Complex z) {
  const double x = z.real(), y = z.imag();
  const double s = std::sin(0.5 * y);
  return {std::expm1(x) * std::cos(y) - 2.0 * s * s, std::exp(x) * std::sin(y)};
}

struct QuadratureSpec {
  QuadratureKind kind = QuadratureKind::adaptive_interval;
  double abs_tol = 1e-8;
  double rel_tol = 1e-8;
  int max_evals = 200000;

  /// Throws DomainError unless abs_tol > 0, rel_tol > 0 and max_evals >= 15.
  void validate() const;
};

template <class T>
struct QuadResult {
  T value{};
  double error = 0.0;
  int evals = 0;
  bool converged = true;  // false: tolerance not reached within max_evals
};

/// Integrates f over [a, b]. Either bound may be infinite. Interior
/// breakpoints, when given, seed the initial partition. Integrable endpoint
/// singularities are fine for the adaptive kind since Kronrod nodes never
/// touch the endpoints. A non-finite f(x) throws NumericError naming x.
///
/// For gauss_hermite the domain must be the whole line and for
/// gauss_laguerre [a, inf); both use a fixed order-64 rule with the order-32
/// rule as the error estimate.
QuadResult<double> integrate_real(const std::function<double(double)>& f, double a, double b,
                                  const QuadratureSpec& spec = {}, std::span<const double> breakpoints = {});
QuadResult<Complex> integrate_complex(const std::function<Complex(double)>& f, double a, double b,
                                      const QuadratureSpec& spec = {},
                                      std::span<const double> breakpoints = {});

template <class F>
auto integrate(F&& f, double a, double b, const QuadratureSpec& spec = {},
               std::span<const double> breakpoints = {}) {
  if constexpr (std::is_same_v<std::invoke_result_t<F&, double>, Complex>)
    return integrate_complex(std::function<Complex(double)>(std::forward<F>(f)), a, b, spec, breakpoints);
  else
    return integrate_real(std::function<double(double)>(std::forward<F>(f)), a, b, spec, breakpoints);
}

/// Gauss rule for a classical weight, built by Golub-Welsch.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// E f(Z) for Z ~ N(0, 1) is sum_i w_i f(x_i); weights sum to one.
const GaussRule& gauss_hermite_normal(int order);
/// int_0^inf f(x) e^{-x} dx is sum_i w_i f(x_i).
const GaussRule& gauss_laguerre(int order);

template <class T>
struct DerivativeResult {
  T value{};
  double error = 0.0;
  bool converged = true;
};

/// Forward-difference derivative at t with Richardson extrapolation over
/// step halvings h0, h0/2, ... (levels entries). The error estimate is the
/// last change along the extrapolation diagonal.
DerivativeResult<double> finite_diff_derivative_real(const std::function<double(double)>& g, double t,
                                                     double h0 = 0.0, int levels = 4);
DerivativeResult<Complex> finite_diff_derivative_complex(const std::function<Complex(double)>& g, double t,
                                                         double h0 = 0.0, int levels = 4);

template <class G>
auto finite_diff_derivative(G&& g, double t, double h0 = 0.0, int levels = 4) {
  if constexpr (std::is_same_v<std::invoke_result_t<G&, double>, Complex>)
    return finite_diff_derivative_complex(std::function<Complex(double)>(std::forward<G>(g)), t, h0, levels);
  else
    return finite_diff_derivative_real(std::function<double(double)>(std::forward<G>(g)), t, h0, levels);
}

/// Default initial step 1e-2 * max(t, 1).
double default_derivative_step(double t);

}  // namespace addsub
