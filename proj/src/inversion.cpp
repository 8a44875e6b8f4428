#include "addsub/inversion.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "addsub/errors.hpp"

namespace addsub {

namespace {
constexpr double kTailTol = 1e-10;
constexpr double kMaxTruncation = 65536.0;
}  // namespace

double default_truncation(const CharacteristicFunction& phi, double tail_tol) {
  double xi = 1.0;
  while (xi < kMaxTruncation) {
    if (std::abs(phi(xi)) < tail_tol && std::abs(phi(2.0 * xi)) < tail_tol) return xi;
    xi *= 2.0;
  }
  return kMaxTruncation;
}

namespace {

// int_0^T kernel(xi) dxi with the partition seeded at roughly one panel per
// oscillation of e^{-i xi x}, and a Gaussian window when phi(T) is not yet small.
InversionResult fourier_integral(const CharacteristicFunction& phi, double x, double truncation,
                                 const QuadratureSpec& spec, bool for_cdf) {
  if (!(truncation > 0.0)) throw DomainError("CF inversion truncation must be positive");
  InversionResult out;
  double damping = 0.0;
  if (std::abs(phi(truncation)) > kTailTol) {
    out.truncation_ok = false;
    damping = -std::log(kTailTol) / (truncation * truncation);
  }
  auto integrand = [&](double xi) {
    const Complex v = std::exp(Complex(0.0, -xi * x)) * phi(xi) * std::exp(-damping * xi * xi);
    return for_cdf ? v.imag() / xi : v.real();
  };
  const double period = 2.0 * std::numbers::pi / std::max(std::abs(x), 1e-3);
  const int panels = static_cast<int>(std::clamp(truncation / period, 1.0, 4000.0));
  std::vector<double> cuts;
  cuts.reserve(panels);
  for (int i = 1; i < panels; ++i) cuts.push_back(truncation * i / panels);
  QuadratureSpec local = spec;
  local.abs_tol = std::min(spec.abs_tol, 1e-9);
  local.max_evals = std::max(spec.max_evals, 30 * panels + 20000);
  const auto r = integrate(std::function<double(double)>(integrand), 0.0, truncation, local, cuts);
  out.value = r.value / std::numbers::pi;
  out.error = r.error / std::numbers::pi;
  out.converged = r.converged;
  return out;
}

}  // namespace

InversionResult invert_cf_to_cdf(const CharacteristicFunction& phi, double x, double truncation,
                                 const QuadratureSpec& spec) {
  auto out = fourier_integral(phi, x, truncation, spec, true);
  out.value = 0.5 - out.value;
  return out;
}

InversionResult invert_cf_to_density(const CharacteristicFunction& phi, double x, double truncation,
                                     const QuadratureSpec& spec) {
  return fourier_integral(phi, x, truncation, spec, false);
}

double inverse_cdf_sample(const CharacteristicFunction& phi, double u, double truncation,
                          const QuadratureSpec& spec, double x_tol) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("inverse_cdf_sample requires u in (0, 1)");
  auto excess = [&](double x) { return invert_cf_to_cdf(phi, x, truncation, spec).value - u; };
  const double f0 = excess(0.0);
  if (f0 >= 0.0) return 0.0;
  double hi = 1.0;
  double fhi = excess(hi);
  int grow = 0;
  while (fhi < 0.0) {
    if (++grow > 60) {
      std::ostringstream msg;
      msg << "inverse_cdf_sample: no bracket for u = " << u << " on [0, " << hi << "]";
      throw NumericError(msg.str());
    }
    hi *= 2.0;
    fhi = excess(hi);
  }
  double lo = grow == 0 ? 0.0 : hi / 2.0;
  double flo = grow == 0 ? f0 : excess(lo);
  auto tol = [x_tol](double a, double b) { return std::abs(b - a) <= x_tol * std::max(1.0, std::abs(b)); };
  std::uintmax_t iters = 200;
  const auto root = boost::math::tools::toms748_solve(excess, lo, hi, flo, fhi, tol, iters);
  return 0.5 * (root.first + root.second);
}

double talbot_inversion(const LaplaceTransform& transform, double x, int terms) {
  if (!(x > 0.0)) throw DomainError("Talbot inversion needs x > 0");
  const int m = terms;
  const double r = 2.0 * m / (5.0 * x);
  double sum = 0.5 * (std::exp(r * x) * transform(Complex(r, 0.0))).real();
  for (int k = 1; k < m; ++k) {
    const double theta = k * std::numbers::pi / m;
    const double cot = std::cos(theta) / std::sin(theta);
    const Complex s(r * theta * cot, r * theta);
    const double sigma = theta + (theta * cot - 1.0) * cot;
    sum += (std::exp(x * s) * transform(s) * Complex(1.0, sigma)).real();
  }
  return r / m * sum;
}

}  // namespace addsub
