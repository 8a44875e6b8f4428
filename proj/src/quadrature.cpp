#include "addsub/quadrature.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <sstream>

#include "addsub/errors.hpp"

namespace addsub {

void QuadratureSpec::validate() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw DomainError("quadrature tolerances must be positive");
  if (max_evals < 15) throw DomainError("quadrature max_evals must be at least 15");
}

namespace {

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const Complex& v) { return std::abs(v); }
inline bool finite(double v) { return std::isfinite(v); }
inline bool finite(const Complex& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

template <class T>
struct Panel {
  double a, b;
  T value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

// Maps the integration variable onto a finite interval.
struct Mapping {
  enum Kind { identity, upper_half, lower_half, whole } kind = identity;
  double origin = 0.0;

  double lo(double a) const { return kind == identity ? a : (kind == whole ? -1.0 : 0.0); }
  double hi(double b) const { return kind == identity ? b : 1.0; }

  // Returns x(u) and sets the Jacobian.
  double apply(double u, double& jac) const {
    switch (kind) {
      case identity: jac = 1.0; return u;
      case upper_half: {
        const double w = 1.0 - u;
        jac = 1.0 / (w * w);
        return origin + u / w;
      }
      case lower_half: {
        const double w = 1.0 - u;
        jac = 1.0 / (w * w);
        return origin - u / w;
      }
      case whole: {
        const double w = 1.0 - u * u;
        jac = (1.0 + u * u) / (w * w);
        return u / w;
      }
    }
    jac = 1.0;
    return u;
  }
  double inverse(double x) const {
    switch (kind) {
      case identity: return x;
      case upper_half: { const double y = x - origin; return y / (1.0 + y); }
      case lower_half: { const double y = origin - x; return y / (1.0 + y); }
      case whole: return x == 0.0 ? 0.0 : (-1.0 + std::sqrt(1.0 + 4.0 * x * x)) / (2.0 * x);
    }
    return x;
  }
};

template <class T>
Panel<T> kronrod(const std::function<T(double)>& f, const Mapping& map, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  auto eval = [&](double u) -> T {
    double jac;
    const double x = map.apply(u, jac);
    const T v = f(x);
    if (!finite(v)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "integrand is not finite at x = " << x;
      throw NumericError(msg.str());
    }
    return v * jac;
  };
  const T center = eval(c);
  T gauss = center * kWg[3];
  T kron = center * kWgk[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const T fsum = eval(c - dx) + eval(c + dx);
    kron += fsum * kWgk[j];
    if (j % 2 == 1) gauss += fsum * kWg[j / 2];
  }
  kron *= h;
  gauss *= h;
  return Panel<T>{a, b, kron, magnitude(kron - gauss)};
}

template <class T>
QuadResult<T> fixed_rule(const std::function<T(double)>& f, double a, double b, QuadratureKind kind,
                         const QuadratureSpec& spec) {
  auto apply = [&](int order) {
    T sum{};
    if (kind == QuadratureKind::gauss_hermite) {
      // int f dx = sqrt(2 pi) E[f(Z) e^{Z^2/2}]
      const GaussRule& rule = gauss_hermite_normal(order);
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double x = rule.nodes[i];
        sum += f(x) * (rule.weights[i] * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x));
      }
    } else {
      const GaussRule& rule = gauss_laguerre(order);
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double x = rule.nodes[i];
        sum += f(a + x) * (rule.weights[i] * std::exp(x));
      }
    }
    return sum;
  };
  if (kind == QuadratureKind::gauss_hermite && !(std::isinf(a) && a < 0 && std::isinf(b) && b > 0))
    throw DomainError("gauss-hermite integration requires the whole real line");
  if (kind == QuadratureKind::gauss_laguerre && !(std::isfinite(a) && std::isinf(b) && b > 0))
    throw DomainError("gauss-laguerre integration requires a half-line [a, inf)");
  QuadResult<T> r;
  r.value = apply(64);
  r.error = magnitude(r.value - apply(32));
  r.evals = 96;
  r.converged = r.error <= std::max(spec.abs_tol, spec.rel_tol * magnitude(r.value));
  return r;
}

template <class T>
QuadResult<T> adaptive(const std::function<T(double)>& f, double a, double b, const QuadratureSpec& spec,
                       std::span<const double> breakpoints) {
  spec.validate();
  if (std::isnan(a) || std::isnan(b)) throw DomainError("integration bounds must not be NaN");
  if (spec.kind != QuadratureKind::adaptive_interval) return fixed_rule(f, a, b, spec.kind, spec);
  double sign = 1.0;
  if (a > b) {
    std::swap(a, b);
    sign = -1.0;
  }
  QuadResult<T> result;
  if (a == b) return result;

  Mapping map;
  if (std::isinf(a) && std::isinf(b)) {
    map.kind = Mapping::whole;
  } else if (std::isinf(b)) {
    map.kind = Mapping::upper_half;
    map.origin = a;
  } else if (std::isinf(a)) {
    map.kind = Mapping::lower_half;
    map.origin = b;
  }

  std::vector<double> cuts;
  cuts.push_back(map.lo(a));
  for (double p : breakpoints) {
    if (p > a && p < b) cuts.push_back(map.inverse(p));
  }
  cuts.push_back(map.hi(b));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<Panel<T>> heap;
  T total{};
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    Panel<T> p = kronrod(f, map, cuts[i], cuts[i + 1]);
    result.evals += 15;
    total += p.value;
    total_err += p.error;
    heap.push(p);
  }
  std::vector<Panel<T>> retired;  // panels too narrow to split further
  auto tolerance = [&] { return std::max(spec.abs_tol, spec.rel_tol * magnitude(total)); };
  while (total_err > tolerance() && !heap.empty()) {
    if (result.evals + 30 > spec.max_evals) {
      result.converged = false;
      break;
    }
    Panel<T> worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b) ||
        (worst.b - worst.a) < 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(mid))) {
      retired.push_back(worst);
      continue;
    }
    Panel<T> left = kronrod(f, map, worst.a, mid);
    Panel<T> right = kronrod(f, map, mid, worst.b);
    result.evals += 30;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed accumulated cancellation in the running totals.
  total = T{};
  total_err = 0.0;
  for (; !heap.empty(); heap.pop()) {
    total += heap.top().value;
    total_err += heap.top().error;
  }
  for (const auto& p : retired) {
    total += p.value;
    total_err += p.error;
  }
  result.value = total * sign;
  result.error = total_err;
  if (total_err > tolerance()) result.converged = false;
  return result;
}

GaussRule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mu0) {
  const int n = static_cast<int>(diag.size());
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) jacobi(i, i) = diag(i);
  for (int i = 0; i + 1 < n; ++i) jacobi(i, i + 1) = jacobi(i + 1, i) = offdiag(i);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = eig.eigenvalues()(i);
    const double v0 = eig.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

std::mutex rule_mutex;

}  // namespace

const GaussRule& gauss_hermite_normal(int order) {
  static std::map<int, GaussRule> cache;
  std::lock_guard lock(rule_mutex);
  if (auto it = cache.find(order); it != cache.end()) return it->second;
  if (order < 1) throw DomainError("Gauss rule order must be positive");
  // Probabilists' Hermite recurrence: beta_i = sqrt(i), total mass 1.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd off(std::max(order - 1, 0));
  for (int i = 0; i + 1 < order; ++i) off(i) = std::sqrt(static_cast<double>(i + 1));
  return cache.emplace(order, golub_welsch(diag, off, 1.0)).first->second;
}

const GaussRule& gauss_laguerre(int order) {
  static std::map<int, GaussRule> cache;
  std::lock_guard lock(rule_mutex);
  if (auto it = cache.find(order); it != cache.end()) return it->second;
  if (order < 1) throw DomainError("Gauss rule order must be positive");
  Eigen::VectorXd diag(order);
  Eigen::VectorXd off(std::max(order - 1, 0));
  for (int i = 0; i < order; ++i) diag(i) = 2.0 * i + 1.0;
  for (int i = 0; i + 1 < order; ++i) off(i) = i + 1.0;
  return cache.emplace(order, golub_welsch(diag, off, 1.0)).first->second;
}

QuadResult<double> integrate_real(const std::function<double(double)>& f, double a, double b,
                                  const QuadratureSpec& spec, std::span<const double> breakpoints) {
  return adaptive<double>(f, a, b, spec, breakpoints);
}

QuadResult<Complex> integrate_complex(const std::function<Complex(double)>& f, double a, double b,
                                      const QuadratureSpec& spec, std::span<const double> breakpoints) {
  return adaptive<Complex>(f, a, b, spec, breakpoints);
}

double default_derivative_step(double t) { return 1e-2 * std::max(t, 1.0); }

namespace {

template <class T>
DerivativeResult<T> richardson(const std::function<T(double)>& g, double t, double h0, int levels) {
  if (levels < 2) throw DomainError("Richardson extrapolation needs at least two levels");
  if (h0 <= 0.0) h0 = default_derivative_step(t);
  const T g0 = g(t);
  std::vector<std::vector<T>> table(levels);
  double h = h0;
  for (int i = 0; i < levels; ++i, h *= 0.5) {
    table[i].resize(i + 1);
    table[i][0] = (g(t + h) - g0) / h;
    // Forward differences carry every power of h, so column j removes h^j.
    double factor = 1.0;
    for (int j = 1; j <= i; ++j) {
      factor *= 2.0;
      table[i][j] = (factor * table[i][j - 1] - table[i - 1][j - 1]) / (factor - 1.0);
    }
  }
  DerivativeResult<T> r;
  const int n = levels - 1;
  r.value = table[n][n];
  r.error = magnitude(table[n][n] - table[n - 1][n - 1]);
  // The diagonal should contract; a growing final step signals noise or a kink.
  if (n >= 2) {
    const double prev = magnitude(table[n - 1][n - 1] - table[n - 2][n - 2]);
    if (r.error > prev && r.error > 1e-12 * std::max(1.0, magnitude(r.value))) r.converged = false;
  }
  return r;
}

}  // namespace

DerivativeResult<double> finite_diff_derivative_real(const std::function<double(double)>& g, double t, double h0,
                                                int levels) {
  return richardson<double>(g, t, h0, levels);
}

DerivativeResult<Complex> finite_diff_derivative_complex(const std::function<Complex(double)>& g, double t,
                                                 double h0, int levels) {
  return richardson<Complex>(g, t, h0, levels);
}

}  // namespace addsub
