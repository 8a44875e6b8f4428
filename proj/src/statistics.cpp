#include "addsub/statistics.hpp"

#include <algorithm>

namespace addsub {

namespace {
double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}
}  // namespace

MomentEstimate covariance_estimate(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw DomainError("covariance needs paired samples (n >= 3)");
  const std::size_t n = x.size();
  const double mx = mean_of(x), my = mean_of(y);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (x[i] - mx) * (y[i] - my);
  const double cov = s / static_cast<double>(n - 1);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (x[i] - mx) * (y[i] - my) - cov;
    ss += d * d;
  }
  return {cov, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))};
}

MomentEstimate correlation_estimate(std::span<const double> x, std::span<const double> y) {
  const double cxy = covariance_estimate(x, y).value;
  const double cxx = covariance_estimate(x, x).value;
  const double cyy = covariance_estimate(y, y).value;
  if (!(cxx > 0.0 && cyy > 0.0)) return {0.0, 0.0};
  const double r = cxy / std::sqrt(cxx * cyy);
  return {r, (1.0 - r * r) / std::sqrt(static_cast<double>(x.size()))};
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("KS test needs non-empty samples");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= v) ++i;
    while (j < sb.size() && sb[j] <= v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

double ks_one_sample(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw DomainError("KS test needs a non-empty sample");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max({d, std::abs((i + 1) / n - f), std::abs(f - i / n)});
  }
  return d;
}

double ks_critical(std::size_t n, std::size_t m, double level) {
  const double c = std::sqrt(-0.5 * std::log(0.5 * level));
  const double dn = static_cast<double>(n);
  if (m == 0) return c / std::sqrt(dn);
  const double dm = static_cast<double>(m);
  return c * std::sqrt((dn + dm) / (dn * dm));
}

}  // namespace addsub
