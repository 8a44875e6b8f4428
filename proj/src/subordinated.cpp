#include "addsub/subordinated.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "addsub/errors.hpp"
#include "addsub/parallel.hpp"

namespace addsub {

namespace {

// Clock integrals against nu(t, ds) are split here; below it the integrand is
// replaced by its linearization, which is exact to O(s^2).
constexpr double kClockSplit = 1e-6;
constexpr int kHermiteOrder = 64;

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

const QuadratureSpec& clock_quadrature() {
  static const QuadratureSpec spec{QuadratureKind::adaptive_interval, 1e-11, 1e-10, 400000};
  return spec;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// Moments of z 1{|z| <= r} for z ~ N(m, v): orders 0, 1 and 2.
struct TruncatedMoments {
  double p, m1, m2;
};

TruncatedMoments truncated_moments(double m, double v, double r) {
  if (v <= 0.0) {
    const double in = std::abs(m) <= r ? 1.0 : 0.0;
    return {in, in * m, in * m * m};
  }
  const double sd = std::sqrt(v);
  const double a = (-r - m) / sd, b = (r - m) / sd;
  const double p = normal_cdf(b) - normal_cdf(a);
  const double pa = normal_pdf(a), pb = normal_pdf(b);
  return {p, m * p + sd * (pa - pb), m * m * p + 2.0 * m * sd * (pa - pb) + v * (p + a * pa - b * pb)};
}

// One independent piece of Y: a subordinator component together with the
// part of the base it drives. Gaussian "line" pieces move Y by z * dir with
// z ~ N(mean(s), var(s)) after a clock advance s.
struct Piece {
  std::size_t sub_index = 0;
  bool line = false;
  Eigen::VectorXd dir;
  bool ou = false;
  double k = 1.0, theta = 0.0, sigma = 0.0, x = 0.0;  // OU pieces
  double mu = 0.0, var_rate = 0.0;                    // width-one Brownian blocks
  const BrownianBlock* block = nullptr;

  [[nodiscard]] double mean(double s) const {
    return ou ? std::expm1(-k * s) * (x - theta) : mu * s;
  }
  [[nodiscard]] double var(double s) const {
    return ou ? sigma * sigma * -std::expm1(-2.0 * k * s) / (2.0 * k) : var_rate * s;
  }
  // log E exp(i xi . dY) after clock advance s, and its s-derivative.
  [[nodiscard]] Complex log_cf(double s, const Eigen::VectorXd& xi) const {
    if (!ou) return s * mbm_block_exponent(*block, xi);
    const double zeta = dir.dot(xi);
    return {-0.5 * zeta * zeta * var(s), zeta * mean(s)};
  }
  [[nodiscard]] Complex dlog_cf(double s, const Eigen::VectorXd& xi) const {
    if (!ou) return mbm_block_exponent(*block, xi);
    const double zeta = dir.dot(xi);
    const double dm = -k * std::exp(-k * s) * (x - theta);
    const double dv = sigma * sigma * std::exp(-2.0 * k * s);
    return {-0.5 * zeta * zeta * dv, zeta * dm};
  }
  [[nodiscard]] bool trivial(const Eigen::VectorXd& xi) const {
    if (ou) return dir.dot(xi) == 0.0;
    return mbm_block_exponent(*block, xi) == Complex(0.0);
  }
};

void check_state(const SubordinatedSpec& spec, const LatentState& state) {
  require(state.u.size() == static_cast<Eigen::Index>(spec.dim()), "latent state has the wrong dimension");
  require(state.u.allFinite() && std::isfinite(state.u_common), "latent state must be finite");
}

std::vector<Piece> pieces(const SubordinatedSpec& spec, const LatentState& state) {
  check_state(spec, state);
  std::vector<Piece> out;
  const auto d = static_cast<Eigen::Index>(spec.dim());
  if (const auto* f = std::get_if<FactorMOUSpec>(&spec.base)) {
    for (Eigen::Index j = 0; j <= d; ++j) {
      const OUSpec& o = j < d ? f->idio[j] : f->common;
      Piece p;
      p.sub_index = static_cast<std::size_t>(j);
      p.line = true;
      p.ou = true;
      p.k = o.k;
      p.theta = o.theta;
      p.sigma = o.sigma;
      p.x = j < d ? state.u[j] : state.u_common;
      if (j < d) {
        p.dir = Eigen::VectorXd::Unit(d, j);
      } else {
        p.dir = Eigen::Map<const Eigen::VectorXd>(f->loadings.data(), d);
      }
      out.push_back(std::move(p));
    }
  } else {
    const auto& bm = std::get<MultiparamBMSpec>(spec.base);
    for (std::size_t j = 0; j < bm.size(); ++j) {
      Piece p;
      p.sub_index = j;
      p.block = &bm.blocks[j];
      if (bm.blocks[j].A.cols() == 1) {
        p.line = true;
        p.dir = bm.blocks[j].A.col(0);
        p.mu = bm.blocks[j].mu[0];
        p.var_rate = bm.blocks[j].Sigma(0, 0);
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

const Piece& require_line(const Piece& p) {
  require(p.line, "jump structure is only available for OU factors and Brownian blocks of width one");
  return p;
}

// int_0^eps s nu_j(t, ds) in closed form.
double small_clock_moment(const SatoSubordinatorSpec& sub, std::size_t j, double t, double eps) {
  const auto& c = sub.at(j);
  const double big_t = t + sub.t0;
  const double b = c.beta * std::pow(big_t, -sub.rho);
  const double front = c.lam * sub.rho * std::pow(big_t, sub.rho * c.alpha - 1.0) * std::pow(b, c.alpha - 1.0);
  using boost::math::tgamma_lower;
  return front * (tgamma_lower(2.0 - c.alpha, b * eps) + c.alpha * tgamma_lower(1.0 - c.alpha, b * eps));
}

std::vector<double> clock_breakpoints(const SatoSubordinatorSpec& sub, std::size_t j, double t, double from) {
  const double b = sub.at(j).beta * std::pow(t + sub.t0, -sub.rho);
  std::vector<double> bp;
  for (double s = from * 10.0; s < 1.0; s *= 10.0) bp.push_back(s);
  for (double s : {1.0, 1.0 / b, 10.0 / b})
    if (s > from) bp.push_back(s);
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  return bp;
}

// int_0^inf h(s) nu_j(t, ds) for h(s) = O(s).
template <class H>
auto clock_integral(const SatoSubordinatorSpec& sub, std::size_t j, double t, H&& h) {
  const double eps = kClockSplit;
  const auto slope = h(eps) / eps;
  const auto half_slope = h(0.5 * eps) / (0.5 * eps);
  const double moment = small_clock_moment(sub, j, t, eps);
  auto r = integrate([&](double s) { return h(s) * levy_density_t(sub, j, t, s); }, eps, INFINITY, clock_quadrature(),
                     clock_breakpoints(sub, j, t, eps));
  r.value += slope * moment;
  r.error += std::abs(slope - half_slope) * moment;
  return r;
}

void check_time(const SubordinatedSpec& spec, double t) {
  require(std::isfinite(t) && t >= 0.0, "t must be finite and non-negative");
  require(t + spec.sub.t0 > 0.0, "t + t0 must be positive");
}

// E exp(i xi . dY_piece) over the clock increment, by parts:
// E g(dS) = 1 + int_0^inf g'(s) P(dS > s) ds.
QuadResult<Complex> mix_piece(const Piece& p, const IncrementLaw& law, const Eigen::VectorXd& xi) {
  if (law.degenerate() || p.trivial(xi)) return {Complex(1.0), 0.0, 0, true};
  const double mean = law.mean(), sd = std::sqrt(law.variance()), rate = law.tail_rate();
  // Chernoff: P(dS > s) <= exp(K(h) - h s) with K the cumulant function at h = rate / 2.
  const double h = 0.5 * rate;
  const double upper = std::max(mean + 10.0 * sd, (law.exponent(Complex(h)).real() + 35.0) / h);
  std::vector<double> bp;
  for (double f = 1e-8; f < 0.5; f *= 10.0) bp.push_back(f * mean);
  for (double f : {0.5, 1.0, 2.0}) bp.push_back(f * mean);
  bp.push_back(mean + 3.0 * sd);
  bp.push_back(mean + 10.0 * sd);
  std::erase_if(bp, [&](double v) { return !(v > 0.0 && v < upper); });
  std::sort(bp.begin(), bp.end());
  // The inverted survival function is good to about 1e-11, so a tighter
  // absolute tolerance only chases noise.
  const double floor = 1e-11 * std::abs(p.dlog_cf(0.0, xi)) * upper;
  QuadratureSpec qs = clock_quadrature();
  qs.abs_tol = 1e-10;
  auto r = integrate(
      [&](double s) { return std::exp(p.log_cf(s, xi)) * p.dlog_cf(s, xi) * law.survival(s); }, 0.0, upper, qs, bp);
  r.value += 1.0;
  r.error += floor;
  return r;
}

// Draws subordinator increments and advances the base along a fixed grid.
class PathEngine {
 public:
  PathEngine(const SubordinatedSpec& spec, const std::vector<double>& grid, SamplerMethod method) : spec_(spec) {
    spec.validate();
    require(!grid.empty(), "grid must not be empty");
    require(std::isfinite(grid.front()) && grid.front() >= 0.0, "grid must start at a non-negative time");
    for (std::size_t i = 1; i < grid.size(); ++i)
      require(std::isfinite(grid[i]) && grid[i] > grid[i - 1], "grid must be strictly increasing");
    steps_.resize(grid.size());
    for (std::size_t i = 1; i < grid.size(); ++i)
      for (std::size_t c = 0; c < spec.parameter_count(); ++c)
        steps_[i].emplace_back(spec.sub, c, grid[i - 1], grid[i], method);
    if (const auto* bm = std::get_if<MultiparamBMSpec>(&spec.base)) {
      for (const auto& b : bm->blocks) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.Sigma);
        roots_.push_back(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal());
      }
    }
  }

  void step(std::size_t i, LatentState& st, Philox& g) const {
    if (const auto* f = std::get_if<FactorMOUSpec>(&spec_.base)) {
      const auto d = static_cast<Eigen::Index>(f->dim());
      for (Eigen::Index c = 0; c <= d; ++c) {
        const double ds = steps_[i][c](g);
        st.clock[c] += ds;
        if (c < d) {
          st.u[c] = ou_sample_step(f->idio[c], st.u[c], ds, g);
        } else {
          st.u_common = ou_sample_step(f->common, st.u_common, ds, g);
        }
      }
    } else {
      const auto& bm = std::get<MultiparamBMSpec>(spec_.base);
      for (std::size_t c = 0; c < bm.size(); ++c) {
        const double ds = steps_[i][c](g);
        st.clock[static_cast<Eigen::Index>(c)] += ds;
        const auto& b = bm.blocks[c];
        Eigen::VectorXd z(b.mu.size());
        for (Eigen::Index r = 0; r < z.size(); ++r) z[r] = g.normal();
        st.u += b.A * (b.mu * ds + std::sqrt(ds) * (roots_[c] * z));
      }
    }
  }

  [[nodiscard]] LatentState start(const LatentState* initial) const {
    LatentState st = initial ? *initial : initial_state(spec_);
    check_state(spec_, st);
    require(st.clock.size() == static_cast<Eigen::Index>(spec_.parameter_count()),
            "latent clock needs one entry per subordinator component");
    return st;
  }

 private:
  const SubordinatedSpec& spec_;
  std::vector<std::vector<IncrementSampler>> steps_;
  std::vector<Eigen::MatrixXd> roots_;
};

}  // namespace

void SubordinatedSpec::validate() const {
  std::visit([](const auto& b) { b.validate(); }, base);
  sub.validate();
  require(sub.size() == parameter_count(), "the subordinator needs " + std::to_string(parameter_count()) +
                                               " components, one per time parameter of the base, but has " +
                                               std::to_string(sub.size()));
}

std::size_t SubordinatedSpec::dim() const {
  return std::visit([](const auto& b) { return b.dim(); }, base);
}

std::size_t SubordinatedSpec::parameter_count() const {
  if (const auto* f = std::get_if<FactorMOUSpec>(&base)) return f->dim() + 1;
  return std::get<MultiparamBMSpec>(base).size();
}

bool SubordinatedSpec::levy_base() const { return std::holds_alternative<MultiparamBMSpec>(base); }

LatentState initial_state(const SubordinatedSpec& spec) {
  const auto d = static_cast<Eigen::Index>(spec.dim());
  return LatentState{Eigen::VectorXd::Zero(d), 0.0,
                     Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.parameter_count()))};
}

Eigen::VectorXd observed_value(const SubordinatedSpec& spec, const LatentState& state) {
  check_state(spec, state);
  if (const auto* f = std::get_if<FactorMOUSpec>(&spec.base)) {
    return state.u + state.u_common * Eigen::Map<const Eigen::VectorXd>(f->loadings.data(), state.u.size());
  }
  return state.u;
}

std::vector<PathBundle> sample_paths(const SubordinatedSpec& spec, const std::vector<double>& grid,
                                     std::size_t n_paths, RngStream rng, SamplerMethod method,
                                     const LatentState* initial) {
  require(n_paths > 0, "n_paths must be positive");
  const PathEngine engine(spec, grid, method);
  const LatentState start = engine.start(initial);
  const auto n = static_cast<Eigen::Index>(grid.size());
  const auto d = static_cast<Eigen::Index>(spec.dim());
  const auto k = static_cast<Eigen::Index>(spec.parameter_count());
  const bool factor = !spec.levy_base();
  std::vector<PathBundle> out(n_paths);
  parallel_for(n_paths, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      PathBundle& b = out[p];
      b.grid = grid;
      b.stream = rng.substream(p);
      b.subordinator_paths.resize(k, n);
      b.latent_paths.resize(factor ? d + 1 : 0, n);
      b.observed_paths.resize(d, n);
      Philox g(b.stream);
      LatentState st = start;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (i > 0) engine.step(static_cast<std::size_t>(i), st, g);
        b.subordinator_paths.col(i) = st.clock;
        if (factor) {
          b.latent_paths.col(i).head(d) = st.u;
          b.latent_paths(d, i) = st.u_common;
        }
        b.observed_paths.col(i) = observed_value(spec, st);
      }
    }
  });
  return out;
}

Eigen::MatrixXd sample_terminal(const SubordinatedSpec& spec, const std::vector<double>& grid, std::size_t n_paths,
                                RngStream rng, SamplerMethod method, const LatentState* initial) {
  require(n_paths > 0, "n_paths must be positive");
  const PathEngine engine(spec, grid, method);
  const LatentState start = engine.start(initial);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_paths), static_cast<Eigen::Index>(spec.dim()));
  parallel_for(n_paths, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      Philox g(rng.substream(p));
      LatentState st = start;
      for (std::size_t i = 1; i < grid.size(); ++i) engine.step(i, st, g);
      out.row(static_cast<Eigen::Index>(p)) = observed_value(spec, st).transpose();
    }
  });
  return out;
}

CfEval cf_increment(const SubordinatedSpec& spec, double t1, double t2, const LatentState& state,
                    const Eigen::VectorXd& xi, CfMethod method) {
  spec.validate();
  require(std::isfinite(t1) && std::isfinite(t2) && 0.0 <= t1 && t1 <= t2, "need 0 <= t1 <= t2");
  require(xi.size() == static_cast<Eigen::Index>(spec.dim()), "xi has the wrong dimension");
  const auto ps = pieces(spec, state);
  CfEval out{Complex(1.0), 0.0, method};
  if (method == CfMethod::closed_form) {
    require(spec.levy_base(), "the closed-form increment CF needs a Brownian (Levy) base");
    Complex exponent = 0.0;
    for (const auto& p : ps) exponent += increment_law(spec.sub, p.sub_index, t1, t2).exponent(p.dlog_cf(0.0, xi));
    out.value = std::exp(exponent);
    return out;
  }
  for (const auto& p : ps) {
    const auto r = mix_piece(p, increment_law(spec.sub, p.sub_index, t1, t2), xi);
    if (!r.converged) throw NumericError("mixing integral over the clock increment did not converge");
    out.error_estimate += std::abs(out.value) * r.error;
    out.value *= r.value;
  }
  return out;
}

SymbolEval symbol(const SubordinatedSpec& spec, double t, const LatentState& state, const Eigen::VectorXd& xi,
                  SymbolMethod method) {
  spec.validate();
  check_time(spec, t);
  require(xi.size() == static_cast<Eigen::Index>(spec.dim()), "xi has the wrong dimension");
  const auto ps = pieces(spec, state);
  SymbolEval out{Complex(0.0), method, 0.0};
  if (xi.isZero(0.0)) return out;
  switch (method) {
    case SymbolMethod::levy_closed_form:
      require(spec.levy_base(), "the closed-form symbol needs a Brownian (Levy) base");
      for (const auto& p : ps) out.value -= sato_exponent_dt(spec.sub, p.sub_index, t, p.dlog_cf(0.0, xi));
      out.error_estimate = 1e-14 * std::abs(out.value);
      break;
    case SymbolMethod::triplet_integral:
      for (const auto& p : ps) {
        if (p.trivial(xi)) continue;
        const auto r =
            clock_integral(spec.sub, p.sub_index, t, [&](double s) { return expm1_c(p.log_cf(s, xi)); });
        if (!r.converged) throw NumericError("symbol integral against the Levy measure did not converge");
        out.value -= r.value;
        out.error_estimate += r.error;
      }
      break;
    case SymbolMethod::cf_derivative: {
      double quad_error = 0.0;
      const auto d = finite_diff_derivative(
          [&](double h) {
            const auto cf = cf_increment(spec, t, t + h, state, xi);
            quad_error = std::max(quad_error, cf.error_estimate);
            return cf.value;
          },
          0.0, default_derivative_step(t));
      out.value = -d.value;
      // Quadrature noise enters the differences divided by the smallest step.
      out.error_estimate = d.error + 8.0 * quad_error / (default_derivative_step(t) / 8.0);
      break;
    }
  }
  return out;
}

LevyTriplet::LevyTriplet(const SubordinatedSpec& spec, double t, const LatentState& state)
    : spec_(spec), t_(t), state_(state) {
  spec.validate();
  check_time(spec, t);
  const auto d = static_cast<Eigen::Index>(spec.dim());
  gamma_ = Eigen::VectorXd::Zero(d);
  sigma_ = Eigen::MatrixXd::Zero(d, d);
  for (const auto& p : pieces(spec, state)) {
    require_line(p);
    directions_.push_back(p.dir);
    const double len = p.dir.norm();
    if (len == 0.0) continue;
    const double r = 1.0 / len;
    const auto q = clock_integral(spec.sub, p.sub_index, t,
                                  [&](double s) { return truncated_moments(p.mean(s), p.var(s), r).m1; });
    if (!q.converged) throw NumericError("compensator integral did not converge");
    gamma_ += q.value * p.dir;
    gamma_error_ += q.error * len;
  }
}

double LevyTriplet::nu_density(std::size_t c, double z) const {
  const auto ps = pieces(spec_, state_);
  const Piece& p = require_line(ps.at(c));
  if (p.dir.isZero(0.0)) return 0.0;
  if (z == 0.0) return INFINITY;
  auto kernel = [&](double s) {
    const double v = p.var(s);
    if (v <= 0.0) return 0.0;
    const double e = (z - p.mean(s)) / std::sqrt(v);
    return normal_pdf(e) / std::sqrt(v) * levy_density_t(spec_.sub, p.sub_index, t_, s);
  };
  const auto bp = clock_breakpoints(spec_.sub, p.sub_index, t_, 1e-12);
  const auto r = integrate(kernel, 0.0, INFINITY, clock_quadrature(), bp);
  if (!r.converged) throw NumericError("Levy density integral did not converge");
  return r.value;
}

double LevyTriplet::truncated_mass(std::size_t c, double cutoff) const {
  require(cutoff > 0.0, "cutoff must be positive");
  const std::size_t j = pieces(spec_, state_).at(c).sub_index;
  const auto r = integrate([&](double s) { return levy_density_t(spec_.sub, j, t_, s); }, cutoff, INFINITY,
                           clock_quadrature(), clock_breakpoints(spec_.sub, j, t_, cutoff));
  return r.value;
}

QuadResult<double> LevyTriplet::small_jump_moment(std::size_t c) const {
  const auto ps = pieces(spec_, state_);
  const Piece& p = require_line(ps.at(c));
  const double len = p.dir.norm();
  if (len == 0.0) return {};
  const double r = 1.0 / len;
  return clock_integral(spec_.sub, p.sub_index, t_, [&](double s) {
    const auto m = truncated_moments(p.mean(s), p.var(s), r);
    return len * len * m.m2 + (1.0 - m.p);
  });
}

LevyTriplet triplet(const SubordinatedSpec& spec, double t, const LatentState& state) {
  return LevyTriplet(spec, t, state);
}

QuadResult<double> generator_apply(const SubordinatedSpec& spec, double t,
                                   const std::function<double(const Eigen::VectorXd&)>& f, const LatentState& state) {
  spec.validate();
  check_time(spec, t);
  const Eigen::VectorXd y = observed_value(spec, state);
  const double fy = f(y);
  require(std::isfinite(fy), "f must be finite at the current point");
  const auto& rule = gauss_hermite_normal(kHermiteOrder);
  QuadResult<double> out{0.0, 0.0, 0, true};
  for (const auto& p : pieces(spec, state)) {
    require_line(p);
    if (p.dir.isZero(0.0)) continue;
    auto moved = [&](double s) {
      const double m = p.mean(s), sd = std::sqrt(p.var(s));
      double acc = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        acc += rule.weights[i] * (f(y + (m + sd * rule.nodes[i]) * p.dir) - fy);
      return acc;
    };
    const auto r = clock_integral(spec.sub, p.sub_index, t, moved);
    out.value += r.value;
    out.error += r.error;
    out.evals += r.evals;
    out.converged = out.converged && r.converged;
  }
  if (!out.converged) throw NumericError("generator integral did not converge");
  return out;
}

double bv_witness(const SatoSubordinatorSpec& sub, std::size_t j, double t, double cutoff) {
  require(cutoff > 0.0 && cutoff < 1.0, "cutoff must lie in (0, 1)");
  std::vector<double> bp;
  for (double s = cutoff * 10.0; s < 1.0; s *= 10.0) bp.push_back(s);
  const auto r = integrate([&](double s) { return std::sqrt(s) * levy_density_t(sub, j, t, s); }, cutoff, 1.0,
                           clock_quadrature(), bp);
  if (!r.converged) throw NumericError("variation witness integral did not converge");
  return r.value;
}

BvClassification bv_classify(const SubordinatedSpec& spec, std::vector<double> cutoffs) {
  spec.validate();
  if (cutoffs.empty())
    for (int e = 1; e <= 8; ++e) cutoffs.push_back(std::pow(10.0, -e));
  BvClassification out;
  out.cutoffs = cutoffs;
  bool bounded = true;
  for (std::size_t j = 0; j < spec.sub.size(); ++j) {
    const double alpha = spec.sub.at(j).alpha;
    if (alpha == 0.5) out.boundary = true;
    if (alpha >= 0.5) bounded = false;
    std::vector<double> w;
    for (double c : cutoffs) w.push_back(bv_witness(spec.sub, j, 1.0, c));
    bool converged = false;
    if (w.size() >= 3) {
      // Geometric shrinkage of the per-decade increments means a finite limit.
      const double last = w[w.size() - 1] - w[w.size() - 2], prev = w[w.size() - 2] - w[w.size() - 3];
      converged = prev > 0.0 && last / prev < 0.9;
    }
    out.witness.push_back(std::move(w));
    out.witness_converged.push_back(converged);
  }
  out.kind = bounded ? Variation::bounded : Variation::unbounded;
  return out;
}

std::vector<TermStructureRow> term_structure(const SubordinatedSpec& spec, const std::vector<double>& times,
                                             std::size_t n_paths, RngStream rng, SamplerMethod method) {
  require(!times.empty(), "times must not be empty");
  require(times.front() > 0.0, "times must be positive");
  require(n_paths >= 2, "term structure needs at least two paths");
  std::vector<double> grid{0.0};
  grid.insert(grid.end(), times.begin(), times.end());
  const auto paths = sample_paths(spec, grid, n_paths, rng, method);
  const auto d = static_cast<Eigen::Index>(spec.dim());
  std::vector<TermStructureRow> rows;
  std::vector<std::vector<double>> v(static_cast<std::size_t>(d), std::vector<double>(n_paths));
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (std::size_t p = 0; p < n_paths; ++p)
      for (Eigen::Index j = 0; j < d; ++j) v[j][p] = paths[p].observed_paths(j, static_cast<Eigen::Index>(i + 1));
    TermStructureRow row;
    row.t = times[i];
    row.cov.resize(d, d);
    row.cov_error.resize(d, d);
    row.corr.resize(d, d);
    row.corr_error.resize(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const auto s = summarize<double>(v[j]);
      row.mean.push_back({s.mean, s.std_error});
      for (Eigen::Index h = 0; h < d; ++h) {
        const auto c = covariance_estimate(v[j], v[h]);
        row.cov(j, h) = c.value;
        row.cov_error(j, h) = c.std_error;
        if (j == h) {
          row.corr(j, h) = 1.0;
          row.corr_error(j, h) = 0.0;
        } else {
          const auto r = correlation_estimate(v[j], v[h]);
          row.corr(j, h) = r.value;
          row.corr_error(j, h) = r.std_error;
        }
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace addsub
