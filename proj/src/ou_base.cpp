#include "addsub/ou_base.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "addsub/errors.hpp"

namespace addsub {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

void require_time(double t, const char* name) {
  require(t >= 0.0, std::string(name) + " must be non-negative");
}

// (1 - e^{-2 k t}) / (2 k), accurate for small k t.
double ou_variance_factor(double k, double t) { return -std::expm1(-2.0 * k * t) / (2.0 * k); }

bool is_psd(const Eigen::MatrixXd& m) {
  if (!m.isApprox(m.transpose(), 1e-12) && (m - m.transpose()).norm() > 1e-12) return false;
  if (m.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, m.norm());
}

}  // namespace

void OUSpec::validate() const {
  require(std::isfinite(k) && k > 0.0, "OU rate k must be positive");
  require(std::isfinite(theta), "OU level theta must be finite");
  require(std::isfinite(sigma) && sigma >= 0.0, "OU volatility sigma must be non-negative");
  require(std::isfinite(x0), "OU initial value must be finite");
}

void MatrixOUSpec::validate() const {
  const auto d = K.rows();
  require(d > 0 && K.cols() == d, "K must be a non-empty square matrix");
  require(theta.size() == d, "theta must have the dimension of K");
  require(x0.size() == d, "x0 must have the dimension of K");
  require(Lambda.rows() == d, "Lambda must have as many rows as K");
  require(K.allFinite() && theta.allFinite() && Lambda.allFinite() && x0.allFinite(), "matrix OU parameters must be finite");
  Eigen::EigenSolver<Eigen::MatrixXd> es(K, false);
  require(es.eigenvalues().real().minCoeff() > 0.0, "eigenvalues of K must have positive real part");
}

void FactorMOUSpec::validate() const {
  require(!idio.empty(), "factor OU needs at least one coordinate");
  require(loadings.size() == idio.size(), "one loading per coordinate is required");
  for (const auto& u : idio) {
    u.validate();
    require(u.x0 == 0.0, "idiosyncratic factors start at 0");
  }
  common.validate();
  require(common.x0 == 0.0, "the common factor starts at 0");
  for (double a : loadings) require(std::isfinite(a) && a >= 0.0, "loadings must be non-negative");
}

void MultiparamBMSpec::validate() const {
  require(!blocks.empty(), "multiparameter Brownian motion needs at least one block");
  const auto d = blocks.front().A.rows();
  require(d > 0, "block matrices must have at least one row");
  for (const auto& b : blocks) {
    const auto n = b.A.cols();
    require(b.A.rows() == d, "all blocks must map into the same dimension");
    require(n > 0 && b.mu.size() == n, "drift length must match the block width");
    require(b.Sigma.rows() == n && b.Sigma.cols() == n, "block covariance must be n_j x n_j");
    require(b.A.allFinite() && b.mu.allFinite() && b.Sigma.allFinite(), "block parameters must be finite");
    require(is_psd(b.Sigma), "block covariance must be symmetric positive semidefinite");
  }
}

std::size_t MultiparamBMSpec::dim() const {
  return blocks.empty() ? 0 : static_cast<std::size_t>(blocks.front().A.rows());
}

LatentState LatentState::zeros(std::size_t d) {
  return LatentState{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d)), 0.0,
                     Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d + 1))};
}

GaussianMoments ou_transition_moments(const OUSpec& spec, double x, double dt) {
  require_time(dt, "dt");
  const double decay = std::exp(-spec.k * dt);
  return {spec.theta + decay * (x - spec.theta), spec.sigma * spec.sigma * ou_variance_factor(spec.k, dt)};
}

GaussianVectorMoments matrix_ou_transition_moments(const MatrixOUSpec& spec, const Eigen::VectorXd& x, double dt) {
  require(std::isfinite(dt) && dt >= 0.0, "dt must be finite and non-negative");
  const auto d = spec.K.rows();
  require(x.size() == d, "state has the wrong dimension");
  if (dt == 0.0) return {x, Eigen::MatrixXd::Zero(d, d)};

  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  block.topLeftCorner(d, d) = -spec.K * dt;
  block.topRightCorner(d, d) = spec.Sigma() * dt;
  block.bottomRightCorner(d, d) = spec.K.transpose() * dt;
  const Eigen::MatrixXd e = block.exp();
  const Eigen::MatrixXd decay = e.topLeftCorner(d, d);
  const Eigen::MatrixXd raw = e.topRightCorner(d, d) * decay.transpose();
  const Eigen::MatrixXd cov = 0.5 * (raw + raw.transpose());
  if (!decay.allFinite() || !cov.allFinite()) throw NumericError("matrix exponential overflowed");
  return {spec.theta + decay * (x - spec.theta), cov};
}

double ou_sample_step(const OUSpec& spec, double x, double dt, Philox& gen) {
  const auto m = ou_transition_moments(spec, x, dt);
  if (m.var == 0.0) return m.mean;
  return m.mean + std::sqrt(m.var) * gen.normal();
}

Complex ou_char_exponent(const OUSpec& spec, double t, double xi) {
  require_time(t, "t");
  const double one_minus = -std::expm1(-spec.k * t);
  return {-spec.sigma * spec.sigma * ou_variance_factor(spec.k, t) * xi * xi / 2.0, spec.theta * one_minus * xi};
}

Complex mou_char_exponent(const FactorMOUSpec& spec, const Eigen::VectorXd& s, const Eigen::VectorXd& xi) {
  const auto d = static_cast<Eigen::Index>(spec.dim());
  require(s.size() == d + 1, "s must have d + 1 entries");
  require(xi.size() == d, "xi must have d entries");
  Complex total = 0.0;
  double zeta = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    total += ou_char_exponent(spec.idio[j], s[j], xi[j]);
    zeta += spec.loadings[j] * xi[j];
  }
  return total + ou_char_exponent(spec.common, s[d], zeta);
}

MatrixOUSpec scaled_marginal_params(const FactorMOUSpec& spec) {
  spec.validate();
  const auto d = static_cast<Eigen::Index>(spec.dim());
  Eigen::VectorXd a(d), theta(d);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    a[j] = spec.loadings[j];
    theta[j] = spec.idio[j].theta;
    sigma(j, j) = spec.idio[j].sigma * spec.idio[j].sigma / spec.idio[j].k;
  }
  // The common factor runs on the unscaled clock t, so V stays OU with K = I
  // only for a unit common rate.
  require(spec.common.k == 1.0, "scaled marginals need a common factor with k = 1");
  sigma += spec.common.sigma * spec.common.sigma * a * a.transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  MatrixOUSpec out;
  out.K = Eigen::MatrixXd::Identity(d, d);
  out.theta = theta;
  out.Lambda = es.eigenvectors() * root.asDiagonal();
  out.x0 = Eigen::VectorXd::Zero(d);
  return out;
}

double scaled_marginal_volatility(const FactorMOUSpec& spec, std::size_t j) {
  require(j < spec.dim(), "coordinate index out of range");
  const auto& u = spec.idio[j];
  require(spec.common.k == 1.0, "scaled marginals need a common factor with k = 1");
  const double a = spec.loadings[j];
  return std::sqrt(u.sigma * u.sigma / u.k + a * a * spec.common.sigma * spec.common.sigma);
}

Complex mbm_block_exponent(const BrownianBlock& block, const Eigen::VectorXd& xi) {
  require(xi.size() == block.A.rows(), "xi has the wrong dimension");
  const Eigen::VectorXd proj = block.A.transpose() * xi;
  return {-0.5 * proj.dot(block.Sigma * proj), block.mu.dot(proj)};
}

Complex mbm_char_exponent(const MultiparamBMSpec& spec, const Eigen::VectorXd& s, const Eigen::VectorXd& xi) {
  require(s.size() == static_cast<Eigen::Index>(spec.size()), "s must have one entry per block");
  Complex total = 0.0;
  for (std::size_t j = 0; j < spec.size(); ++j) {
    require_time(s[static_cast<Eigen::Index>(j)], "s_j");
    total += s[static_cast<Eigen::Index>(j)] * mbm_block_exponent(spec.blocks[j], xi);
  }
  return total;
}

}  // namespace addsub
