#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "addsub/quadrature.hpp"
#include "addsub/rng.hpp"

namespace addsub {

/// dU = -k (U - theta) dt + sigma dW, U(0) = x0.
struct OUSpec {
  double k = 1.0;
  double theta = 0.0;
  double sigma = 1.0;
  double x0 = 0.0;

  void validate() const;
};

/// dX = -K (X - theta) dt + Lambda dW, with Sigma = Lambda Lambda^T.
struct MatrixOUSpec {
  Eigen::MatrixXd K;
  Eigen::VectorXd theta;
  Eigen::MatrixXd Lambda;
  Eigen::VectorXd x0;

  void validate() const;
  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(K.rows()); }
  [[nodiscard]] Eigen::MatrixXd Sigma() const { return Lambda * Lambda.transpose(); }
};

/// X_j(s) = U_j(s_j) + a_j U(s_{d+1}) with independent one-dimensional OU
/// processes started at zero. The common factor defaults to k = 1, theta = 0, sigma = 1.
struct FactorMOUSpec {
  std::vector<OUSpec> idio;
  OUSpec common{};
  std::vector<double> loadings;

  void validate() const;
  [[nodiscard]] std::size_t dim() const { return idio.size(); }
};

/// One block of a multiparameter Brownian motion: s -> A (mu s + Sigma^{1/2} W(s)).
struct BrownianBlock {
  Eigen::MatrixXd A;
  Eigen::VectorXd mu;
  Eigen::MatrixXd Sigma;
};

/// X(s) = sum_j A_j B_j(s_j) with independent Brownian motions B_j.
struct MultiparamBMSpec {
  std::vector<BrownianBlock> blocks;

  void validate() const;
  [[nodiscard]] std::size_t dim() const;
  [[nodiscard]] std::size_t size() const { return blocks.size(); }
};

/// Current values of the base factors and the accumulated subordinated
/// clock of every parameter direction.
struct LatentState {
  Eigen::VectorXd u;
  double u_common = 0.0;
  Eigen::VectorXd clock;

  static LatentState zeros(std::size_t d);
};

struct GaussianMoments {
  double mean = 0.0;
  double var = 0.0;
};

struct GaussianVectorMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

GaussianMoments ou_transition_moments(const OUSpec& spec, double x, double dt);
/// Mean via the matrix exponential; covariance int_0^dt e^{-Ku} Sigma e^{-K^T u} du
/// from one block matrix exponential.
GaussianVectorMoments matrix_ou_transition_moments(const MatrixOUSpec& spec, const Eigen::VectorXd& x, double dt);
double ou_sample_step(const OUSpec& spec, double x, double dt, Philox& gen);

/// log E e^{i xi V(t)} for the process started at 0.
Complex ou_char_exponent(const OUSpec& spec, double t, double xi);
/// s has d + 1 entries, the last being the common-factor time.
Complex mou_char_exponent(const FactorMOUSpec& spec, const Eigen::VectorXd& s, const Eigen::VectorXd& xi);

/// Parameters of V(t) = X(t/k_1, ..., t/k_d, t), an OU process with K = I and
/// Sigma_jj = sigma_j^2 / k_j + a_j^2, Sigma_jh = a_j a_h.
MatrixOUSpec scaled_marginal_params(const FactorMOUSpec& spec);
/// sqrt(sigma_j^2 / k_j + a_j^2).
double scaled_marginal_volatility(const FactorMOUSpec& spec, std::size_t j);

/// sum_j s_j [i (A_j mu_j) . xi - xi . (A_j Sigma_j A_j^T) xi / 2].
Complex mbm_char_exponent(const MultiparamBMSpec& spec, const Eigen::VectorXd& s, const Eigen::VectorXd& xi);
/// Unit-time exponent of block j, the Levy-Khintchine symbol of A_j B_j.
Complex mbm_block_exponent(const BrownianBlock& block, const Eigen::VectorXd& xi);

}  // namespace addsub
