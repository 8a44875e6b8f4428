#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "addsub/ou_base.hpp"
#include "addsub/quadrature.hpp"
#include "addsub/rng.hpp"
#include "addsub/statistics.hpp"
#include "addsub/subordinator.hpp"

namespace addsub {

using BaseSpec = std::variant<FactorMOUSpec, MultiparamBMSpec>;

/// Y(t) = X(S(t)): a multiparameter base X run on the independent components
/// of an additive subordinator S. A factor M-OU base needs d + 1 subordinator
/// components (the last one drives the common factor); a multiparameter
/// Brownian base needs one per block.
struct SubordinatedSpec {
  BaseSpec base;
  SatoSubordinatorSpec sub;

  void validate() const;
  /// Dimension d of Y.
  [[nodiscard]] std::size_t dim() const;
  /// Number of time parameters of the base.
  [[nodiscard]] std::size_t parameter_count() const;
  /// True when the base is a multiparameter Levy process (Brownian base).
  [[nodiscard]] bool levy_base() const;
};

/// Conditioning state for a spec. For a factor M-OU base the latent factors
/// are (u, u_common); for a Brownian base u holds the current value of Y.
LatentState initial_state(const SubordinatedSpec& spec);
/// Y at a given latent state.
Eigen::VectorXd observed_value(const SubordinatedSpec& spec, const LatentState& state);

/// One simulated path. Columns follow the time grid.
struct PathBundle {
  std::vector<double> grid;
  Eigen::MatrixXd subordinator_paths;  // one row per subordinator component
  Eigen::MatrixXd latent_paths;        // d + 1 rows (U_1..U_d, U); empty for a Brownian base
  Eigen::MatrixXd observed_paths;      // d rows
  RngStream stream;
};

/// Paths start at grid[0] in `initial` (zeros when omitted). Path i draws
/// from rng.substream(i), so output does not depend on the worker count.
std::vector<PathBundle> sample_paths(const SubordinatedSpec& spec, const std::vector<double>& grid,
                                     std::size_t n_paths, RngStream rng, SamplerMethod method = {},
                                     const LatentState* initial = nullptr);

/// Y at the last grid point for each path, one row per path. Uses the same
/// random stream layout as sample_paths without storing whole paths.
Eigen::MatrixXd sample_terminal(const SubordinatedSpec& spec, const std::vector<double>& grid, std::size_t n_paths,
                                RngStream rng, SamplerMethod method = {}, const LatentState* initial = nullptr);

enum class CfMethod { quadrature, closed_form };

struct CfEval {
  Complex value;
  double error_estimate = 0.0;
  CfMethod method = CfMethod::quadrature;
};

/// E[exp(i xi . (Y(t2) - Y(t1))) | latent state at t1]. The quadrature route
/// mixes each component's conditional CF against the subordinator increment
/// law; closed_form needs a Brownian base.
CfEval cf_increment(const SubordinatedSpec& spec, double t1, double t2, const LatentState& state,
                    const Eigen::VectorXd& xi, CfMethod method = CfMethod::quadrature);

enum class SymbolMethod { triplet_integral, cf_derivative, levy_closed_form };

struct SymbolEval {
  Complex value;
  SymbolMethod method = SymbolMethod::triplet_integral;
  double error_estimate = 0.0;
};

/// q(t, x, xi) = -d/dh cf_increment(t, t + h)|_{h = 0}.
SymbolEval symbol(const SubordinatedSpec& spec, double t, const LatentState& state, const Eigen::VectorXd& xi,
                  SymbolMethod method);

/// Jump part of Y at (t, x): every subordinator component moves Y along a
/// line through the current point, with Gaussian displacement z given the
/// clock jump s. The density of nu_Y along component c is
/// int phi(z; m_c(s), v_c(s)) nu_c(t, ds) in the line coordinate z, and the
/// jump vector is z * direction(c). Lines are two-sided because the
/// displacement is Gaussian.
class LevyTriplet {
 public:
  LevyTriplet(const SubordinatedSpec& spec, double t, const LatentState& state);

  /// Compensator drift: int int y 1{|y| <= 1} nu_Y(dy).
  [[nodiscard]] const Eigen::VectorXd& gamma() const { return gamma_; }
  [[nodiscard]] double gamma_error() const { return gamma_error_; }
  /// Gaussian part, identically zero for a driftless subordinator.
  [[nodiscard]] const Eigen::MatrixXd& Sigma() const { return sigma_; }

  [[nodiscard]] std::size_t components() const { return directions_.size(); }
  [[nodiscard]] const Eigen::VectorXd& direction(std::size_t c) const { return directions_.at(c); }
  /// Density of nu_Y along component c at line coordinate z.
  [[nodiscard]] double nu_density(std::size_t c, double z) const;
  /// nu_Y mass carried by clock jumps larger than cutoff, i.e. int_cutoff^inf nu_c(t, ds).
  [[nodiscard]] double truncated_mass(std::size_t c, double cutoff) const;
  /// int (1 ^ |y|^2) nu_Y(dy) restricted to component c.
  [[nodiscard]] QuadResult<double> small_jump_moment(std::size_t c) const;

 private:
  SubordinatedSpec spec_;
  double t_;
  LatentState state_;
  Eigen::VectorXd gamma_;
  double gamma_error_ = 0.0;
  Eigen::MatrixXd sigma_;
  std::vector<Eigen::VectorXd> directions_;
};

LevyTriplet triplet(const SubordinatedSpec& spec, double t, const LatentState& state);

/// (A_t f)(x) = sum_c int_0^inf [(T^c_s f)(y) - f(y)] nu_c(t, ds), with y the
/// observed point of the state and T^c_s f computed by Gauss-Hermite quadrature.
QuadResult<double> generator_apply(const SubordinatedSpec& spec, double t,
                                   const std::function<double(const Eigen::VectorXd&)>& f, const LatentState& state);

enum class Variation { bounded, unbounded };

struct BvClassification {
  Variation kind = Variation::unbounded;
  bool boundary = false;  // some alpha equals 1/2 exactly
  /// Witness int_c^1 s^{1/2} nu_j(t, ds) at t = 1 for each cutoff c, per component.
  std::vector<double> cutoffs;
  std::vector<std::vector<double>> witness;
  /// Per component: the per-decade increments of the witness shrink (the last
  /// two differ by a ratio below 0.9).
  std::vector<bool> witness_converged;
};

/// Bounded variation iff every component has alpha < 1/2.
BvClassification bv_classify(const SubordinatedSpec& spec, std::vector<double> cutoffs = {});
/// The witness integral of one component at one cutoff.
double bv_witness(const SatoSubordinatorSpec& sub, std::size_t j, double t, double cutoff);

struct TermStructureRow {
  double t = 0.0;
  std::vector<MomentEstimate> mean;
  Eigen::MatrixXd cov, cov_error;
  Eigen::MatrixXd corr, corr_error;
};

/// Monte Carlo moments of Y(t) started at zero at time 0, for increasing times > 0.
std::vector<TermStructureRow> term_structure(const SubordinatedSpec& spec, const std::vector<double>& times,
                                             std::size_t n_paths, RngStream rng, SamplerMethod method = {});

}  // namespace addsub
