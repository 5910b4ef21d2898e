#pragma once

#include <cstdint>

#include "sbreak/frequentist.hpp"
#include "sbreak/model_core.hpp"

namespace sbreak {

// Normal-inverse-gamma prior on (gamma, sigma^2) plus a weight function over
// the break grid. improper=true selects the sigma^{-2} limit
// (H -> 0, a -> -p/2, b -> 0).
struct ConjugatePrior {
  VectorXd mu0;
  MatrixXd H0;
  double a0 = 1.0;
  double b0 = 1.0;
  VectorXd tau_weights;  // empty => uniform on the grid
  bool improper = false;

  // The simulation prior: H = 0.1 I, mu = 0, a = b = 1, uniform tau weights.
  static ConjugatePrior simulation_default(int p);
  static ConjugatePrior improper_default(int p);

  void validate(int p, int T) const;
  double effective_a(int p) const { return improper ? -0.5 * p : a0; }
  double effective_b() const { return improper ? 0.0 : b0; }
};

// Closed-form posterior blocks at one break index.
struct ConjugatePosteriorAtTau {
  int break_index = 0;
  MatrixXd H_bar;
  Eigen::LLT<MatrixXd> H_bar_llt;
  VectorXd mu_bar;
  double a_bar = 0.0;
  double b_bar = 0.0;
  double logdet_H_bar = 0.0;
  double log_ml = 0.0;  // up to one additive constant shared across the grid
};

// Marginal-of-gamma parameterization at fixed tau: multivariate t.
struct GammaConditional {
  double df = 0.0;      // 2 a_bar
  VectorXd location;    // mu_bar
  double scale2 = 0.0;  // b_bar / a_bar; shape = scale2 * H_bar^{-1}
  const ConjugatePosteriorAtTau* post = nullptr;

  MatrixXd shape() const;                 // (b/a) H^{-1}, materialized
  double marginal_scale(int j) const;     // sqrt(scale2 * [H^{-1}]_jj)
  double marginal_location(int j) const { return location(j); }
};

struct Sigma2Conditional {
  double a = 0.0, b = 0.0;
  double mean() const;  // b/(a-1), requires a > 1
};

// Normalized log-scale marginal posterior of tau over the grid.
struct TauPosterior {
  BreakGrid grid;
  VectorXd log_probs;  // normalized: exp sums to 1
  int mode_position = 0;
  double entropy = 0.0;

  int mode_index() const { return grid.indices[mode_position]; }
  double mode_fraction() const { return grid.fractions[mode_position]; }
  double prob(int pos) const { return std::exp(log_probs(pos)); }
};

ConjugatePosteriorAtTau update_at_tau(const ConjugatePrior& prior,
                                      const Dataset& ds, int break_index,
                                      double log_tau_weight = 0.0);
ConjugatePosteriorAtTau update_at_tau(const ConjugatePrior& prior,
                                      const GramProfile& gp, int break_index,
                                      int T, double log_tau_weight = 0.0);

// Fully normalized log marginal likelihood of one tau (proper priors only);
// integrates to the exact normal-inverse-gamma evidence.
double log_marginal_likelihood(const ConjugatePrior& prior, const Dataset& ds,
                               int break_index);

TauPosterior tau_posterior(const ConjugatePrior& prior, const Dataset& ds,
                           const BreakGrid& grid);

GammaConditional gamma_conditional(const ConjugatePosteriorAtTau& post);
Sigma2Conditional sigma2_conditional(const ConjugatePosteriorAtTau& post);

// Exact mixture over the grid: the marginal posterior of gamma.
class GammaMixture {
 public:
  GammaMixture(const ConjugatePrior& prior, const Dataset& ds,
               const BreakGrid& grid);

  const TauPosterior& tau() const { return tau_; }
  const std::vector<ConjugatePosteriorAtTau>& components() const { return comps_; }

  // Mixture CDF / density of component j of gamma (univariate t mixture).
  double cdf(int j, double x) const;
  double quantile(int j, double q) const;  // bracketed root-find, 1e-8 in x
  // Same for a linear combination a'gamma (also a univariate t mixture).
  double cdf(const VectorXd& contrast, double x) const;
  double quantile(const VectorXd& contrast, double q) const;
  VectorXd mean() const;                   // posterior mean of gamma

  // Joint log density of gamma (mixture of multivariate t's).
  double log_density(const VectorXd& gamma) const;

  // Univariate marginal mixture of component j, components below a mass
  // floor dropped.
  struct Marginal1D {
    double weight, loc, scale, df;
  };
  std::vector<Marginal1D> marginals(int j) const;
  std::vector<Marginal1D> marginals(const VectorXd& contrast) const;

 private:
  TauPosterior tau_;
  std::vector<ConjugatePosteriorAtTau> comps_;
  int p_ = 0;
};

// Exact composition sampling: tau categorical, sigma^2 inverse-gamma,
// gamma normal given (tau, sigma^2).
struct JointDraws {
  std::vector<int> tau_position;  // grid positions
  VectorXd sigma2;
  MatrixXd gamma;  // n_draws x p
};

JointDraws sample_joint(const ConjugatePrior& prior, const Dataset& ds,
                        const BreakGrid& grid, int n_draws, std::uint64_t seed);

// Equal-tailed credible interval for gamma_j from the analytic mixture CDF.
IntervalSet credible_interval_gamma(const ConjugatePrior& prior, const Dataset& ds,
                                    const BreakGrid& grid, int component,
                                    double level);
IntervalSet credible_interval_gamma(const GammaMixture& mix, int component,
                                    double level);
IntervalSet credible_interval_gamma(const GammaMixture& mix,
                                    const VectorXd& contrast, double level);

// Greedy highest-posterior-density set over the grid.
IntervalSet hpd_set_tau(const TauPosterior& tp, double level);

// Monte Carlo total-variation distance between the posterior of
// sqrt(T)(gamma - gamma_LS) and N(0, s2 Vhat^{-1}), via the analytic
// mixture density. Returns {estimate, MC standard error}.
struct BvmEstimate {
  double tv = 0.0;
  double se = 0.0;
};

BvmEstimate bvm_diagnostic(const ConjugatePrior& prior, const Dataset& ds,
                           const BreakGrid& grid, const LsEstimate& ls,
                           int n_draws, std::uint64_t seed);

}  // namespace sbreak
