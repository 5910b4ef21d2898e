#include "sbreak/bayes.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numbers>

#include "sbreak/rng.hpp"

namespace sbreak {

namespace {

double log_sum_exp(const VectorXd& v) {
  double m = v.maxCoeff();
  double s = 0.0;
  for (int i = 0; i < v.size(); ++i) s += std::exp(v(i) - m);
  return m + std::log(s);
}

double logdet_from_llt(const Eigen::LLT<MatrixXd>& llt) {
  double ld = 0.0;
  const auto& L = llt.matrixLLT();
  for (int i = 0; i < L.rows(); ++i) ld += std::log(L(i, i));
  return 2.0 * ld;
}

}  // namespace

ConjugatePrior ConjugatePrior::simulation_default(int p) {
  ConjugatePrior pr;
  pr.mu0 = VectorXd::Zero(p);
  pr.H0 = 0.1 * MatrixXd::Identity(p, p);
  pr.a0 = 1.0;
  pr.b0 = 1.0;
  return pr;
}

ConjugatePrior ConjugatePrior::improper_default(int p) {
  ConjugatePrior pr;
  pr.mu0 = VectorXd::Zero(p);
  pr.H0 = MatrixXd::Zero(p, p);
  pr.improper = true;
  return pr;
}

void ConjugatePrior::validate(int p, int T) const {
  if (mu0.size() != p) throw ConfigError("prior: mu0 dimension mismatch");
  if (H0.rows() != p || H0.cols() != p) throw ConfigError("prior: H0 dimension mismatch");
  if (!H0.isApprox(H0.transpose(), 1e-12)) throw ConfigError("prior: H0 must be symmetric");
  if (improper) {
    if (!H0.isZero(0.0)) throw ConfigError("prior: improper requires H0 = 0");
    if (T <= 2 * p + 2) throw ConfigError("prior: improper limit needs T > 2p + 2");
  } else {
    if (!(a0 > 0.0) || !(b0 > 0.0)) throw ConfigError("prior: a0, b0 must be positive");
    Eigen::LDLT<MatrixXd> ldlt(H0);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() < -1e-12)
      throw ConfigError("prior: H0 must be positive semi-definite");
  }
  if (tau_weights.size() > 0) {
    if (!tau_weights.allFinite() || tau_weights.minCoeff() < 0.0 ||
        tau_weights.maxCoeff() <= 0.0)
      throw ConfigError("prior: tau_weights must be finite, >= 0, not all zero");
  }
}

ConjugatePosteriorAtTau update_at_tau(const ConjugatePrior& prior,
                                      const GramProfile& gp, int break_index,
                                      int T, double log_tau_weight) {
  ConjugatePosteriorAtTau post;
  post.break_index = break_index;
  MatrixXd xtx;
  VectorXd xty;
  gp.normal_equations(break_index, xtx, xty);

  post.H_bar = prior.H0 + xtx;
  post.H_bar_llt.compute(post.H_bar);
  if (post.H_bar_llt.info() != Eigen::Success) throw SingularDesignError(break_index);
  post.logdet_H_bar = logdet_from_llt(post.H_bar_llt);

  VectorXd h_mu = prior.H0 * prior.mu0;
  post.mu_bar = post.H_bar_llt.solve(h_mu + xty);
  post.a_bar = prior.effective_a(gp.p()) + 0.5 * T;
  // b_bar = b + 0.5 [mu0'H0 mu0 + Y'Y - mu_bar' H_bar mu_bar]; the H_bar term
  // expands through the normal equations to avoid forming H_bar mu_bar anew.
  double quad = prior.mu0.dot(h_mu) + gp.yty() - post.mu_bar.dot(h_mu + xty);
  post.b_bar = prior.effective_b() + 0.5 * quad;
  if (!(post.b_bar > 0.0))
    throw DegeneratePosteriorError(
        "b_bar <= 0: exact interpolation under an (improper) prior at break " +
        std::to_string(break_index));
  post.log_ml = -0.5 * post.logdet_H_bar - post.a_bar * std::log(post.b_bar) +
                log_tau_weight;
  return post;
}

ConjugatePosteriorAtTau update_at_tau(const ConjugatePrior& prior,
                                      const Dataset& ds, int break_index,
                                      double log_tau_weight) {
  prior.validate(ds.p(), ds.T());
  GramProfile gp(ds);
  return update_at_tau(prior, gp, break_index, ds.T(), log_tau_weight);
}

double log_marginal_likelihood(const ConjugatePrior& prior, const Dataset& ds,
                               int break_index) {
  if (prior.improper)
    throw ConfigError("normalized marginal likelihood requires a proper prior");
  prior.validate(ds.p(), ds.T());
  Eigen::LLT<MatrixXd> h0(prior.H0);
  if (h0.info() != Eigen::Success)
    throw ConfigError("normalized marginal likelihood requires H0 > 0");
  auto post = update_at_tau(prior, ds, break_index);
  const double T = ds.T();
  return -0.5 * T * std::log(2.0 * std::numbers::pi) + 0.5 * logdet_from_llt(h0) -
         0.5 * post.logdet_H_bar + prior.a0 * std::log(prior.b0) -
         post.a_bar * std::log(post.b_bar) + std::lgamma(post.a_bar) -
         std::lgamma(prior.a0);
}

TauPosterior tau_posterior(const ConjugatePrior& prior, const Dataset& ds,
                           const BreakGrid& grid) {
  prior.validate(ds.p(), ds.T());
  if (prior.tau_weights.size() > 0 && prior.tau_weights.size() != grid.size())
    throw ConfigError("prior: tau_weights length must match the grid");
  GramProfile gp(ds);
  TauPosterior tp;
  tp.grid = grid;
  tp.log_probs.resize(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    double lw = prior.tau_weights.size() > 0 ? std::log(prior.tau_weights(i)) : 0.0;
    tp.log_probs(i) =
        update_at_tau(prior, gp, grid.indices[i], ds.T(), lw).log_ml;
  }
  double lse = log_sum_exp(tp.log_probs);
  tp.log_probs.array() -= lse;
  tp.mode_position = 0;
  tp.entropy = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    if (tp.log_probs(i) > tp.log_probs(tp.mode_position)) tp.mode_position = i;
    double pk = std::exp(tp.log_probs(i));
    if (pk > 0.0) tp.entropy -= pk * tp.log_probs(i);
  }
  return tp;
}

MatrixXd GammaConditional::shape() const {
  const int p = static_cast<int>(location.size());
  return scale2 * post->H_bar_llt.solve(MatrixXd::Identity(p, p));
}

double GammaConditional::marginal_scale(int j) const {
  const int p = static_cast<int>(location.size());
  VectorXd ej = VectorXd::Zero(p);
  ej(j) = 1.0;
  return std::sqrt(scale2 * ej.dot(post->H_bar_llt.solve(ej)));
}

GammaConditional gamma_conditional(const ConjugatePosteriorAtTau& post) {
  GammaConditional gc;
  gc.df = 2.0 * post.a_bar;
  gc.location = post.mu_bar;
  gc.scale2 = post.b_bar / post.a_bar;
  gc.post = &post;
  return gc;
}

Sigma2Conditional sigma2_conditional(const ConjugatePosteriorAtTau& post) {
  return {post.a_bar, post.b_bar};
}

double Sigma2Conditional::mean() const {
  if (!(a > 1.0)) throw NumericError("inverse-gamma mean requires a > 1");
  return b / (a - 1.0);
}

GammaMixture::GammaMixture(const ConjugatePrior& prior, const Dataset& ds,
                           const BreakGrid& grid)
    : p_(ds.p()) {
  prior.validate(ds.p(), ds.T());
  if (prior.tau_weights.size() > 0 && prior.tau_weights.size() != grid.size())
    throw ConfigError("prior: tau_weights length must match the grid");
  GramProfile gp(ds);
  comps_.reserve(grid.size());
  tau_.grid = grid;
  tau_.log_probs.resize(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    double lw = prior.tau_weights.size() > 0 ? std::log(prior.tau_weights(i)) : 0.0;
    comps_.push_back(update_at_tau(prior, gp, grid.indices[i], ds.T(), lw));
    tau_.log_probs(i) = comps_.back().log_ml;
  }
  tau_.log_probs.array() -= log_sum_exp(tau_.log_probs);
  tau_.mode_position = 0;
  tau_.entropy = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    if (tau_.log_probs(i) > tau_.log_probs(tau_.mode_position)) tau_.mode_position = i;
    double pk = std::exp(tau_.log_probs(i));
    if (pk > 0.0) tau_.entropy -= pk * tau_.log_probs(i);
  }
}

std::vector<GammaMixture::Marginal1D> GammaMixture::marginals(int j) const {
  if (j < 0 || j >= p_) throw ConfigError("slope component out of range");
  VectorXd ej = VectorXd::Zero(p_);
  ej(j) = 1.0;
  return marginals(ej);
}

std::vector<GammaMixture::Marginal1D> GammaMixture::marginals(
    const VectorXd& contrast) const {
  if (contrast.size() != p_) throw ConfigError("contrast dimension mismatch");
  std::vector<Marginal1D> out;
  out.reserve(comps_.size());
  for (int i = 0; i < tau_.grid.size(); ++i) {
    double w = std::exp(tau_.log_probs(i));
    if (w < 1e-16) continue;
    const auto& c = comps_[i];
    double hinv_aa = contrast.dot(c.H_bar_llt.solve(contrast));
    double scale2 = c.b_bar / c.a_bar;
    out.push_back({w, contrast.dot(c.mu_bar), std::sqrt(scale2 * hinv_aa),
                   2.0 * c.a_bar});
  }
  return out;
}

namespace {

double marginal_mixture_cdf(const std::vector<GammaMixture::Marginal1D>& ms,
                            double x) {
  double s = 0.0;
  for (const auto& m : ms) {
    boost::math::students_t_distribution<double> t(m.df);
    s += m.weight * boost::math::cdf(t, (x - m.loc) / m.scale);
  }
  return s;
}

}  // namespace

double GammaMixture::cdf(int j, double x) const {
  return marginal_mixture_cdf(marginals(j), x);
}

double GammaMixture::cdf(const VectorXd& contrast, double x) const {
  return marginal_mixture_cdf(marginals(contrast), x);
}

namespace {

double mixture_quantile(const std::vector<GammaMixture::Marginal1D>& ms, double q) {
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("quantile level must be in (0,1)");
  // Bracket from per-component extreme quantiles, then bisect to 1e-8.
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& m : ms) {
    boost::math::students_t_distribution<double> t(m.df);
    double ql = boost::math::quantile(t, std::min(q, 1e-7));
    double qh = boost::math::quantile(t, std::max(q, 1.0 - 1e-7));
    lo = std::min(lo, m.loc + ql * m.scale);
    hi = std::max(hi, m.loc + qh * m.scale);
  }
  while (hi - lo > 1e-8) {
    double mid = 0.5 * (lo + hi);
    (marginal_mixture_cdf(ms, mid) < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double GammaMixture::quantile(int j, double q) const {
  return mixture_quantile(marginals(j), q);
}

double GammaMixture::quantile(const VectorXd& contrast, double q) const {
  return mixture_quantile(marginals(contrast), q);
}

VectorXd GammaMixture::mean() const {
  VectorXd m = VectorXd::Zero(p_);
  for (int i = 0; i < tau_.grid.size(); ++i)
    m += std::exp(tau_.log_probs(i)) * comps_[i].mu_bar;
  return m;
}

double GammaMixture::log_density(const VectorXd& gamma) const {
  VectorXd terms(tau_.grid.size());
  for (int i = 0; i < tau_.grid.size(); ++i) {
    const auto& c = comps_[i];
    double v = 2.0 * c.a_bar;
    double scale2 = c.b_bar / c.a_bar;
    // q = (g - mu)' Sigma^{-1} (g - mu) with Sigma = scale2 * H_bar^{-1}
    VectorXd d = gamma - c.mu_bar;
    double q = d.dot(c.H_bar * d) / scale2;
    double logdet_sigma = p_ * std::log(scale2) - c.logdet_H_bar;
    double logf = std::lgamma(0.5 * (v + p_)) - std::lgamma(0.5 * v) -
                  0.5 * p_ * std::log(v * std::numbers::pi) - 0.5 * logdet_sigma -
                  0.5 * (v + p_) * std::log1p(q / v);
    terms(i) = tau_.log_probs(i) + logf;
  }
  return log_sum_exp(terms);
}

JointDraws sample_joint(const ConjugatePrior& prior, const Dataset& ds,
                        const BreakGrid& grid, int n_draws, std::uint64_t seed) {
  if (n_draws < 1) throw ConfigError("sample_joint: n_draws must be >= 1");
  GammaMixture mix(prior, ds, grid);
  const auto& tp = mix.tau();
  const int p = ds.p();

  VectorXd cum(tp.grid.size());
  double acc = 0.0;
  for (int i = 0; i < tp.grid.size(); ++i) {
    acc += std::exp(tp.log_probs(i));
    cum(i) = acc;
  }

  JointDraws out;
  out.tau_position.resize(n_draws);
  out.sigma2.resize(n_draws);
  out.gamma.resize(n_draws, p);
  Rng rng(derive_seed(seed, {0}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> stdn(0.0, 1.0);
  for (int s = 0; s < n_draws; ++s) {
    double u = unif(rng) * acc;
    int pos = static_cast<int>(
        std::lower_bound(cum.data(), cum.data() + cum.size(), u) - cum.data());
    pos = std::min(pos, tp.grid.size() - 1);
    out.tau_position[s] = pos;
    const auto& c = mix.components()[pos];
    std::gamma_distribution<double> gamma_dist(c.a_bar, 1.0 / c.b_bar);
    double sigma2 = 1.0 / gamma_dist(rng);
    out.sigma2(s) = sigma2;
    VectorXd u_n(p);
    for (int j = 0; j < p; ++j) u_n(j) = stdn(rng);
    // x = L^{-T} u ~ N(0, H_bar^{-1})
    VectorXd x = c.H_bar_llt.matrixU().solve(u_n);
    out.gamma.row(s) = (c.mu_bar + std::sqrt(sigma2) * x).transpose();
  }
  return out;
}

IntervalSet credible_interval_gamma(const GammaMixture& mix, int component,
                                    double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must be in (0,1)");
  double alpha = 0.5 * (1.0 - level);
  IntervalSet out;
  out.kind = IntervalKind::equal_tailed;
  out.level = level;
  out.point = mix.mean()(component);
  out.intervals = {{mix.quantile(component, alpha),
                    mix.quantile(component, 1.0 - alpha)}};
  return out;
}

IntervalSet credible_interval_gamma(const GammaMixture& mix,
                                    const VectorXd& contrast, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must be in (0,1)");
  double alpha = 0.5 * (1.0 - level);
  IntervalSet out;
  out.kind = IntervalKind::equal_tailed;
  out.level = level;
  out.point = contrast.dot(mix.mean());
  out.intervals = {{mix.quantile(contrast, alpha),
                    mix.quantile(contrast, 1.0 - alpha)}};
  return out;
}

IntervalSet credible_interval_gamma(const ConjugatePrior& prior, const Dataset& ds,
                                    const BreakGrid& grid, int component,
                                    double level) {
  GammaMixture mix(prior, ds, grid);
  return credible_interval_gamma(mix, component, level);
}

IntervalSet hpd_set_tau(const TauPosterior& tp, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must be in (0,1)");
  const int n = tp.grid.size();
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (tp.log_probs(a) != tp.log_probs(b)) return tp.log_probs(a) > tp.log_probs(b);
    return a < b;
  });
  std::vector<bool> in(n, false);
  double mass = 0.0;
  IntervalSet out;
  out.kind = IntervalKind::hpd_set;
  out.level = level;
  out.point = tp.mode_fraction();
  for (int i : order) {
    in[i] = true;
    out.grid_count += 1;
    mass += std::exp(tp.log_probs(i));
    if (mass >= level) break;
  }
  // Union of maximal runs of consecutive grid indices, as fraction intervals.
  int run_lo = -1, prev_pos = -1;
  auto close_run = [&]() {
    out.intervals.emplace_back(tp.grid.fractions[run_lo], tp.grid.fractions[prev_pos]);
    run_lo = -1;
  };
  for (int i = 0; i < n; ++i) {
    if (in[i]) {
      if (run_lo >= 0 && tp.grid.indices[i] != tp.grid.indices[prev_pos] + 1) close_run();
      if (run_lo < 0) run_lo = i;
      prev_pos = i;
    } else if (run_lo >= 0) {
      close_run();
    }
  }
  if (run_lo >= 0) close_run();
  return out;
}

BvmEstimate bvm_diagnostic(const ConjugatePrior& prior, const Dataset& ds,
                           const BreakGrid& grid, const LsEstimate& ls,
                           int n_draws, std::uint64_t seed) {
  if (n_draws < 2) throw ConfigError("bvm_diagnostic: n_draws must be >= 2");
  GammaMixture mix(prior, ds, grid);
  const int p = ds.p();
  const double sqrtT = std::sqrt(static_cast<double>(ds.T()));

  // Normal reference N(0, s2 Vhat^{-1}) for u = sqrt(T)(gamma - gamma_LS).
  Eigen::LLT<MatrixXd> vllt(ls.V_hat);
  if (vllt.info() != Eigen::Success) throw NumericError("V_hat not SPD");
  double logdet_v = logdet_from_llt(vllt);
  double log_norm_const = -0.5 * p * std::log(2.0 * std::numbers::pi *
                                              ls.sigma2_hat) +
                          0.5 * logdet_v;

  JointDraws draws = sample_joint(prior, ds, grid, n_draws, seed);
  double sum = 0.0, sumsq = 0.0;
  for (int s = 0; s < n_draws; ++s) {
    VectorXd g = draws.gamma.row(s).transpose();
    VectorXd u = sqrtT * (g - ls.gamma_hat);
    // density of u under the mixture: T^{-p/2} pi_gamma(gamma)
    double log_pi = mix.log_density(g) - 0.5 * p * std::log(static_cast<double>(ds.T()));
    double log_phi = log_norm_const - 0.5 * u.dot(ls.V_hat * u) / ls.sigma2_hat;
    double v = 0.5 * std::abs(1.0 - std::exp(log_phi - log_pi));
    sum += v;
    sumsq += v * v;
  }
  BvmEstimate est;
  est.tv = sum / n_draws;
  est.se = std::sqrt(std::max(0.0, sumsq / n_draws - est.tv * est.tv) / n_draws);
  return est;
}

}  // namespace sbreak
