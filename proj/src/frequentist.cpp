#include "sbreak/frequentist.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "sbreak/rng.hpp"

namespace sbreak {

namespace {

LsEstimate from_ols(const Dataset& ds, const OlsFit& fit) {
  LsEstimate ls;
  ls.break_index = fit.break_index;
  ls.tau_hat = static_cast<double>(fit.break_index) / ds.T();
  ls.gamma_hat = fit.gamma_hat;
  ls.ssr = fit.ssr;
  ls.sigma2_hat = fit.ssr / (ds.T() - ds.p());
  ls.V_hat = fit.xtx / ds.T();
  ls.T = ds.T();
  return ls;
}

// Empirical quantile (inverted ECDF) of an integer sample.
long int_quantile(std::vector<long>& sorted, double q) {
  const std::size_t n = sorted.size();
  double pos = q * static_cast<double>(n) - 1.0;
  long idx = std::lround(std::ceil(pos));
  idx = std::clamp<long>(idx, 0, static_cast<long>(n) - 1);
  return sorted[idx];
}

}  // namespace

LsEstimate ls_fit(const Dataset& ds, const GramProfile& gp, const BreakGrid& grid) {
  auto profile = ssr_profile(gp, grid);
  auto best = std::min_element(profile.begin(), profile.end(),
                               [](const auto& a, const auto& b) {
                                 return a.second < b.second;  // smallest index wins ties
                               });
  // Re-solve at the argmin with the pivoted QR path.
  return from_ols(ds, ols_at_break(ds, best->first));
}

LsEstimate ls_fit(const Dataset& ds, const BreakGrid& grid) {
  GramProfile gp(ds);
  return ls_fit(ds, gp, grid);
}

LsEstimate ls_fit_at(const Dataset& ds, int break_index) {
  return from_ols(ds, ols_at_break(ds, break_index));
}

IntervalSet slope_ci(const LsEstimate& ls, const VectorXd& contrast, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must be in (0,1)");
  if (contrast.size() != ls.gamma_hat.size())
    throw ConfigError("contrast dimension mismatch");
  Eigen::LLT<MatrixXd> llt(ls.V_hat);
  if (llt.info() != Eigen::Success)
    throw NumericError("V_hat is not positive definite");
  double vinv_aa = contrast.dot(llt.solve(contrast));
  boost::math::normal_distribution<double> stdnorm;
  double z = boost::math::quantile(stdnorm, 0.5 * (1.0 + level));
  double half = z * std::sqrt(ls.sigma2_hat * vinv_aa / ls.T);
  IntervalSet out;
  out.kind = IntervalKind::slope_ci;
  out.level = level;
  out.point = contrast.dot(ls.gamma_hat);
  out.intervals = {{out.point - half, out.point + half}};
  return out;
}

IntervalSet slope_ci(const LsEstimate& ls, int component, double level) {
  const int p = static_cast<int>(ls.gamma_hat.size());
  if (component < 0 || component >= p) throw ConfigError("slope component out of range");
  VectorXd ej = VectorXd::Zero(p);
  ej(component) = 1.0;
  return slope_ci(ls, ej, level);
}

std::vector<IntervalSet> slope_ci_all(const LsEstimate& ls, double level) {
  std::vector<IntervalSet> out;
  for (int j = 0; j < ls.gamma_hat.size(); ++j) out.push_back(slope_ci(ls, j, level));
  return out;
}

IntervalSet break_ci_wstar(const LsEstimate& ls, const Dataset& ds, double level,
                           int n_sims, std::uint64_t seed, int m_range) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must be in (0,1)");
  if (n_sims < 1000) throw ConfigError("break_ci_wstar: n_sims must be >= 1000");
  WstarConfig cfg;
  cfg.delta = ls.gamma_hat.tail(ds.dz());
  cfg.sigma_z = ds.Z.transpose() * ds.Z / ds.T();
  cfg.sigma2 = ls.sigma2_hat;
  cfg.n_paths = n_sims;
  cfg.seed = seed;
  cfg.m_range = m_range > 0 ? m_range
                            : wstar_initial_range(cfg.delta, cfg.sigma_z, cfg.sigma2);
  WstarResult res = simulate_wstar_adaptive(cfg);

  std::vector<long> sorted = res.argmax;
  std::sort(sorted.begin(), sorted.end());
  double alpha = 0.5 * (1.0 - level);
  long q_lo = int_quantile(sorted, alpha);
  long q_hi = int_quantile(sorted, 1.0 - alpha);

  IntervalSet out;
  out.kind = IntervalKind::break_ci;
  out.level = level;
  out.point = ls.tau_hat;
  double lo = ls.tau_hat + static_cast<double>(q_lo) / ls.T;
  double hi = ls.tau_hat + static_cast<double>(q_hi) / ls.T;
  double eps = 0.5 / ls.T;
  out.intervals = {{std::max(lo, eps), std::min(hi, 1.0 - eps)}};
  return out;
}

std::vector<std::pair<int, double>> lr_profile(const GramProfile& gp,
                                               const BreakGrid& grid,
                                               double ssr_min) {
  std::vector<std::pair<int, double>> out;
  out.reserve(grid.size());
  for (int k : grid.indices) {
    double ssr = gp.solve(k).ssr;
    out.emplace_back(k, gp.T() * std::log(ssr / ssr_min));
  }
  return out;
}

IlrResult ilr_set(const Dataset& ds, const BreakGrid& grid, const LsEstimate& ls,
                  double level, int n_boot, std::uint64_t seed) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must be in (0,1)");
  if (n_boot < 199) throw ConfigError("ilr_set: n_boot must be >= 199");
  const int T = ds.T();
  GramProfile gp(ds);

  // Observed LR(tau) over the grid; singular candidates are skipped.
  std::vector<std::pair<int, double>> lr;
  lr.reserve(grid.size());
  int skipped = 0;
  for (int k : grid.indices) {
    try {
      double ssr = gp.solve(k).ssr;
      lr.emplace_back(k, T * std::log(ssr / ls.ssr));
    } catch (const SingularDesignError&) {
      ++skipped;
    }
  }
  if (lr.empty()) throw SingularDesignError(grid.indices.front());

  // Parametric bootstrap under the fitted model: break at tau_hat, normal
  // errors with the fitted variance. Each replicate records the LR statistic
  // at its own true break.
  MatrixXd chi_hat = build_design(ds, ls.break_index);
  VectorXd mean = chi_hat * ls.gamma_hat;
  const double sd = std::sqrt(ls.sigma2_hat);
  std::vector<double> boot_stats;
  boot_stats.reserve(n_boot);
  for (int b = 0; b < n_boot; ++b) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(b)}));
    std::normal_distribution<double> stdn(0.0, 1.0);
    VectorXd y_b(T);
    for (int t = 0; t < T; ++t) y_b(t) = mean(t) + sd * stdn(rng);
    Dataset ds_b = ds.with_response(std::move(y_b));
    GramProfile gp_b(ds_b);
    double ssr_true = -1.0, ssr_min = std::numeric_limits<double>::infinity();
    for (int k : grid.indices) {
      try {
        double ssr = gp_b.solve(k).ssr;
        if (k == ls.break_index) ssr_true = ssr;
        ssr_min = std::min(ssr_min, ssr);
      } catch (const SingularDesignError&) {
      }
    }
    if (ssr_true < 0.0) continue;  // true break singular in this replicate
    boot_stats.push_back(T * std::log(ssr_true / ssr_min));
  }
  if (boot_stats.empty()) throw NumericError("ilr_set: all bootstrap replicates failed");
  std::sort(boot_stats.begin(), boot_stats.end());
  double pos = level * static_cast<double>(boot_stats.size()) - 1.0;
  long idx = std::clamp<long>(std::lround(std::ceil(pos)), 0,
                              static_cast<long>(boot_stats.size()) - 1);
  double cstar = boot_stats[idx];

  IlrResult res;
  res.critical_value = cstar;
  res.skipped_grid_points = skipped;
  res.set.kind = IntervalKind::ilr_set;
  res.set.level = level;
  res.set.point = ls.tau_hat;
  // Union of maximal runs of consecutive grid points with LR <= c*.
  int run_lo = -1, prev_k = -2;
  for (const auto& [k, stat] : lr) {
    bool in = stat <= cstar;
    if (in) {
      res.set.grid_count += 1;
      if (run_lo < 0 || k != prev_k + 1) {
        if (run_lo >= 0)
          res.set.intervals.emplace_back(static_cast<double>(run_lo) / T,
                                         static_cast<double>(prev_k) / T);
        run_lo = k;
      }
      prev_k = k;
    } else if (run_lo >= 0 && k > prev_k) {
      res.set.intervals.emplace_back(static_cast<double>(run_lo) / T,
                                     static_cast<double>(prev_k) / T);
      run_lo = -1;
    }
  }
  if (run_lo >= 0)
    res.set.intervals.emplace_back(static_cast<double>(run_lo) / T,
                                   static_cast<double>(prev_k) / T);
  return res;
}

}  // namespace sbreak
