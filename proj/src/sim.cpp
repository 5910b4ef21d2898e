#include "sbreak/sim.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "sbreak/rng.hpp"

namespace sbreak {

namespace {

// Compensated (Kahan) accumulator so aggregation order cannot move results.
struct Kahan {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

struct EstRecord {
  bool has_gamma = false;
  double cover_g = 0.0, len_g = 0.0, delta_hat = 0.0;
  bool has_tau = false;
  double cover_t = 0.0, len_t = 0.0;
  bool has_mae = false;
  double mae_t = 0.0;
};

struct RepRecord {
  bool failed = false;
  EstRecord ls, bayes, ilr;
};

double mixture_component_draw(Rng& rng, std::normal_distribution<double>& stdn,
                              std::bernoulli_distribution& coin) {
  // 0.5 N(-1/sqrt2, 1/2) + 0.5 N(1/sqrt2, 1/2); mean 0, variance 1
  const double mu = 1.0 / std::sqrt(2.0);
  const double sd = std::sqrt(0.5);
  return (coin(rng) ? mu : -mu) + sd * stdn(rng);
}

}  // namespace

const char* tau_handling_name(TauHandling h) {
  switch (h) {
    case TauHandling::full: return "full";
    case TauHandling::fix_at_ls: return "fix_at_ls";
    case TauHandling::fix_at_true: return "fix_at_true";
  }
  return "unknown";
}

DgpSpec DgpSpec::mean_shift(int T, double tau0, double delta0, std::uint64_t seed,
                            ErrorFamily errors) {
  DgpSpec d;
  d.T = T;
  d.tau0 = tau0;
  d.delta0 = VectorXd::Constant(1, delta0);
  d.beta0 = VectorXd::Zero(1);
  d.errors = errors;
  d.R = MatrixXd::Identity(1, 1);
  d.regressors = RegressorModel::constant_only;
  d.seed = seed;
  return d;
}

void DgpSpec::validate() const {
  if (T < 20) throw ConfigError("dgp: T must be >= 20");
  if (!(tau0 > 0.0 && tau0 < 1.0)) throw ConfigError("dgp: tau0 must be in (0,1)");
  if (R.rows() < 1 || R.cols() < 1) throw ConfigError("dgp: R missing");
  if (beta0.size() != R.rows()) throw ConfigError("dgp: beta0 must have d_x entries");
  if (delta0.size() != R.cols()) throw ConfigError("dgp: delta0 must have d_z entries");
  if (errors == ErrorFamily::normal && !(sigma2 > 0.0))
    throw ConfigError("dgp: sigma2 must be positive");
  if (regressors == RegressorModel::iid_gaussian &&
      (sigma_x.rows() != R.rows() || sigma_x.cols() != R.rows()))
    throw ConfigError("dgp: sigma_x must be d_x x d_x");
}

Dataset generate(const DgpSpec& dgp, int rep_index) {
  dgp.validate();
  Rng rng(derive_seed(dgp.seed, {static_cast<std::uint64_t>(rep_index)}));
  std::normal_distribution<double> stdn(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const int T = dgp.T, dx = dgp.dx();

  MatrixXd X;
  if (dgp.regressors == RegressorModel::constant_only) {
    X = MatrixXd::Ones(T, dx);
  } else {
    Eigen::LLT<MatrixXd> llt(dgp.sigma_x);
    if (llt.info() != Eigen::Success) throw ConfigError("dgp: sigma_x not SPD");
    X.resize(T, dx);
    for (int t = 0; t < T; ++t) {
      VectorXd u(dx);
      for (int j = 0; j < dx; ++j) u(j) = stdn(rng);
      X.row(t) = (llt.matrixL() * u).transpose();
    }
  }

  const int k0 = dgp.true_break_index();
  const double sd = std::sqrt(dgp.sigma2);
  VectorXd y(T);
  for (int t = 0; t < T; ++t) {
    double eps = dgp.errors == ErrorFamily::normal
                     ? sd * stdn(rng)
                     : mixture_component_draw(rng, stdn, coin);
    double mean = X.row(t).dot(dgp.beta0);
    if (t + 1 > k0) mean += (X.row(t) * dgp.R).dot(dgp.delta0);  // t is 0-based
    y(t) = mean + eps;
  }
  return Dataset(std::move(y), std::move(X), dgp.R);
}

namespace {

RepRecord run_one_rep(const DgpSpec& dgp, const ProtocolSpec& proto, int rep) {
  RepRecord rec;
  const int k0 = dgp.true_break_index();
  const int p = dgp.dx() + dgp.dz();
  // Estimand: a'gamma. Defaults to the first delta component.
  VectorXd a = proto.contrast;
  if (a.size() == 0) {
    a = VectorXd::Zero(p);
    a(dgp.dx()) = 1.0;
  } else if (a.size() != p) {
    throw ConfigError("protocol contrast dimension mismatch");
  }
  VectorXd gamma0(p);
  gamma0 << dgp.beta0, dgp.delta0;
  const double estimand0 = a.dot(gamma0);
  const double true_frac = static_cast<double>(k0) / dgp.T;

  try {
    Dataset ds = generate(dgp, rep);
    BreakGrid grid = BreakGrid::trimmed(ds.T(), proto.trim);
    GramProfile gp(ds);
    LsEstimate ls = ls_fit(ds, gp, grid);

    if (proto.estimate_ls) {
      LsEstimate ls_for_gamma =
          proto.tau_handling == TauHandling::fix_at_true ? ls_fit_at(ds, k0) : ls;
      IntervalSet ci = slope_ci(ls_for_gamma, a, proto.level_gamma);
      rec.ls.has_gamma = true;
      rec.ls.cover_g = ci.contains(estimand0) ? 1.0 : 0.0;
      rec.ls.len_g = ci.total_length();
      rec.ls.delta_hat = a.dot(ls_for_gamma.gamma_hat);
      rec.ls.has_mae = true;
      rec.ls.mae_t = std::abs(ls.tau_hat - dgp.tau0);
      if (proto.estimate_wstar) {
        IntervalSet bci =
            break_ci_wstar(ls, ds, proto.level_tau, proto.wstar_sims,
                           derive_seed(dgp.seed, {static_cast<std::uint64_t>(rep), 11}));
        rec.ls.has_tau = true;
        rec.ls.cover_t = bci.contains(true_frac) ? 1.0 : 0.0;
        rec.ls.len_t = bci.total_length();
      }
    }

    if (proto.estimate_bayes) {
      ConjugatePrior prior = ConjugatePrior::simulation_default(ds.p());
      BreakGrid bayes_grid = grid;
      if (proto.tau_handling == TauHandling::fix_at_ls)
        bayes_grid = BreakGrid::from_indices(ds.T(), {ls.break_index});
      else if (proto.tau_handling == TauHandling::fix_at_true)
        bayes_grid = BreakGrid::from_indices(ds.T(), {k0});
      GammaMixture mix(prior, ds, bayes_grid);
      IntervalSet ci = credible_interval_gamma(mix, a, proto.level_gamma);
      rec.bayes.has_gamma = true;
      rec.bayes.cover_g = ci.contains(estimand0) ? 1.0 : 0.0;
      rec.bayes.len_g = ci.total_length();
      rec.bayes.delta_hat = a.dot(mix.mean());
      if (proto.tau_handling == TauHandling::full) {
        rec.bayes.has_mae = true;
        rec.bayes.mae_t = std::abs(mix.tau().mode_fraction() - dgp.tau0);
        IntervalSet hpd = hpd_set_tau(mix.tau(), proto.level_tau);
        rec.bayes.has_tau = true;
        rec.bayes.cover_t = hpd.contains(true_frac) ? 1.0 : 0.0;
        rec.bayes.len_t = static_cast<double>(hpd.grid_count) / ds.T();
      }
    }

    if (proto.estimate_ilr) {
      IlrResult ilr =
          ilr_set(ds, grid, ls, proto.level_tau, proto.n_boot,
                  derive_seed(dgp.seed, {static_cast<std::uint64_t>(rep), 13}));
      rec.ilr.has_tau = true;
      rec.ilr.cover_t = ilr.set.contains(true_frac) ? 1.0 : 0.0;
      rec.ilr.len_t = static_cast<double>(ilr.set.grid_count) / ds.T();
    }
  } catch (const NumericError&) {
    rec.failed = true;
  }
  return rec;
}

CellStats aggregate(const std::vector<RepRecord>& recs,
                    EstRecord RepRecord::* field, double delta0) {
  CellStats st;
  Kahan cover_g, len_g, d_sum, d_sq, cover_t, len_t, mae, mse;
  int n_g = 0, n_t = 0, n_m = 0;
  for (const auto& r : recs) {
    if (r.failed) continue;
    const EstRecord& e = r.*field;
    if (e.has_gamma) {
      ++n_g;
      cover_g.add(e.cover_g);
      len_g.add(e.len_g);
      d_sum.add(e.delta_hat);
      d_sq.add(e.delta_hat * e.delta_hat);
      double err = e.delta_hat - delta0;
      mse.add(err * err);
    }
    if (e.has_tau) {
      ++n_t;
      cover_t.add(e.cover_t);
      len_t.add(e.len_t);
    }
    if (e.has_mae) {
      ++n_m;
      mae.add(e.mae_t);
    }
  }
  if (n_g > 0) {
    st.coverage_gamma = cover_g.sum / n_g;
    st.mean_length_gamma = len_g.sum / n_g;
    st.mse_delta = mse.sum / n_g;
    st.mean_delta = d_sum.sum / n_g;
    st.var_delta = d_sq.sum / n_g - st.mean_delta * st.mean_delta;
    st.mc_se_coverage =
        std::sqrt(st.coverage_gamma * (1.0 - st.coverage_gamma) / n_g);
  }
  if (n_t > 0) {
    st.coverage_tau = cover_t.sum / n_t;
    st.mean_length_tau = len_t.sum / n_t;
    st.n_tau = n_t;
    if (n_g == 0)
      st.mc_se_coverage = std::sqrt(st.coverage_tau * (1.0 - st.coverage_tau) / n_t);
  }
  if (n_m > 0) st.mae_tau = mae.sum / n_m;
  return st;
}

}  // namespace

CellReport run_cell(const DgpSpec& dgp, const ProtocolSpec& proto) {
  dgp.validate();
  if (proto.n_reps < 1) throw ConfigError("protocol: n_reps must be >= 1");
  std::vector<RepRecord> recs(proto.n_reps);

  int n_threads = proto.n_threads;
  if (n_threads <= 0)
    n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<int>(n_threads, proto.n_reps);
  if (n_threads == 1) {
    for (int rep = 0; rep < proto.n_reps; ++rep)
      recs[rep] = run_one_rep(dgp, proto, rep);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < n_threads; ++w)
      pool.emplace_back([&]() {
        for (int rep = next.fetch_add(1); rep < proto.n_reps;
             rep = next.fetch_add(1))
          recs[rep] = run_one_rep(dgp, proto, rep);
      });
    for (auto& t : pool) t.join();
  }

  CellReport cell;
  cell.T = dgp.T;
  cell.delta0 = dgp.delta0(0);
  cell.tau0 = dgp.tau0;
  cell.protocol = proto.tau_handling;
  cell.n_reps = proto.n_reps;
  for (const auto& r : recs)
    if (r.failed) ++cell.n_failed;
  cell.n_effective = proto.n_reps - cell.n_failed;
  if (cell.n_failed > 0.01 * proto.n_reps)
    throw NumericError("run_cell: more than 1% of replications failed");

  double estimand0 = cell.delta0;
  if (proto.contrast.size() > 0) {
    VectorXd gamma0(dgp.dx() + dgp.dz());
    gamma0 << dgp.beta0, dgp.delta0;
    estimand0 = proto.contrast.dot(gamma0);
  }
  if (proto.estimate_ls)
    cell.by_estimator["ls"] = aggregate(recs, &RepRecord::ls, estimand0);
  if (proto.estimate_bayes)
    cell.by_estimator["bayes"] = aggregate(recs, &RepRecord::bayes, estimand0);
  if (proto.estimate_ilr)
    cell.by_estimator["ilr"] = aggregate(recs, &RepRecord::ilr, estimand0);
  return cell;
}

double length_ratio_summary(const ExperimentReport& report) {
  Kahan ratio;
  int n = 0;
  for (const auto& full : report.cells) {
    if (full.protocol != TauHandling::full) continue;
    auto it_full = full.by_estimator.find("bayes");
    if (it_full == full.by_estimator.end()) continue;
    for (const auto& fixed : report.cells) {
      if (fixed.protocol != TauHandling::fix_at_ls) continue;
      if (fixed.T != full.T || fixed.delta0 != full.delta0 || fixed.tau0 != full.tau0)
        continue;
      auto it_fixed = fixed.by_estimator.find("bayes");
      if (it_fixed == fixed.by_estimator.end()) continue;
      ratio.add(it_full->second.mean_length_gamma /
                    it_fixed->second.mean_length_gamma -
                1.0);
      ++n;
    }
  }
  if (n == 0)
    throw NumericError("length_ratio_summary: no matched full/fix_at_ls Bayesian cells");
  return ratio.sum / n;
}

}  // namespace sbreak
