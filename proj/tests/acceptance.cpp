// Acceptance gate: one deterministic pass/fail line per criterion.
//
// Every numeric target below is pinned with an explicit seed so reruns are
// exact. Criteria are independent; all are attempted even after a failure,
// and the process exits nonzero if any fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "sbreak/asymptotic.hpp"
#include "sbreak/bayes.hpp"
#include "sbreak/frequentist.hpp"
#include "sbreak/io.hpp"
#include "sbreak/rng.hpp"
#include "sbreak/sim.hpp"

using namespace sbreak;
using nlohmann::json;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

void report_skip(int id, const std::string& detail) {
  std::printf("[SKIP] criterion %d: %s\n", id, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", x);
  return buf;
}

struct CellKey {
  int T;
  double delta0, tau0;
  std::string protocol;
  bool operator<(const CellKey& o) const {
    return std::tie(T, delta0, tau0, protocol) <
           std::tie(o.T, o.delta0, o.tau0, o.protocol);
  }
};

std::map<CellKey, json> run_grid(const std::string& config) {
  io::SimulateOptions opt = io::parse_simulate_options(config);
  json rep = json::parse(io::simulate_report_json(opt));
  std::map<CellKey, json> out;
  for (const auto& c : rep["cells"]) {
    CellKey k{c["T"].get<int>(), c["delta0"].get<double>(),
              c["tau0"].get<double>(), c["protocol"].get<std::string>()};
    out[k] = c;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 1: slope-interval coverage/length table at desk scale.

void criterion_1() {
  const std::string config = R"({
    "seed": 11, "n_reps": 500, "errors": "normal", "protocols": ["full"],
    "estimators": {"ls": true, "bayes": true}, "contrast": [-1.0, 1.0],
    "threads": 1,
    "cells": [{"T": 100,  "tau0": 0.5, "delta0": 0.25},
              {"T": 100,  "tau0": 0.5, "delta0": 1.0},
              {"T": 1000, "tau0": 0.5, "delta0": 0.25},
              {"T": 1000, "tau0": 0.5, "delta0": 1.0}]
  })";
  auto cells = run_grid(config);

  struct Target {
    int T;
    double delta0;
    double ls_cov, bayes_cov, ls_len, bayes_len;
  };
  const std::vector<Target> targets = {
      {100, 0.25, 0.69, 0.96, 1.61, 2.10},
      {100, 1.00, 0.96, 0.96, 1.26, 1.34},
      {1000, 0.25, 0.93, 0.96, 0.41, 0.46},
      {1000, 1.00, 0.95, 0.95, 0.39, 0.39},
  };

  bool pass = true;
  std::ostringstream detail;
  for (const Target& t : targets) {
    const json& c = cells.at({t.T, t.delta0, 0.5, "full"});
    double lc = c["estimators"]["ls"]["coverage_gamma"].get<double>();
    double bc = c["estimators"]["bayes"]["coverage_gamma"].get<double>();
    double ll = c["estimators"]["ls"]["mean_length_gamma"].get<double>();
    double bl = c["estimators"]["bayes"]["mean_length_gamma"].get<double>();
    bool ok = std::abs(lc - t.ls_cov) <= 0.04 &&
              std::abs(bc - t.bayes_cov) <= 0.03 &&
              std::abs(ll / t.ls_len - 1.0) <= 0.07 &&
              std::abs(bl / t.bayes_len - 1.0) <= 0.07;
    pass = pass && ok;
    detail << " (T=" << t.T << ",d=" << t.delta0 << ": ls " << fmt(lc) << "/"
           << fmt(ll) << ", bayes " << fmt(bc) << "/" << fmt(bl)
           << (ok ? "" : " <-OUT") << ")";
  }
  report(1, pass,
         "slope coverage/length vs pinned reference values, 4 cells, n=500" +
             detail.str());
}

// ---------------------------------------------------------------------------
// Criterion 2: fixing tau at the LS estimate reintroduces undercoverage, and
// full-mixture intervals are ~17.1% longer on average over the whole grid.

void criterion_2() {
  std::ostringstream cfg;
  cfg << R"({"seed": 11, "n_reps": 300, "errors": "normal",)"
      << R"("protocols": ["full", "fix_at_ls"],)"
      << R"("estimators": {"ls": true, "bayes": true},)"
      << R"("contrast": [-1.0, 1.0], "threads": 1, "cells": [)";
  bool first = true;
  for (double tau0 : {0.3, 0.5})
    for (double d0 : {0.25, 0.5, 1.0, 2.0})
      for (int T : {20, 50, 100, 250, 500, 1000}) {
        if (!first) cfg << ",";
        first = false;
        cfg << "{\"T\":" << T << ",\"tau0\":" << tau0 << ",\"delta0\":" << d0
            << "}";
      }
  cfg << "]}";

  io::SimulateOptions opt = io::parse_simulate_options(cfg.str());
  std::string rep_text = io::simulate_report_json(opt);
  json rep = json::parse(rep_text);

  double fixed_cov = -1.0;
  for (const auto& c : rep["cells"])
    if (c["T"] == 100 && c["delta0"] == 0.25 && c["tau0"] == 0.5 &&
        c["protocol"] == "fix_at_ls")
      fixed_cov = c["estimators"]["bayes"]["coverage_gamma"].get<double>();

  ExperimentReport er;
  for (const auto& c : rep["cells"]) {
    CellReport cr;
    cr.T = c["T"].get<int>();
    cr.delta0 = c["delta0"].get<double>();
    cr.tau0 = c["tau0"].get<double>();
    cr.protocol = c["protocol"] == "full" ? TauHandling::full
                                          : TauHandling::fix_at_ls;
    CellStats st;
    st.mean_length_gamma =
        c["estimators"]["bayes"]["mean_length_gamma"].get<double>();
    cr.by_estimator["bayes"] = st;
    er.cells.push_back(std::move(cr));
  }
  double ratio = length_ratio_summary(er);

  bool pass_cov = std::abs(fixed_cov - 0.69) <= 0.04;
  bool pass_ratio = std::abs(ratio - 0.171) <= 0.03;
  report(2, pass_cov && pass_ratio,
         "fix_at_ls bayes coverage at (T=100,d=0.25) = " + fmt(fixed_cov) +
             " (target 0.69 +-0.04); mean length ratio = " + fmt(ratio) +
             " (target 0.171 +-0.03), 48 cells x 2 protocols, n=300");
}

// ---------------------------------------------------------------------------
// Criterion 3: break-location set coverage for the ILR set and the
// simulated-limit LS interval.

void criterion_3() {
  const std::string config = R"({
    "seed": 11, "n_reps": 500, "errors": "normal", "protocols": ["full"],
    "estimators": {"ls": true, "bayes": false, "ilr": true, "wstar": true},
    "n_boot": 199, "wstar_sims": 1000, "threads": 1,
    "cells": [{"T": 100, "tau0": 0.5, "delta0": 1.0},
              {"T": 500, "tau0": 0.5, "delta0": 1.0}]
  })";
  auto cells = run_grid(config);

  struct Target {
    int T;
    double ilr_cov, wstar_cov;
  };
  const std::vector<Target> targets = {{100, 0.96, 0.91}, {500, 0.97, 0.96}};
  bool pass = true;
  std::ostringstream detail;
  for (const Target& t : targets) {
    const json& c = cells.at({t.T, 1.0, 0.5, "full"});
    double ic = c["estimators"]["ilr"]["coverage_tau"].get<double>();
    double wc = c["estimators"]["ls"]["coverage_tau"].get<double>();
    bool ok = std::abs(ic - t.ilr_cov) <= 0.04 && std::abs(wc - t.wstar_cov) <= 0.06;
    pass = pass && ok;
    detail << " (T=" << t.T << ": ilr " << fmt(ic) << " vs " << fmt(t.ilr_cov)
           << ", wstar " << fmt(wc) << " vs " << fmt(t.wstar_cov)
           << (ok ? "" : " <-OUT") << ")";
  }
  report(3, pass, "break-set coverage, n=500" + detail.str());
}

// ---------------------------------------------------------------------------
// Criterion 4: oracle equivalences.

double quadrature_log_evidence(const ConjugatePrior& prior, const Dataset& ds,
                               int k) {
  MatrixXd chi = build_design(ds, k);
  const int T = ds.T();
  MatrixXd S =
      MatrixXd::Identity(T, T) +
      chi * prior.H0.llt().solve(MatrixXd::Identity(ds.p(), ds.p())) *
          chi.transpose();
  Eigen::LLT<MatrixXd> Sllt(S);
  VectorXd w = Sllt.matrixL().solve(ds.y - chi * prior.mu0);
  double quad_form = w.squaredNorm();
  double logdet_S = 0.0;
  for (int i = 0; i < T; ++i) logdet_S += 2.0 * std::log(Sllt.matrixL()(i, i));
  auto f = [&](double s2) {
    double log_lik = -0.5 * T * std::log(2 * M_PI * s2) - 0.5 * logdet_S -
                     0.5 * quad_form / s2;
    double log_prior = prior.a0 * std::log(prior.b0) - std::lgamma(prior.a0) -
                       (prior.a0 + 1) * std::log(s2) - prior.b0 / s2;
    return std::exp(log_lik + log_prior);
  };
  double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, 0.0, std::numeric_limits<double>::infinity(), 12, 1e-10);
  return std::log(v);
}

Dataset mean_shift_data(int T, double tau0, double delta0, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n;
  int k0 = strict_floor_break(tau0, T);
  VectorXd y(T);
  for (int t = 0; t < T; ++t) y(t) = (t + 1 > k0 ? delta0 : 0.0) + n(rng);
  return Dataset(y, MatrixXd::Ones(T, 1), MatrixXd::Identity(1, 1));
}

void criterion_4() {
  bool pass = true;
  std::ostringstream detail;

  // (a) marginal likelihood vs quadrature, 20 random T=12 instances.
  {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      Dataset ds = mean_shift_data(12, 0.5, 1.0, 100 + i);
      ConjugatePrior prior = ConjugatePrior::simulation_default(ds.p());
      double engine = log_marginal_likelihood(prior, ds, 6);
      double oracle = quadrature_log_evidence(prior, ds, 6);
      worst = std::max(worst, std::abs(engine / oracle - 1.0));
    }
    bool ok = worst < 1e-6;
    pass = pass && ok;
    detail << " (a: quadrature rel err " << worst << (ok ? "" : " <-OUT") << ")";
  }

  // (b) equal-tailed endpoints vs 1e6-draw sample quantiles.
  {
    Dataset ds = mean_shift_data(100, 0.5, 1.0, 7);
    BreakGrid grid = BreakGrid::trimmed(100, 0.05);
    ConjugatePrior prior = ConjugatePrior::simulation_default(ds.p());
    GammaMixture mix(prior, ds, grid);
    IntervalSet ci = credible_interval_gamma(mix, 1, 0.95);
    JointDraws draws = sample_joint(prior, ds, grid, 1000000, 2024);
    std::vector<double> d(draws.gamma.rows());
    for (int i = 0; i < draws.gamma.rows(); ++i) d[i] = draws.gamma(i, 1);
    std::sort(d.begin(), d.end());
    auto sq = [&](double q) {
      return d[static_cast<std::size_t>(q * (d.size() - 1))];
    };
    double err = std::max(std::abs(ci.intervals[0].first - sq(0.025)),
                          std::abs(ci.intervals[0].second - sq(0.975)));
    bool ok = err < 0.005;
    pass = pass && ok;
    detail << " (b: quantile gap " << fmt(err) << (ok ? "" : " <-OUT") << ")";
  }

  // (c) SSR identity on 50 random instances.
  {
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      Dataset ds = mean_shift_data(60 + (i % 5) * 17, 0.4, 1.0, 300 + i);
      GramProfile gp(ds);
      BreakGrid grid = BreakGrid::trimmed(ds.T(), 0.05);
      for (int k : grid.indices) {
        OlsFit fit = gp.solve(k);
        MatrixXd xtx;
        VectorXd xty;
        gp.normal_equations(k, xtx, xty);
        double via_identity = gp.yty() - fit.gamma_hat.dot(xty);
        worst = std::max(worst,
                         std::abs(via_identity - fit.ssr) /
                             std::max(1.0, std::abs(fit.ssr)));
      }
    }
    bool ok = worst < 1e-10;
    pass = pass && ok;
    detail << " (c: ssr identity " << worst << (ok ? "" : " <-OUT") << ")";
  }

  // (d) T^{-1} S_T(tau) converges uniformly to Q(tau).
  {
    const int T = 10000;
    QLimitConfig q;
    q.tau0 = 0.5;
    q.sigma2_0 = 1.0;
    q.delta0 = VectorXd::Constant(1, 1.0);
    q.R = MatrixXd::Identity(1, 1);
    q.sigma_x = MatrixXd::Identity(1, 1);
    int good = 0;
    BreakGrid grid = BreakGrid::trimmed(T, 0.05);
    for (int rep = 0; rep < 100; ++rep) {
      DgpSpec dgp = DgpSpec::mean_shift(T, 0.5, 1.0, 900);
      Dataset ds = generate(dgp, rep);
      auto profile = ssr_profile(GramProfile(ds), grid);
      double gap = 0.0;
      for (int i = 0; i < grid.size(); ++i)
        gap = std::max(gap, std::abs(profile[i].second / T -
                                     q_limit(q, grid.fractions[i])));
      if (gap < 0.05) ++good;
    }
    bool ok = good >= 95;
    pass = pass && ok;
    detail << " (d: uniform-gap reps " << good << "/100" << (ok ? "" : " <-OUT")
           << ")";
  }

  // (e) limiting-law agreement of the two break estimators.
  {
    const int T = 500, n_reps = 500;
    const int k0 = strict_floor_break(0.5, T);
    std::map<int, int> pmf_ls, pmf_b;
    DgpSpec dgp = DgpSpec::mean_shift(T, 0.5, 2.0, 901);
    BreakGrid grid = BreakGrid::trimmed(T, 0.05);
    ConjugatePrior prior = ConjugatePrior::simulation_default(2);
    for (int rep = 0; rep < n_reps; ++rep) {
      Dataset ds = generate(dgp, rep);
      GramProfile gp(ds);
      LsEstimate ls = ls_fit(ds, gp, grid);
      TauPosterior tp = tau_posterior(prior, ds, grid);
      ++pmf_ls[ls.break_index - k0];
      ++pmf_b[tp.mode_index() - k0];
    }
    double tv = 0.0;
    for (int m = -30; m <= 30; ++m) {
      double pl = pmf_ls.count(m) ? pmf_ls[m] / double(n_reps) : 0.0;
      double pb = pmf_b.count(m) ? pmf_b[m] / double(n_reps) : 0.0;
      tv += 0.5 * std::abs(pl - pb);
    }
    bool ok = tv < 0.1;
    pass = pass && ok;
    detail << " (e: estimator TV " << fmt(tv) << (ok ? "" : " <-OUT") << ")";
  }

  report(4, pass, "oracle equivalences" + detail.str());
}

// ---------------------------------------------------------------------------
// Criterion 5: the posterior-vs-sampling-normal total variation shrinks
// with the sample size (median over replications, strictly decreasing).

void criterion_5() {
  std::vector<double> medians;
  for (int T : {100, 400, 1600}) {
    DgpSpec dgp = DgpSpec::mean_shift(T, 0.5, 1.0, 777);
    BreakGrid grid = BreakGrid::trimmed(T, 0.05);
    ConjugatePrior prior = ConjugatePrior::simulation_default(2);
    std::vector<double> tvs;
    for (int rep = 0; rep < 50; ++rep) {
      Dataset ds = generate(dgp, rep);
      LsEstimate ls = ls_fit(ds, grid);
      BvmEstimate e = bvm_diagnostic(prior, ds, grid, ls, 2000,
                                     derive_seed(778, {std::uint64_t(T),
                                                       std::uint64_t(rep)}));
      tvs.push_back(e.tv);
    }
    std::nth_element(tvs.begin(), tvs.begin() + 25, tvs.end());
    medians.push_back(tvs[25]);
  }
  bool pass = medians[0] > medians[1] && medians[1] > medians[2];
  report(5, pass,
         "median posterior-vs-normal TV over T=100/400/1600: " +
             fmt(medians[0]) + " > " + fmt(medians[1]) + " > " +
             fmt(medians[2]) + ", 50 reps each");
}

}  // namespace

int main() {
  // ACCEPTANCE_ONLY="3,5" restricts the run to a comma-separated subset of
  // criteria; the default runs everything.
  const char* only = std::getenv("ACCEPTANCE_ONLY");
  auto wanted = [&](int id) {
    if (!only) return true;
    std::string s(only);
    std::string needle = std::to_string(id);
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (tok == needle) return true;
    return false;
  };
  if (wanted(1)) criterion_1();
  if (wanted(2)) criterion_2();
  if (wanted(3)) criterion_3();
  if (wanted(4)) criterion_4();
  if (wanted(5)) criterion_5();
  if (wanted(6))
    report_skip(6,
                "application reproduction is data-dependent; the source CSV "
                "is not shipped, so the table is not asserted here");
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all asserted criteria passed\n");
  return 0;
}
