#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "sbreak/bayes.hpp"
#include "sbreak/frequentist.hpp"

namespace sbreak {

enum class ErrorFamily { normal, mixture_normal };
enum class RegressorModel { constant_only, iid_gaussian };
enum class TauHandling { full, fix_at_ls, fix_at_true };

const char* tau_handling_name(TauHandling h);

// Data-generating process for one table cell.
struct DgpSpec {
  int T = 100;
  double tau0 = 0.5;
  VectorXd delta0;  // d_z
  VectorXd beta0;   // d_x
  ErrorFamily errors = ErrorFamily::normal;
  double sigma2 = 1.0;  // normal family only; the mixture is fixed
  MatrixXd R;
  RegressorModel regressors = RegressorModel::constant_only;
  MatrixXd sigma_x;  // iid_gaussian only
  std::uint64_t seed = 0;

  // Mean-shift DGP: y_t = delta0 1(t > strict-floor(tau0 T)) + eps_t.
  static DgpSpec mean_shift(int T, double tau0, double delta0, std::uint64_t seed,
                            ErrorFamily errors = ErrorFamily::normal);

  int dx() const { return static_cast<int>(R.rows()); }
  int dz() const { return static_cast<int>(R.cols()); }
  int true_break_index() const { return strict_floor_break(tau0, T); }
  void validate() const;
};

Dataset generate(const DgpSpec& dgp, int rep_index);

struct ProtocolSpec {
  TauHandling tau_handling = TauHandling::full;
  // Slope estimand a'gamma for coverage/length/MSE; empty selects the first
  // delta component.
  VectorXd contrast;
  double level_gamma = 0.95;
  double level_tau = 0.95;
  int n_reps = 1000;
  double trim = 0.05;
  bool estimate_ls = true;
  bool estimate_bayes = true;
  bool estimate_ilr = false;
  bool estimate_wstar = false;  // LS break interval via simulated W* limit
  int n_boot = 199;
  int wstar_sims = 1000;
  int n_threads = 1;  // 0 => hardware concurrency
};

// Aggregates for one (cell, estimator, protocol) combination.
struct CellStats {
  double coverage_gamma = 0.0;
  double mean_length_gamma = 0.0;
  double mse_delta = 0.0;
  double mean_delta = 0.0;  // mean point estimate
  double var_delta = 0.0;   // variance of point estimates (same sums as mse)
  double coverage_tau = 0.0;
  double mean_length_tau = 0.0;
  double mae_tau = 0.0;
  int n_tau = 0;  // reps contributing tau stats
  double mc_se_coverage = 0.0;
};

struct CellReport {
  int T = 0;
  double delta0 = 0.0;
  double tau0 = 0.0;
  TauHandling protocol = TauHandling::full;
  int n_reps = 0;
  int n_effective = 0;
  int n_failed = 0;
  std::map<std::string, CellStats> by_estimator;  // "ls", "bayes", "ilr"
};

struct ExperimentReport {
  std::vector<CellReport> cells;
};

CellReport run_cell(const DgpSpec& dgp, const ProtocolSpec& protocol);

// Mean over matched (full, fix_at_ls) Bayesian cells of
// (full length / fixed length) - 1. Throws on missing matches.
double length_ratio_summary(const ExperimentReport& report);

}  // namespace sbreak
