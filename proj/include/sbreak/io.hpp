#pragma once

#include <cstdint>
#include <string>

#include "sbreak/sim.hpp"

namespace sbreak::io {

// Sidecar schema for CSV inputs: which columns shift across the break
// (defines R), whether an intercept column is appended, and the first-column
// date label convention.
struct CsvSchema {
  bool date_column = false;            // first column is an opaque label
  bool intercept = true;               // append a leading column of ones
  std::vector<std::string> shift_columns;  // empty => all regressors shift
  std::string response_column = "y";
};

Dataset read_dataset_csv(const std::string& path, const CsvSchema& schema);
void write_dataset_csv(const Dataset& ds, const std::string& path);

// Options shared by the fit/posterior commands; parsed from JSON.
struct FitOptions {
  double trim = 0.05;
  double level_gamma = 0.90;
  double level_tau = 0.95;
  std::uint64_t seed = 0;
  int wstar_sims = 10000;
  int n_boot = 999;
  ConjugatePrior prior;  // dimension-resolved lazily; see make_prior
  bool improper_prior = false;
  double prior_h_scale = 0.1;
  double prior_a = 1.0, prior_b = 1.0;

  ConjugatePrior make_prior(int p) const;
};

struct SimulateCell {
  int T = 100;
  double tau0 = 0.5;
  double delta0 = 1.0;
  double sigma2 = 1.0;  // normal family only; the mixture is fixed
};

struct SimulateOptions {
  std::uint64_t seed = 0;
  int n_reps = 1000;
  double trim = 0.05;
  double level_gamma = 0.95;
  double level_tau = 0.95;
  ErrorFamily errors = ErrorFamily::normal;
  std::vector<TauHandling> protocols = {TauHandling::full};
  bool estimate_ls = true, estimate_bayes = true, estimate_ilr = false,
       estimate_wstar = false;
  int n_boot = 199;
  int wstar_sims = 1000;
  int n_threads = 0;
  VectorXd contrast;  // empty => first delta component
  std::vector<SimulateCell> cells;
};

// JSON bridges. Throw ConfigError on malformed input.
CsvSchema parse_csv_schema(const std::string& json_text);
FitOptions parse_fit_options(const std::string& json_text);
SimulateOptions parse_simulate_options(const std::string& json_text);

// Full fit of one dataset: both pipelines plus every interval kind.
std::string fit_report_json(const Dataset& ds, const FitOptions& opt);
// (fraction, mass) rows plus optional (tau, T^{-1}S_T, Q) triples.
std::string posterior_report_json(const Dataset& ds, const FitOptions& opt,
                                  const std::string& truth_json);
std::string simulate_report_json(const SimulateOptions& opt);
std::string wstar_report_json(const std::string& config_json);

// Aligned plain-text rendering of a simulation report (one panel per protocol).
std::string render_simulation_table(const std::string& report_json);
// Canonical CSV of the same cells.
std::string simulation_report_csv(const std::string& report_json);

// FNV-1a content hash for run manifests.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace sbreak::io
