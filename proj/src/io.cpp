#include "sbreak/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <json.hpp>
#include <sstream>

#include "sbreak/asymptotic.hpp"
#include "sbreak/rng.hpp"

namespace sbreak::io {

using nlohmann::json;

namespace {

json parse_json(const std::string& text, const char* what) {
  try {
    return text.empty() ? json::object() : json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + ": invalid JSON: " + e.what());
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_cell(const std::string& s, std::size_t row, std::size_t col) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("csv: non-numeric value '" + s + "' at row " +
                    std::to_string(row) + ", column " + std::to_string(col + 1));
  }
}

json interval_set_json(const IntervalSet& s) {
  json j;
  j["kind"] = interval_kind_name(s.kind);
  j["level"] = s.level;
  j["point"] = s.point;
  j["intervals"] = json::array();
  for (const auto& [lo, hi] : s.intervals) j["intervals"].push_back({lo, hi});
  if (s.grid_count > 0) j["grid_count"] = s.grid_count;
  return j;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: empty file " + path);
  std::vector<std::string> header = split_csv_line(line);

  std::size_t first_data_col = schema.date_column ? 1 : 0;
  int y_col = -1;
  std::vector<int> reg_cols;
  std::vector<std::string> reg_names;
  for (std::size_t c = first_data_col; c < header.size(); ++c) {
    if (header[c] == schema.response_column) {
      if (y_col >= 0) throw DataError("csv: duplicate response column");
      y_col = static_cast<int>(c);
    } else {
      reg_cols.push_back(static_cast<int>(c));
      reg_names.push_back(header[c]);
    }
  }
  if (y_col < 0)
    throw DataError("csv: response column '" + schema.response_column +
                    "' not found in header");

  std::vector<double> ys;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("csv: row " + std::to_string(row_no) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    if (schema.date_column) labels.push_back(cells[0]);
    ys.push_back(parse_cell(cells[y_col], row_no, y_col));
    std::vector<double> r;
    r.reserve(reg_cols.size());
    for (int c : reg_cols) r.push_back(parse_cell(cells[c], row_no, c));
    rows.push_back(std::move(r));
  }
  const int T = static_cast<int>(ys.size());
  if (T == 0) throw DataError("csv: no data rows in " + path);

  const int n_named = static_cast<int>(reg_cols.size());
  const int dx = n_named + (schema.intercept ? 1 : 0);
  if (dx == 0) throw DataError("csv: no regressor columns");
  MatrixXd X(T, dx);
  VectorXd y(T);
  for (int t = 0; t < T; ++t) {
    y(t) = ys[t];
    int j = 0;
    if (schema.intercept) X(t, j++) = 1.0;
    for (int c = 0; c < n_named; ++c) X(t, j++) = rows[t][c];
  }

  // Shift columns define R; empty list means every coefficient may shift.
  std::vector<int> shift_idx;
  if (schema.shift_columns.empty()) {
    for (int j = 0; j < dx; ++j) shift_idx.push_back(j);
  } else {
    for (const auto& name : schema.shift_columns) {
      if (name == "intercept") {
        if (!schema.intercept)
          throw ConfigError("csv schema: intercept listed but not enabled");
        shift_idx.push_back(0);
        continue;
      }
      auto it = std::find(reg_names.begin(), reg_names.end(), name);
      if (it == reg_names.end())
        throw ConfigError("csv schema: unknown shift column '" + name + "'");
      shift_idx.push_back(static_cast<int>(it - reg_names.begin()) +
                          (schema.intercept ? 1 : 0));
    }
    std::sort(shift_idx.begin(), shift_idx.end());
    shift_idx.erase(std::unique(shift_idx.begin(), shift_idx.end()), shift_idx.end());
  }
  MatrixXd R = MatrixXd::Zero(dx, static_cast<int>(shift_idx.size()));
  for (std::size_t j = 0; j < shift_idx.size(); ++j) R(shift_idx[j], j) = 1.0;
  return Dataset(std::move(y), std::move(X), std::move(R), std::move(labels));
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("csv: cannot write " + path);
  out.precision(17);
  const bool labeled = !ds.labels.empty();
  if (labeled) out << "date,";
  out << "y";
  for (int j = 0; j < ds.dx(); ++j) out << ",x" << j;
  out << "\n";
  for (int t = 0; t < ds.T(); ++t) {
    if (labeled) out << ds.labels[t] << ",";
    out << ds.y(t);
    for (int j = 0; j < ds.dx(); ++j) out << "," << ds.X(t, j);
    out << "\n";
  }
}

CsvSchema parse_csv_schema(const std::string& text) {
  json j = parse_json(text, "csv schema");
  CsvSchema s;
  s.date_column = j.value("date_column", false);
  s.intercept = j.value("intercept", true);
  s.response_column = j.value("response_column", std::string("y"));
  if (j.contains("shift_columns"))
    s.shift_columns = j["shift_columns"].get<std::vector<std::string>>();
  return s;
}

ConjugatePrior FitOptions::make_prior(int p) const {
  if (improper_prior) return ConjugatePrior::improper_default(p);
  ConjugatePrior pr;
  pr.mu0 = VectorXd::Zero(p);
  pr.H0 = prior_h_scale * MatrixXd::Identity(p, p);
  pr.a0 = prior_a;
  pr.b0 = prior_b;
  return pr;
}

FitOptions parse_fit_options(const std::string& text) {
  json j = parse_json(text, "fit options");
  FitOptions o;
  o.trim = j.value("trim", 0.05);
  o.level_gamma = j.value("level_gamma", 0.90);
  o.level_tau = j.value("level_tau", 0.95);
  o.seed = j.value("seed", std::uint64_t{0});
  o.wstar_sims = j.value("wstar_sims", 10000);
  o.n_boot = j.value("n_boot", 999);
  if (!(o.trim >= 0.0 && o.trim < 0.5))
    throw ConfigError("fit options: trim must be in [0, 0.5)");
  if (!(o.level_gamma > 0.0 && o.level_gamma < 1.0) ||
      !(o.level_tau > 0.0 && o.level_tau < 1.0))
    throw ConfigError("fit options: levels must be in (0,1)");
  if (j.contains("prior")) {
    const json& p = j["prior"];
    std::string type = p.value("type", std::string("conjugate"));
    if (type == "improper") {
      o.improper_prior = true;
    } else if (type == "conjugate") {
      o.prior_h_scale = p.value("h_scale", 0.1);
      o.prior_a = p.value("a", 1.0);
      o.prior_b = p.value("b", 1.0);
    } else {
      throw ConfigError("fit options: unknown prior type '" + type + "'");
    }
  }
  return o;
}

SimulateOptions parse_simulate_options(const std::string& text) {
  json j = parse_json(text, "simulate options");
  SimulateOptions o;
  o.seed = j.value("seed", std::uint64_t{0});
  o.n_reps = j.value("n_reps", 1000);
  o.trim = j.value("trim", 0.05);
  o.level_gamma = j.value("level_gamma", 0.95);
  o.level_tau = j.value("level_tau", 0.95);
  o.n_boot = j.value("n_boot", 199);
  o.wstar_sims = j.value("wstar_sims", 1000);
  o.n_threads = j.value("threads", 0);
  std::string errs = j.value("errors", std::string("normal"));
  if (errs == "normal")
    o.errors = ErrorFamily::normal;
  else if (errs == "mixture_normal")
    o.errors = ErrorFamily::mixture_normal;
  else
    throw ConfigError("simulate options: unknown error family '" + errs + "'");
  if (j.contains("protocols")) {
    o.protocols.clear();
    for (const auto& p : j["protocols"]) {
      std::string name = p.get<std::string>();
      if (name == "full")
        o.protocols.push_back(TauHandling::full);
      else if (name == "fix_at_ls")
        o.protocols.push_back(TauHandling::fix_at_ls);
      else if (name == "fix_at_true")
        o.protocols.push_back(TauHandling::fix_at_true);
      else
        throw ConfigError("simulate options: unknown protocol '" + name + "'");
    }
  }
  if (j.contains("estimators")) {
    const json& e = j["estimators"];
    o.estimate_ls = e.value("ls", true);
    o.estimate_bayes = e.value("bayes", true);
    o.estimate_ilr = e.value("ilr", false);
    o.estimate_wstar = e.value("wstar", false);
  }
  if (j.contains("contrast")) {
    auto v = j["contrast"].get<std::vector<double>>();
    o.contrast = Eigen::Map<VectorXd>(v.data(), static_cast<int>(v.size()));
  }
  if (!j.contains("cells") || !j["cells"].is_array() || j["cells"].empty())
    throw ConfigError("simulate options: 'cells' array is required");
  for (const auto& c : j["cells"]) {
    SimulateCell cell;
    cell.T = c.value("T", 100);
    cell.tau0 = c.value("tau0", 0.5);
    cell.delta0 = c.value("delta0", 1.0);
    cell.sigma2 = c.value("sigma2", j.value("sigma2", 1.0));
    o.cells.push_back(cell);
  }
  return o;
}

std::string fit_report_json(const Dataset& ds, const FitOptions& opt) {
  BreakGrid grid = BreakGrid::trimmed(ds.T(), opt.trim);
  GramProfile gp(ds);
  LsEstimate ls = ls_fit(ds, gp, grid);

  json j;
  j["T"] = ds.T();
  j["d_x"] = ds.dx();
  j["d_z"] = ds.dz();
  j["trim"] = opt.trim;
  j["seed"] = opt.seed;
  j["levels"] = {{"gamma", opt.level_gamma}, {"tau", opt.level_tau}};

  json jls;
  jls["tau_hat"] = ls.tau_hat;
  jls["break_index"] = ls.break_index;
  if (!ds.labels.empty()) jls["break_label"] = ds.labels[ls.break_index - 1];
  jls["sigma2_hat"] = ls.sigma2_hat;
  jls["gamma_hat"] = std::vector<double>(ls.gamma_hat.data(),
                                         ls.gamma_hat.data() + ls.gamma_hat.size());
  jls["slope_ci"] = json::array();
  for (const auto& ci : slope_ci_all(ls, opt.level_gamma))
    jls["slope_ci"].push_back(interval_set_json(ci));
  jls["break_ci"] = interval_set_json(break_ci_wstar(
      ls, ds, opt.level_tau, opt.wstar_sims, derive_seed(opt.seed, {1})));
  IlrResult ilr = ilr_set(ds, grid, ls, opt.level_tau, opt.n_boot,
                          derive_seed(opt.seed, {2}));
  jls["ilr"] = interval_set_json(ilr.set);
  jls["ilr"]["critical_value"] = ilr.critical_value;
  if (ilr.skipped_grid_points > 0)
    jls["ilr"]["skipped_grid_points"] = ilr.skipped_grid_points;
  j["least_squares"] = std::move(jls);

  ConjugatePrior prior = opt.make_prior(ds.p());
  GammaMixture mix(prior, ds, grid);
  const TauPosterior& tp = mix.tau();
  json jb;
  jb["tau_mode"] = tp.mode_fraction();
  jb["mode_index"] = tp.mode_index();
  if (!ds.labels.empty()) jb["mode_label"] = ds.labels[tp.mode_index() - 1];
  jb["entropy"] = tp.entropy;
  VectorXd pm = mix.mean();
  jb["gamma_mean"] = std::vector<double>(pm.data(), pm.data() + pm.size());
  jb["credible"] = json::array();
  for (int c = 0; c < ds.p(); ++c)
    jb["credible"].push_back(
        interval_set_json(credible_interval_gamma(mix, c, opt.level_gamma)));
  jb["hpd"] = interval_set_json(hpd_set_tau(tp, opt.level_tau));
  j["bayes"] = std::move(jb);

  json dens = json::array();
  for (int i = 0; i < grid.size(); ++i)
    dens.push_back({{"fraction", grid.fractions[i]}, {"mass", tp.prob(i)}});
  j["tau_density"] = std::move(dens);
  return j.dump(2);
}

std::string posterior_report_json(const Dataset& ds, const FitOptions& opt,
                                  const std::string& truth_json) {
  BreakGrid grid = BreakGrid::trimmed(ds.T(), opt.trim);
  ConjugatePrior prior = opt.make_prior(ds.p());
  TauPosterior tp = tau_posterior(prior, ds, grid);

  json j;
  j["T"] = ds.T();
  j["mode_fraction"] = tp.mode_fraction();
  j["entropy"] = tp.entropy;
  json dens = json::array();
  for (int i = 0; i < grid.size(); ++i)
    dens.push_back({{"fraction", grid.fractions[i]}, {"mass", tp.prob(i)}});
  j["tau_density"] = std::move(dens);

  if (!truth_json.empty()) {
    json t = parse_json(truth_json, "posterior truth");
    QLimitConfig q;
    try {
      q.tau0 = t.at("tau0").get<double>();
      q.sigma2_0 = t.value("sigma2", 1.0);
      std::vector<double> d0;
      if (t.at("delta0").is_number())
        d0 = {t["delta0"].get<double>()};
      else
        d0 = t["delta0"].get<std::vector<double>>();
      q.delta0 = Eigen::Map<VectorXd>(d0.data(), static_cast<int>(d0.size()));
      q.R = ds.R;
      if (t.contains("sigma_x")) {
        auto rows = t["sigma_x"].get<std::vector<std::vector<double>>>();
        q.sigma_x.resize(rows.size(), rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r)
          for (std::size_t c = 0; c < rows.size(); ++c)
            q.sigma_x(r, c) = rows[r][c];
      } else {
        q.sigma_x = ds.X.transpose() * ds.X / ds.T();
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("posterior truth: ") + e.what());
    }
    auto profile = ssr_profile(ds, grid);
    json triples = json::array();
    for (int i = 0; i < grid.size(); ++i) {
      double tau = grid.fractions[i];
      triples.push_back({{"tau", tau},
                         {"q_T", profile[i].second / ds.T()},
                         {"q_limit", q_limit(q, tau)}});
    }
    j["q_profile"] = std::move(triples);
  }
  return j.dump(2);
}

namespace {

json cell_stats_json(const CellStats& st) {
  json j;
  j["coverage_gamma"] = st.coverage_gamma;
  j["mean_length_gamma"] = st.mean_length_gamma;
  j["mse_delta"] = st.mse_delta;
  j["mean_delta"] = st.mean_delta;
  j["var_delta"] = st.var_delta;
  j["coverage_tau"] = st.coverage_tau;
  j["mean_length_tau"] = st.mean_length_tau;
  j["mae_tau"] = st.mae_tau;
  j["n_tau"] = st.n_tau;
  j["mc_se_coverage"] = st.mc_se_coverage;
  return j;
}

}  // namespace

std::string simulate_report_json(const SimulateOptions& opt) {
  json out;
  out["seed"] = opt.seed;
  out["n_reps"] = opt.n_reps;
  out["errors"] = opt.errors == ErrorFamily::normal ? "normal" : "mixture_normal";
  out["cells"] = json::array();
  std::uint64_t cell_id = 0;
  for (const auto& c : opt.cells) {
    DgpSpec dgp = DgpSpec::mean_shift(c.T, c.tau0, c.delta0,
                                      derive_seed(opt.seed, {cell_id}), opt.errors);
    dgp.sigma2 = c.sigma2;
    for (TauHandling h : opt.protocols) {
      ProtocolSpec proto;
      proto.tau_handling = h;
      proto.contrast = opt.contrast;
      proto.level_gamma = opt.level_gamma;
      proto.level_tau = opt.level_tau;
      proto.n_reps = opt.n_reps;
      proto.trim = opt.trim;
      proto.estimate_ls = opt.estimate_ls;
      proto.estimate_bayes = opt.estimate_bayes;
      proto.estimate_ilr = opt.estimate_ilr && h == TauHandling::full;
      proto.estimate_wstar = opt.estimate_wstar && h == TauHandling::full;
      proto.n_boot = opt.n_boot;
      proto.wstar_sims = opt.wstar_sims;
      proto.n_threads = opt.n_threads;
      CellReport cell = run_cell(dgp, proto);
      json jc;
      jc["T"] = cell.T;
      jc["delta0"] = cell.delta0;
      jc["tau0"] = cell.tau0;
      jc["protocol"] = tau_handling_name(cell.protocol);
      jc["n_reps"] = cell.n_reps;
      jc["n_effective"] = cell.n_effective;
      jc["n_failed"] = cell.n_failed;
      for (const auto& [name, st] : cell.by_estimator)
        jc["estimators"][name] = cell_stats_json(st);
      out["cells"].push_back(std::move(jc));
    }
    ++cell_id;
  }
  return out.dump(2);
}

std::string wstar_report_json(const std::string& config_json) {
  json c = parse_json(config_json, "wstar config");
  WstarConfig cfg;
  int m_range = 0;
  try {
    std::vector<double> delta = c.value("delta", std::vector<double>{1.0});
    cfg.delta =
        Eigen::Map<VectorXd>(delta.data(), static_cast<int>(delta.size()));
    if (c.contains("sigma_z")) {
      auto rows = c["sigma_z"].get<std::vector<std::vector<double>>>();
      cfg.sigma_z.resize(rows.size(), rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t k = 0; k < rows.size(); ++k)
          cfg.sigma_z(r, k) = rows[r][k];
    } else {
      cfg.sigma_z = MatrixXd::Identity(cfg.delta.size(), cfg.delta.size());
    }
    cfg.sigma2 = c.value("sigma2", 1.0);
    cfg.n_paths = c.value("n_paths", 10000);
    cfg.seed = c.value("seed", std::uint64_t{0});
    m_range = c.value("m_range", 0);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("wstar config: ") + e.what());
  }
  WstarResult res;
  if (m_range > 0) {
    cfg.m_range = m_range;
    res = simulate_wstar(cfg);
  } else {
    cfg.m_range = wstar_initial_range(cfg.delta, cfg.sigma_z, cfg.sigma2);
    res = simulate_wstar_adaptive(cfg);
  }

  std::vector<long> sorted = res.argmax;
  std::sort(sorted.begin(), sorted.end());
  json out;
  out["n_paths"] = cfg.n_paths;
  out["m_range"] = res.m_range;
  out["boundary_fraction"] = res.boundary_fraction;
  json hist = json::array();
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t k = i;
    while (k < sorted.size() && sorted[k] == sorted[i]) ++k;
    hist.push_back({{"m", sorted[i]}, {"count", k - i}});
    i = k;
  }
  out["histogram"] = std::move(hist);
  std::vector<double> qs = c.value("quantiles",
                                   std::vector<double>{0.025, 0.5, 0.975});
  json jq = json::object();
  for (double q : qs) {
    double pos = q * static_cast<double>(sorted.size()) - 1.0;
    long idx = std::clamp<long>(std::lround(std::ceil(pos)), 0,
                                static_cast<long>(sorted.size()) - 1);
    jq[std::to_string(q)] = sorted[idx];
  }
  out["quantiles"] = std::move(jq);
  return out.dump(2);
}

std::string simulation_report_csv(const std::string& report_json) {
  json rep = parse_json(report_json, "simulation report");
  std::ostringstream out;
  out << "T,delta0,tau0,protocol,estimator,coverage_gamma,mean_length_gamma,"
         "mse_delta,coverage_tau,mean_length_tau,mae_tau,n_effective,"
         "mc_se_coverage\n";
  out.precision(6);
  for (const auto& c : rep["cells"]) {
    if (!c.contains("estimators")) continue;
    for (const auto& [name, st] : c["estimators"].items()) {
      out << c["T"].get<int>() << "," << c["delta0"].get<double>() << ","
          << c["tau0"].get<double>() << "," << c["protocol"].get<std::string>()
          << "," << name << "," << st["coverage_gamma"].get<double>() << ","
          << st["mean_length_gamma"].get<double>() << ","
          << st["mse_delta"].get<double>() << ","
          << st["coverage_tau"].get<double>() << ","
          << st["mean_length_tau"].get<double>() << ","
          << st["mae_tau"].get<double>() << "," << c["n_effective"].get<int>()
          << "," << st["mc_se_coverage"].get<double>() << "\n";
    }
  }
  return out.str();
}

std::string render_simulation_table(const std::string& report_json) {
  json rep = parse_json(report_json, "simulation report");
  // Panel layout per protocol: Coverage / Length / MSE blocks, one row per T,
  // one column per (estimator, delta0).
  std::map<std::string, std::vector<json>> by_protocol;
  for (const auto& c : rep["cells"])
    by_protocol[c["protocol"].get<std::string>()].push_back(c);

  std::ostringstream out;
  for (const auto& [protocol, cells] : by_protocol) {
    std::vector<int> Ts;
    std::vector<double> deltas;
    std::vector<std::string> estimators;
    for (const auto& c : cells) {
      int T = c["T"].get<int>();
      double d = c["delta0"].get<double>();
      if (std::find(Ts.begin(), Ts.end(), T) == Ts.end()) Ts.push_back(T);
      if (std::find(deltas.begin(), deltas.end(), d) == deltas.end())
        deltas.push_back(d);
      for (const auto& [name, st] : c["estimators"].items())
        if (std::find(estimators.begin(), estimators.end(), name) ==
            estimators.end())
          estimators.push_back(name);
    }
    std::sort(Ts.begin(), Ts.end());
    std::sort(deltas.begin(), deltas.end());
    std::sort(estimators.begin(), estimators.end());

    auto find_stat = [&](int T, double d, const std::string& est,
                         const char* key) -> std::string {
      for (const auto& c : cells) {
        if (c["T"].get<int>() != T || c["delta0"].get<double>() != d) continue;
        if (!c["estimators"].contains(est)) return "-";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f",
                      c["estimators"][est][key].get<double>());
        return buf;
      }
      return "-";
    };

    out << "protocol: " << protocol << "\n";
    for (const char* block : {"coverage_gamma", "mean_length_gamma", "mse_delta"}) {
      out << "  " << block << "\n";
      out << "    " << std::setw(8) << "T";
      for (const auto& est : estimators)
        for (double d : deltas) {
          std::ostringstream h;
          h << est << " d=" << d;
          out << std::setw(14) << h.str();
        }
      out << "\n";
      for (int T : Ts) {
        out << "    " << std::setw(8) << T;
        for (const auto& est : estimators)
          for (double d : deltas)
            out << std::setw(14) << find_stat(T, d, est, block);
        out << "\n";
      }
    }
    out << "\n";
  }
  return out.str();
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sbreak::io
