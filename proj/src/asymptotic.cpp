#include "sbreak/asymptotic.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "sbreak/rng.hpp"

namespace sbreak {

namespace {

void validate(const WstarConfig& cfg) {
  if (cfg.delta.size() < 1) throw ConfigError("wstar: delta must be non-empty");
  if (cfg.sigma_z.rows() != cfg.delta.size() ||
      cfg.sigma_z.cols() != cfg.delta.size())
    throw ConfigError("wstar: sigma_z dimension mismatch");
  if (!(cfg.sigma2 > 0.0)) throw ConfigError("wstar: sigma2 must be positive");
  if (cfg.m_range < 1) throw ConfigError("wstar: m_range must be >= 1");
  if (cfg.n_paths < 1) throw ConfigError("wstar: n_paths must be >= 1");
}

}  // namespace

int wstar_initial_range(const VectorXd& delta, const MatrixXd& sigma_z,
                        double sigma2) {
  double drift = delta.dot(sigma_z * delta);
  if (!(drift > 0.0)) throw ConfigError("wstar: delta'Sz delta must be positive");
  return std::max(50, static_cast<int>(std::ceil(20.0 * sigma2 / drift)));
}

WstarResult simulate_wstar(const WstarConfig& cfg) {
  validate(cfg);
  Eigen::LLT<MatrixXd> llt(cfg.sigma_z);
  if (llt.info() != Eigen::Success) throw ConfigError("wstar: sigma_z not SPD");
  // a = delta' z with z ~ N(0, Sz) is N(0, delta' Sz delta); only the scalar
  // projection of z enters W*, so draw it directly.
  const double a_sd = std::sqrt(cfg.delta.dot(cfg.sigma_z * cfg.delta));
  const double e_sd = std::sqrt(cfg.sigma2);
  const int M = cfg.m_range;

  WstarResult res;
  res.m_range = M;
  res.argmax.resize(cfg.n_paths);
  long boundary = 0;

  for (int path = 0; path < cfg.n_paths; ++path) {
    Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(path)}));
    std::normal_distribution<double> stdn(0.0, 1.0);
    double best = 0.0;  // W*(0) = 0
    long best_m = 0;
    double w_neg = 0.0, w_pos = 0.0;
    for (int m = 1; m <= M; ++m) {
      double a1 = a_sd * stdn(rng), e1 = e_sd * stdn(rng);
      double a2 = a_sd * stdn(rng), e2 = e_sd * stdn(rng);
      w_neg += -a1 * a1 + 2.0 * a1 * e1;
      w_pos += -a2 * a2 - 2.0 * a2 * e2;
      // smallest |m| first, negative arm before positive at equal |m|
      if (w_neg > best) { best = w_neg; best_m = -m; }
      if (w_pos > best) { best = w_pos; best_m = m; }
    }
    res.argmax[path] = best_m;
    if (best_m == M || best_m == -M) ++boundary;
  }
  res.boundary_fraction = static_cast<double>(boundary) / cfg.n_paths;
  return res;
}

WstarResult simulate_wstar_adaptive(WstarConfig cfg, int max_range) {
  for (;;) {
    WstarResult res = simulate_wstar(cfg);
    if (res.boundary_fraction <= 1e-3) return res;
    if (cfg.m_range >= max_range)
      throw DivergingArgmaxError(
          "wstar argmax keeps hitting the search boundary; jump size too "
          "small for the asymptotic interval to be meaningful");
    cfg.m_range = std::min(max_range, 2 * cfg.m_range);
  }
}

double q_limit(const QLimitConfig& cfg, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("q_limit: tau must be in (0,1)");
  if (!(cfg.tau0 > 0.0 && cfg.tau0 < 1.0))
    throw ConfigError("q_limit: tau0 must be in (0,1)");
  VectorXd rd = cfg.R * cfg.delta0;
  double quad = rd.dot(cfg.sigma_x * rd);  // delta0' R' Sx R delta0
  double delta_tau;
  if (tau <= cfg.tau0)
    delta_tau = (cfg.tau0 - tau) * (1.0 - cfg.tau0) / (1.0 - tau) * quad;
  else
    delta_tau = (tau - cfg.tau0) * (cfg.tau0 / tau) * quad;
  return cfg.sigma2_0 + delta_tau;
}

}  // namespace sbreak
