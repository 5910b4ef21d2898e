#include "sbreak/model_core.hpp"

#include <Eigen/QR>
#include <cmath>

namespace sbreak {

namespace {

void check_finite(const MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw DataError(std::string("non-finite entries in ") + what);
}

}  // namespace

Dataset::Dataset(VectorXd y_in, MatrixXd X_in, MatrixXd R_in,
                 std::vector<std::string> labels_in)
    : y(std::move(y_in)), X(std::move(X_in)), R(std::move(R_in)),
      labels(std::move(labels_in)) {
  if (X.rows() != y.size()) throw DataError("y and X row counts differ");
  if (R.rows() != X.cols()) throw DataError("R row count must equal d_x");
  if (R.cols() < 1 || R.cols() > R.rows())
    throw DataError("R must be d_x x d_z with 1 <= d_z <= d_x");
  check_finite(y, "y");
  check_finite(X, "X");
  check_finite(R, "R");
  if (!labels.empty() && static_cast<int>(labels.size()) != y.size())
    throw DataError("label count must equal T");
  if (T() < p() + 2)
    throw DataError("need T >= d_x + d_z + 2 observations");
  Eigen::ColPivHouseholderQR<MatrixXd> qr(R);
  qr.setThreshold(1e-10);
  if (qr.rank() < R.cols()) throw DataError("R is rank deficient");
  Z = X * R;
}

Dataset Dataset::with_response(VectorXd y_new) const {
  Dataset out = *this;
  if (y_new.size() != y.size()) throw DataError("response length mismatch");
  check_finite(y_new, "y");
  out.y = std::move(y_new);
  return out;
}

BreakGrid BreakGrid::trimmed(int T, double trim) {
  if (!(trim > 0.0 && trim < 0.5)) throw ConfigError("trim must be in (0, 0.5)");
  BreakGrid g;
  g.trim = trim;
  for (int k = 1; k <= T - 1; ++k) {
    if (k > trim * T && k < (1.0 - trim) * T) {
      g.indices.push_back(k);
      g.fractions.push_back(static_cast<double>(k) / T);
    }
  }
  if (g.indices.empty()) throw ConfigError("trimming leaves an empty break grid");
  return g;
}

BreakGrid BreakGrid::from_indices(int T, std::vector<int> ks) {
  BreakGrid g;
  if (ks.empty()) throw ConfigError("break grid must be non-empty");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 1 || ks[i] > T - 1) throw ConfigError("break index out of range");
    if (i > 0 && ks[i] <= ks[i - 1]) throw ConfigError("break indices must be strictly ascending");
  }
  g.indices = std::move(ks);
  g.fractions.reserve(g.indices.size());
  for (int k : g.indices) g.fractions.push_back(static_cast<double>(k) / T);
  return g;
}

int BreakGrid::nearest_position(double tau) const {
  int best = 0;
  double bd = std::abs(fractions[0] - tau);
  for (int i = 1; i < size(); ++i) {
    double d = std::abs(fractions[i] - tau);
    if (d < bd) { bd = d; best = i; }
  }
  return best;
}

int BreakGrid::position_of(int k) const {
  auto it = std::lower_bound(indices.begin(), indices.end(), k);
  if (it == indices.end() || *it != k) return -1;
  return static_cast<int>(it - indices.begin());
}

const char* interval_kind_name(IntervalKind k) {
  switch (k) {
    case IntervalKind::slope_ci: return "slope_ci";
    case IntervalKind::break_ci: return "break_ci";
    case IntervalKind::ilr_set: return "ilr_set";
    case IntervalKind::hpd_set: return "hpd_set";
    case IntervalKind::equal_tailed: return "equal_tailed";
  }
  return "unknown";
}

MatrixXd build_design(const Dataset& ds, int break_index) {
  const int T = ds.T();
  if (break_index < 1 || break_index > T - 1)
    throw std::domain_error("break index must satisfy 1 <= k <= T-1");
  MatrixXd chi = MatrixXd::Zero(T, ds.p());
  chi.leftCols(ds.dx()) = ds.X;
  chi.bottomRightCorner(T - break_index, ds.dz()) =
      ds.Z.bottomRows(T - break_index);
  return chi;
}

OlsFit ols_at_break(const Dataset& ds, int break_index) {
  MatrixXd chi = build_design(ds, break_index);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(chi);
  qr.setThreshold(1e-10);
  if (qr.rank() < chi.cols()) throw SingularDesignError(break_index);
  OlsFit fit;
  fit.break_index = break_index;
  fit.gamma_hat = qr.solve(ds.y);
  fit.ssr = (ds.y - chi * fit.gamma_hat).squaredNorm();
  fit.sigma2_hat = fit.ssr / ds.T();
  fit.xtx = chi.transpose() * chi;
  return fit;
}

GramProfile::GramProfile(const Dataset& ds)
    : T_(ds.T()), dx_(ds.dx()), dz_(ds.dz()), p_(ds.p()) {
  sxx_ = ds.X.transpose() * ds.X;
  sxy_ = ds.X.transpose() * ds.y;
  syy_ = ds.y.squaredNorm();
  suf_zz_.assign(T_ + 1, MatrixXd::Zero(dz_, dz_));
  suf_zx_.assign(T_ + 1, MatrixXd::Zero(dz_, dx_));
  suf_zy_.assign(T_ + 1, VectorXd::Zero(dz_));
  for (int t = T_ - 1; t >= 0; --t) {
    VectorXd z = ds.Z.row(t).transpose();
    VectorXd x = ds.X.row(t).transpose();
    suf_zz_[t] = suf_zz_[t + 1] + z * z.transpose();
    suf_zx_[t] = suf_zx_[t + 1] + z * x.transpose();
    suf_zy_[t] = suf_zy_[t + 1] + z * ds.y(t);
  }
}

void GramProfile::normal_equations(int k, MatrixXd& xtx, VectorXd& xty) const {
  if (k < 1 || k > T_ - 1)
    throw std::domain_error("break index must satisfy 1 <= k <= T-1");
  xtx.resize(p_, p_);
  xty.resize(p_);
  xtx.topLeftCorner(dx_, dx_) = sxx_;
  xtx.bottomLeftCorner(dz_, dx_) = suf_zx_[k];
  xtx.topRightCorner(dx_, dz_) = suf_zx_[k].transpose();
  xtx.bottomRightCorner(dz_, dz_) = suf_zz_[k];
  xty.head(dx_) = sxy_;
  xty.tail(dz_) = suf_zy_[k];
}

OlsFit GramProfile::solve(int k) const {
  MatrixXd xtx;
  VectorXd xty;
  normal_equations(k, xtx, xty);
  Eigen::LDLT<MatrixXd> ldlt(xtx);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw SingularDesignError(k);
  VectorXd d = ldlt.vectorD();
  if (d.minCoeff() <= 1e-10 * d.maxCoeff()) throw SingularDesignError(k);
  OlsFit fit;
  fit.break_index = k;
  fit.gamma_hat = ldlt.solve(xty);
  fit.ssr = std::max(0.0, syy_ - fit.gamma_hat.dot(xty));
  fit.sigma2_hat = fit.ssr / T_;
  fit.xtx = std::move(xtx);
  return fit;
}

std::vector<std::pair<int, double>> ssr_profile(const GramProfile& gp,
                                                const BreakGrid& grid) {
  std::vector<std::pair<int, double>> out;
  out.reserve(grid.size());
  for (int k : grid.indices) out.emplace_back(k, gp.solve(k).ssr);
  return out;
}

std::vector<std::pair<int, double>> ssr_profile(const Dataset& ds,
                                                const BreakGrid& grid) {
  GramProfile gp(ds);
  return ssr_profile(gp, grid);
}

}  // namespace sbreak
